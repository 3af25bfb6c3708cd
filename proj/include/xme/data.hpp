#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xme {

// Which study a row belongs to. Serialized as "v" / "rct".
enum class SampleLabel : unsigned char { Validation, Trial };

std::string_view label_text(SampleLabel s);
std::optional<SampleLabel> parse_label(std::string_view text);

// One observation of the stacked (validation + trial) table.
//
// `z_true` is the outcome without measurement error: required on validation
// rows, usually absent on trial rows (present in PREMIER-like data and in
// simulated replicates, where the engine keeps it as its own oracle).
struct StackedRow {
    SampleLabel sample = SampleLabel::Trial;
    int treatment = 0; // 0 control, 1 treatment; always 0 on validation rows
    double y_reported = 0.0;
    std::optional<double> z_true;
    std::vector<double> covariates;
};

struct StackedDataset {
    std::vector<StackedRow> rows;
    std::vector<std::string> covariate_names;

    std::size_t covariate_count() const { return covariate_names.size(); }
    std::size_t count(SampleLabel s) const;
    std::size_t n_validation() const { return count(SampleLabel::Validation); }
    std::size_t n_trial() const { return count(SampleLabel::Trial); }
};

// Mean/variance of the measurement error for one (sample, arm) cell.
struct ErrorMoments {
    double mu = 0.0;
    double sigma2 = 0.0; // >= 0
    SampleLabel sample = SampleLabel::Validation;
    int arm = 0;
};

// Point estimate with optional normal-theory interval (est +/- 1.96 se).
struct EstimateReport {
    std::string label;
    double estimate = 0.0;
    std::optional<double> se;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    double n_effective = 0.0;

    static EstimateReport with_se(std::string label, double estimate, double se,
                                  double n_effective);
    static EstimateReport point_only(std::string label, double estimate,
                                     double n_effective);
};

// One broken invariant. `row` is the offending row index, or -1 for
// dataset-level rules.
struct Violation {
    std::ptrdiff_t row = -1;
    std::string rule;
};

// Diagnostic invariant check; never throws, idempotent.
std::vector<Violation> validate_dataset(const StackedDataset& d);

} // namespace xme
