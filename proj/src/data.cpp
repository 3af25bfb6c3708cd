#include "xme/data.hpp"

#include <string>

namespace xme {

std::string_view label_text(SampleLabel s) {
    return s == SampleLabel::Validation ? "v" : "rct";
}

std::optional<SampleLabel> parse_label(std::string_view text) {
    if (text == "v") return SampleLabel::Validation;
    if (text == "rct") return SampleLabel::Trial;
    return std::nullopt;
}

std::size_t StackedDataset::count(SampleLabel s) const {
    std::size_t n = 0;
    for (const auto& r : rows)
        if (r.sample == s) ++n;
    return n;
}

EstimateReport EstimateReport::with_se(std::string label, double estimate, double se,
                                       double n_effective) {
    EstimateReport r;
    r.label = std::move(label);
    r.estimate = estimate;
    r.se = se;
    r.ci_low = estimate - 1.96 * se;
    r.ci_high = estimate + 1.96 * se;
    r.n_effective = n_effective;
    return r;
}

EstimateReport EstimateReport::point_only(std::string label, double estimate,
                                          double n_effective) {
    EstimateReport r;
    r.label = std::move(label);
    r.estimate = estimate;
    r.n_effective = n_effective;
    return r;
}

std::vector<Violation> validate_dataset(const StackedDataset& d) {
    std::vector<Violation> out;
    const std::size_t p = d.covariate_count();

    std::size_t n_v = 0, n_rct = 0, n_treated = 0, n_control = 0;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const StackedRow& r = d.rows[i];
        const auto idx = static_cast<std::ptrdiff_t>(i);
        if (r.sample == SampleLabel::Validation) {
            ++n_v;
            if (r.treatment != 0)
                out.push_back({idx, "validation rows must be control (treatment = 0)"});
            if (!r.z_true.has_value())
                out.push_back({idx, "validation rows must carry z_true"});
        } else {
            ++n_rct;
            if (r.treatment == 1)
                ++n_treated;
            else
                ++n_control;
        }
        if (r.treatment != 0 && r.treatment != 1)
            out.push_back({idx, "treatment must be 0 or 1"});
        if (r.covariates.size() != p)
            out.push_back({idx, "covariate vector length differs from covariate_names"});
    }

    if (n_v < 2) out.push_back({-1, "need at least 2 validation rows"});
    if (n_rct < 2) out.push_back({-1, "need at least 2 trial rows"});
    if (n_rct > 0 && n_treated == 0)
        out.push_back({-1, "trial partition has no treated rows"});
    if (n_rct > 0 && n_control == 0)
        out.push_back({-1, "trial partition has no control rows"});
    return out;
}

} // namespace xme
