#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xme/data.hpp"
#include "xme/membership.hpp"

namespace xme {

// Shortest decimal string that parses back to exactly the same double.
// Keeps emitted CSV/JSON byte-stable across runs and thread counts.
std::string format_double(double v);

// Parsed stacked table. `membership_probs` is present when the file carries
// a `prob` column of externally computed trial-membership probabilities.
struct StackedCsv {
    StackedDataset dataset;
    std::optional<std::vector<double>> membership_probs;
};

// Stacked CSV layout: header row with required columns S ("v"/"rct"),
// A (0/1), Y; optional Z (empty field = absent) and prob; every other
// column is a numeric covariate, kept in header order.
StackedCsv parse_stacked_csv(const std::string& path);
StackedCsv parse_stacked_csv_text(const std::string& text);

std::string write_stacked_csv_text(const StackedCsv& data);
void write_stacked_csv(const std::string& path, const StackedCsv& data);

// Compact term grammar over covariate positions (1-based):
//   x1+x2+x3+x4+x3:x4+x3^2
// Mains `xK`, quadratics `xK^2`, interactions `xK:xM`. The intercept is
// always included.
TermSet parse_terms(const std::string& grammar, int covariate_count);

// Two-column numeric CSV (by header name) used by the dom subcommand.
std::vector<std::pair<double, double>> parse_two_columns(const std::string& path,
                                                         const std::string& first,
                                                         const std::string& second);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace xme
