#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace xme {

// Resolved configuration of one CLI invocation. Every command writes a
// `<out>.meta.json` sidecar echoing these values, so runs are reproducible
// from their outputs alone.

struct EstimateConfig {
    std::string data_path;
    std::optional<std::string> terms; // term grammar; default mains-only
    std::optional<double> trim_quantile;
    std::vector<double> mu1_grid; // absolute mu1 values; empty = default offsets
    std::string out_base = "xportme";
};

struct WeightsConfig {
    std::string data_path;
    std::optional<std::string> terms;
    std::optional<double> trim_quantile;
    std::string out_base = "xportme";
};

struct SimulateConfig {
    std::vector<double> gamma1{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<double> gamma2{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<int> models{1, 2, 3, 4, 5, 6, 7};
    int replicates = 1000;
    int sample_size = 1000;
    long population_size = 1'000'000;
    double y_noise_var = 1.5;
    std::uint64_t seed = 0;
    int threads = 0; // <= 0: runtime default
    std::string out_base = "xportme";
};

struct DomConfig {
    std::string data_path;
    std::string fitted_column = "fitted";
    std::string true_column = "true";
    std::string out_base = "xportme";
};

// Each command runs the pipeline, writes its outputs next to `out_base`,
// and returns the paths written. Errors surface as xme::Error.
std::vector<std::string> cmd_estimate(const EstimateConfig& config);
std::vector<std::string> cmd_weights(const WeightsConfig& config);
std::vector<std::string> cmd_simulate(const SimulateConfig& config);
std::vector<std::string> cmd_dom(const DomConfig& config);

} // namespace xme
