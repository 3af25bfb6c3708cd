#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "xme/data.hpp"
#include "xme/membership.hpp"
#include "xme/rng.hpp"

namespace xme {

// One simulation cell: covariate-shift strength gamma1, error-differentiality
// strength gamma2, the true membership-model form (1..7), sizes and seed.
struct ScenarioSpec {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    int true_model = 1;
    long population_size = 1'000'000;
    int sample_size = 1000;
    int replicates = 1000;
    std::uint64_t seed = 0;
    double y_noise_var = 1.5; // second parameter of the reported-outcome draw
};

// Base coefficients over X1..X4 and the derivation rules for higher-order
// terms: quadratics get 50% of the base coefficient, interactions the mean
// of the two bases.
struct CoefficientTable {
    std::array<double, 4> membership{}; // (g1, 0, g1/2, 2 g1)
    std::array<double, 4> error{};      // (0, g2, 2 g2, g2/2)

    static CoefficientTable scaled(double gamma1, double gamma2) {
        return {{gamma1, 0.0, 0.5 * gamma1, 2.0 * gamma1},
                {0.0, gamma2, 2.0 * gamma2, 0.5 * gamma2}};
    }
    double membership_quadratic(int j) const { return 0.5 * membership[static_cast<std::size_t>(j)]; }
    double membership_interaction(int a, int b) const {
        return 0.5 * (membership[static_cast<std::size_t>(a)] + membership[static_cast<std::size_t>(b)]);
    }
};

// Membership-model forms 1..7 over four covariates (0-based indices):
//   1: mains                4: mains + x3*x4       6: mains + x1*x4
//   2: mains + x3^2         5: mains + x3*x4 + x3^2 + x4^2
//   3: mains + x4^2         7: mains + x1*x3
// The generating predictor has no intercept; fitted forms add one.
TermSet membership_form_terms(int form, bool include_intercept);
constexpr int kMembershipForms = 7;

struct Population {
    std::vector<std::array<double, 4>> x;
    std::vector<double> prob;      // true trial-membership probability
    std::vector<unsigned char> member; // 1 = trial stratum, 0 = validation stratum
};

// X ~ independent standard normals, p = expit(true-form predictor),
// membership ~ Bernoulli(p).
Population generate_population(const ScenarioSpec& spec, Rng& rng);

// Sampled skeleton: validation rows first, then trial rows, with the true
// membership probabilities kept alongside.
struct SampleDraw {
    StackedDataset data;
    std::vector<double> true_probs;
};

// n rows without replacement from each membership stratum.
SampleDraw draw_samples(const Population& pop, int n, Rng& rng);

// Fills treatment, z_true and y_reported: Z(0) ~ N(0,1), Z(1) ~ N(2,1),
// Y(a) = Z(a) + error-model mean + noise; A ~ Bernoulli(0.5) in the trial,
// 0 in the validation sample. Both Z and Y are kept on every row.
void generate_outcomes(SampleDraw& draw, const ScenarioSpec& spec, Rng& rng);

// ASMD of the true membership probabilities, trial rows vs validation rows.
double asmd_of_true_probs(const SampleDraw& draw);
double asmd_of_true_probs(const Population& pop);

enum class Estimator { Naive = 0, WeightedTrue = 1, WeightedMains = 2 };
constexpr std::array<const char*, 3> kEstimatorNames{"naive", "weighted_true",
                                                     "weighted_mains"};

struct ReplicateEstimate {
    double value = 0.0;
    double se = 0.0;
    bool ci_covers = false;
    bool failed = false;
};

struct ReplicateResult {
    double mu0_rct_true = 0.0;   // realized trial control-arm mean error
    double asmd_true_probs = 0.0;
    double analytic_bias = 0.0;  // dot(error coefficients, realized covariate shift)
    std::array<ReplicateEstimate, 3> estimates{};
};

struct EstimatorAggregate {
    std::string estimator;
    double mean_bias = 0.0;
    double abs_mean_bias = 0.0;
    double mc_se = 0.0;
    double coverage = 0.0;
    int failed_replicates = 0;
    int used_replicates = 0;
};

struct ScenarioResult {
    ScenarioSpec scenario;
    std::array<EstimatorAggregate, 3> estimators{};
    double asmd_true_probs = 0.0;    // mean over replicates
    double analytic_bias_mean = 0.0; // mean over replicates
};

// One full replicate: regenerate population, sample, generate outcomes, fit
// both membership forms, evaluate all three estimators. Pure function of
// (spec, rep_index); fit failures are flagged per estimator.
ReplicateResult run_replicate(const ScenarioSpec& spec, int rep_index);

ScenarioResult aggregate_replicates(const ScenarioSpec& spec,
                                    const std::vector<ReplicateResult>& reps);

// OpenMP over replicates; threads <= 0 uses the runtime default. Bitwise
// identical to run_scenario_serial for any thread count.
ScenarioResult run_scenario(const ScenarioSpec& spec, int threads = 0);

// Plain-loop reference used by tests and the benchmark.
ScenarioResult run_scenario_serial(const ScenarioSpec& spec);

// Flattened scenario x replicate schedule; order-stable output.
std::vector<ScenarioResult> run_grid(const std::vector<ScenarioSpec>& specs,
                                     int parallelism);

// Cross product of the gamma grids and forms, with per-scenario seeds derived
// from (base_seed, scenario index).
std::vector<ScenarioSpec> make_grid(const std::vector<double>& gamma1,
                                    const std::vector<double>& gamma2,
                                    const std::vector<int>& true_models,
                                    std::uint64_t base_seed,
                                    const ScenarioSpec& prototype);

} // namespace xme
