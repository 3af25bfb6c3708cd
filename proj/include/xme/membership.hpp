#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xme/data.hpp"

namespace xme {

// Term set of a sample-membership model over the covariate columns:
// main effects, squared terms, pairwise products, optional intercept.
// Indices are 0-based covariate positions.
struct TermSet {
    std::vector<int> main_effects;
    std::vector<int> quadratics;
    std::vector<std::pair<int, int>> interactions;
    bool include_intercept = true;

    // All four mains, ascending.
    static TermSet mains_only(int covariate_count, bool intercept = true);

    int term_count() const {
        return static_cast<int>(main_effects.size() + quadratics.size() +
                                interactions.size()) +
               (include_intercept ? 1 : 0);
    }

    // Throws DimensionMismatch on out-of-range indices, InvalidConfig on
    // duplicate terms.
    void validate(int covariate_count) const;
};

// Logistic model of trial membership, P(S = rct | x) = expit(theta' design).
struct MembershipModel {
    TermSet terms;
    Eigen::VectorXd theta;
    bool converged = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    std::vector<double> loglik_trace; // one entry per accepted IRLS step
};

struct FitOptions {
    int max_iter = 100;
    double tol = 1e-8; // on the max-norm of the score
};

// Per-row transport weights: odds e/(1-e) on validation rows, exactly 0 on
// trial rows.
struct WeightSet {
    std::vector<double> weights;
    bool trimmed = false;
    std::optional<double> trim_threshold;
    std::optional<double> trim_quantile; // quantile used ("interpolated order statistic")
};

// Design matrix with one column per term, deterministic order:
// intercept, mains ascending, quadratics ascending, interactions
// lexicographic. Raw covariate values, no standardization.
Eigen::MatrixXd build_design(const StackedDataset& d, const TermSet& terms);

// Maximum-likelihood logistic regression of 1{S = rct} on the design via
// iteratively reweighted least squares with step-halving.
MembershipModel fit_membership(const StackedDataset& d, const TermSet& terms,
                               const FitOptions& opts = {});

// expit(design * theta), clamped into the open unit interval.
std::vector<double> predict_prob(const MembershipModel& m, const StackedDataset& d);

WeightSet make_weights(const std::vector<double>& probs, const StackedDataset& d);

// Caps nonzero weights above the `upper_quantile` empirical quantile
// (interpolated order statistic) at that quantile value. Already-trimmed
// sets pass through unchanged.
WeightSet trim_weights(const WeightSet& w, double upper_quantile = 0.9);

// Empirical quantile with linear interpolation between order statistics.
double interpolated_quantile(std::vector<double> values, double q);

// Absolute standardized mean difference: |mean(a) - mean(b)| / pooled SD,
// pooled SD = sqrt((var(a) + var(b)) / 2). Sample (n-1) variances; vectors
// containing only 0/1 use the binary variance p(1-p).
double asmd(std::span<const double> a, std::span<const double> b);

struct CovariateBalance {
    std::string covariate;
    double trial_mean = 0.0;
    double validation_mean = 0.0;
    double asmd = 0.0;
};

// Per-covariate ASMD of trial rows (unweighted) vs validation rows
// (weighted moments when `w` is supplied).
std::vector<CovariateBalance> balance_table(const StackedDataset& d,
                                            const WeightSet* w = nullptr);

// Degree of misspecification: mean |fitted - truth| scaled by the sample SD
// of the truth-model probabilities.
double dom(std::span<const double> pi_fitted, std::span<const double> pi_true);

} // namespace xme
