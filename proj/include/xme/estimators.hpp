#pragma once

#include <span>
#include <vector>

#include "xme/data.hpp"
#include "xme/membership.hpp"

namespace xme {

// Additive error model for the reported outcome: the error mean is
// alpha0 + alpha_treat * A + alpha_x' X, with residual variance sigma_y2.
struct MeasurementErrorSpec {
    double alpha0 = 0.0;
    double alpha_treat = 0.0;
    std::vector<double> alpha_x;
    double sigma_y2 = 0.0;
};

// Covariate location model across samples: X = beta0 + beta1 * 1{S=v} + noise,
// so beta1 is the validation-minus-trial mean shift per covariate.
struct CovariateShiftSpec {
    std::vector<double> beta0;
    std::vector<double> beta1;
    std::vector<double> sigma_x2;
};

// Difference of trial arm means of the reported outcome; Welch-style SE.
EstimateReport naive_ate(const StackedDataset& d);

// Mean of (Y - Z) over validation rows.
EstimateReport naive_mu0(const StackedDataset& d);

// Weighted mean of (Y - Z) over validation rows; SE from the weighted
// variance of the paired difference.
EstimateReport weighted_mu0(const StackedDataset& d, const WeightSet& w);

// Weighted covariance sum w_i (y_i - ybar*)(z_i - zbar*) / sum w_i with
// weighted means ybar*, zbar*.
double weighted_covariance(std::span<const double> y, std::span<const double> z,
                           std::span<const double> w);

// Bias of the naive ATE under the additive error model: the differential
// error term by treatment.
double analytic_ate_bias(const MeasurementErrorSpec& spec);

// Bias of the naive validation-based mu0 estimate: dot(alpha_x, beta1).
double analytic_mu0_bias(const MeasurementErrorSpec& spec, const CovariateShiftSpec& shift);

// Sensitivity analysis: for each assumed treatment-arm error mean mu1,
// corrected ATE = naive ATE - (mu1 - mu0_hat). mu1 values are treated as
// fixed; SEs combine the two estimated components in quadrature.
std::vector<EstimateReport> corrected_ate(const StackedDataset& d,
                                          const EstimateReport& mu0_hat,
                                          const std::vector<double>& mu1_grid);

// mu0_hat minus the realized trial control-arm mean error; needs z_true on
// trial control rows.
double empirical_mu0_bias(const StackedDataset& d, const EstimateReport& mu0_hat);

} // namespace xme
