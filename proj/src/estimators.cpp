#include "xme/estimators.hpp"

#include <cmath>
#include <string>

#include "xme/errors.hpp"

namespace xme {

namespace {

struct ArmMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double var = 0.0; // sample variance
};

ArmMoments arm_moments(const StackedDataset& d, int arm) {
    ArmMoments m;
    double sum = 0.0;
    for (const auto& r : d.rows)
        if (r.sample == SampleLabel::Trial && r.treatment == arm) {
            sum += r.y_reported;
            ++m.n;
        }
    if (m.n == 0) return m;
    m.mean = sum / static_cast<double>(m.n);
    double ss = 0.0;
    for (const auto& r : d.rows)
        if (r.sample == SampleLabel::Trial && r.treatment == arm) {
            const double dev = r.y_reported - m.mean;
            ss += dev * dev;
        }
    m.var = m.n > 1 ? ss / static_cast<double>(m.n - 1) : 0.0;
    return m;
}

} // namespace

EstimateReport naive_ate(const StackedDataset& d) {
    const ArmMoments treated = arm_moments(d, 1);
    const ArmMoments control = arm_moments(d, 0);
    if (treated.n == 0) raise(ErrorCode::EmptyArm, "trial has no treated rows");
    if (control.n == 0) raise(ErrorCode::EmptyArm, "trial has no control rows");
    const double est = treated.mean - control.mean;
    const double se = std::sqrt(treated.var / static_cast<double>(treated.n) +
                                control.var / static_cast<double>(control.n));
    return EstimateReport::with_se("naive_ate", est, se,
                                   static_cast<double>(treated.n + control.n));
}

EstimateReport naive_mu0(const StackedDataset& d) {
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& r : d.rows)
        if (r.sample == SampleLabel::Validation) {
            if (!r.z_true.has_value())
                raise(ErrorCode::MissingTruth, "validation row lacks z_true");
            sum += r.y_reported - *r.z_true;
            ++n;
        }
    if (n == 0) raise(ErrorCode::MissingTruth, "no validation rows");
    const double est = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : d.rows)
        if (r.sample == SampleLabel::Validation) {
            const double dev = r.y_reported - *r.z_true - est;
            ss += dev * dev;
        }
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return EstimateReport::with_se("mu0_naive", est, sd / std::sqrt(static_cast<double>(n)),
                                   static_cast<double>(n));
}

double weighted_covariance(std::span<const double> y, std::span<const double> z,
                           std::span<const double> w) {
    if (y.size() != z.size() || y.size() != w.size())
        raise(ErrorCode::DimensionMismatch, "weighted_covariance arguments differ in length");
    double wsum = 0.0;
    for (double wi : w) {
        if (wi < 0.0) raise(ErrorCode::DegenerateWeights, "negative weight");
        wsum += wi;
    }
    if (wsum <= 0.0) raise(ErrorCode::DegenerateWeights, "weights sum to zero");
    double ybar = 0.0, zbar = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ybar += w[i] * y[i];
        zbar += w[i] * z[i];
    }
    ybar /= wsum;
    zbar /= wsum;
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        acc += w[i] * (y[i] - ybar) * (z[i] - zbar);
    return acc / wsum;
}

EstimateReport weighted_mu0(const StackedDataset& d, const WeightSet& w) {
    if (w.weights.size() != d.rows.size())
        raise(ErrorCode::DimensionMismatch, "weight vector not aligned to dataset rows");

    std::vector<double> y, z, wv;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const auto& r = d.rows[i];
        if (r.sample != SampleLabel::Validation) continue;
        if (w.weights[i] < 0.0) raise(ErrorCode::DegenerateWeights, "negative weight");
        if (!r.z_true.has_value())
            raise(ErrorCode::MissingTruth, "validation row lacks z_true");
        y.push_back(r.y_reported);
        z.push_back(*r.z_true);
        wv.push_back(w.weights[i]);
    }
    double wsum = 0.0, kish = 0.0;
    for (double wi : wv) {
        wsum += wi;
        kish += wi * wi;
    }
    if (wv.empty() || wsum <= 0.0)
        raise(ErrorCode::DegenerateWeights, "validation weights sum to zero");

    double num = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) num += wv[i] * (y[i] - z[i]);
    const double est = num / wsum;

    // var(Y* - Z*) = var(Y*) + var(Z*) - 2 cov(Y*, Z*), weighted moments.
    const double var_y = weighted_covariance(y, y, wv);
    const double var_z = weighted_covariance(z, z, wv);
    const double cov_yz = weighted_covariance(y, z, wv);
    const double var_diff = var_y + var_z - 2.0 * cov_yz;
    const double n_eff = wsum * wsum / kish;
    const double se = std::sqrt(std::max(0.0, var_diff) / static_cast<double>(y.size()));

    return EstimateReport::with_se("mu0_weighted", est, se, n_eff);
}

double analytic_ate_bias(const MeasurementErrorSpec& spec) { return spec.alpha_treat; }

double analytic_mu0_bias(const MeasurementErrorSpec& spec, const CovariateShiftSpec& shift) {
    if (spec.alpha_x.size() != shift.beta1.size())
        raise(ErrorCode::DimensionMismatch, "alpha_x and beta1 differ in length");
    double acc = 0.0;
    for (std::size_t j = 0; j < spec.alpha_x.size(); ++j)
        acc += spec.alpha_x[j] * shift.beta1[j];
    return acc;
}

std::vector<EstimateReport> corrected_ate(const StackedDataset& d,
                                          const EstimateReport& mu0_hat,
                                          const std::vector<double>& mu1_grid) {
    if (mu1_grid.empty()) raise(ErrorCode::InvalidConfig, "mu1 grid is empty");
    const EstimateReport ate = naive_ate(d);
    const double se_mu0 = mu0_hat.se.value_or(0.0);
    const double se = std::sqrt(ate.se.value_or(0.0) * ate.se.value_or(0.0) +
                                se_mu0 * se_mu0);
    std::vector<EstimateReport> out;
    out.reserve(mu1_grid.size());
    for (double mu1 : mu1_grid) {
        const double est = ate.estimate - (mu1 - mu0_hat.estimate);
        out.push_back(EstimateReport::with_se("ate_corrected", est, se, ate.n_effective));
    }
    return out;
}

double empirical_mu0_bias(const StackedDataset& d, const EstimateReport& mu0_hat) {
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& r : d.rows)
        if (r.sample == SampleLabel::Trial && r.treatment == 0) {
            if (!r.z_true.has_value())
                raise(ErrorCode::MissingTruth, "trial control row lacks z_true");
            sum += r.y_reported - *r.z_true;
            ++n;
        }
    if (n == 0) raise(ErrorCode::MissingTruth, "no trial control rows with z_true");
    return mu0_hat.estimate - sum / static_cast<double>(n);
}

} // namespace xme
