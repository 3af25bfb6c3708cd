#include "xme/membership.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "xme/errors.hpp"

namespace xme {

namespace {

constexpr double kProbClamp = 1e-15;

double expit(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double clamp_prob(double p) {
    return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

// log(1 + exp(t)) without overflow.
double log1pexp(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& s) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        ll += s[i] * eta[i] - log1pexp(eta[i]);
    return ll;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

bool all_binary(std::span<const double> v) {
    for (double x : v)
        if (x != 0.0 && x != 1.0) return false;
    return true;
}

Moments sample_moments(std::span<const double> v, bool binary) {
    Moments m;
    const auto n = static_cast<double>(v.size());
    for (double x : v) m.mean += x;
    m.mean /= n;
    if (binary) {
        m.var = m.mean * (1.0 - m.mean);
    } else if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.var = ss / (n - 1.0);
    }
    return m;
}

// Weighted mean with reliability-corrected variance, so constant weights
// reproduce the unweighted sample moments.
Moments weighted_moments(std::span<const double> v, std::span<const double> w,
                         bool binary) {
    Moments m;
    double wsum = 0.0, w2sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        m.mean += w[i] * v[i];
        wsum += w[i];
        w2sum += w[i] * w[i];
    }
    if (wsum <= 0.0) raise(ErrorCode::DegenerateWeights, "weights sum to zero");
    m.mean /= wsum;
    if (binary) {
        m.var = m.mean * (1.0 - m.mean);
    } else {
        double ss = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            ss += w[i] * (v[i] - m.mean) * (v[i] - m.mean);
        const double denom = wsum - w2sum / wsum;
        m.var = denom > 0.0 ? ss / denom : 0.0;
    }
    return m;
}

double asmd_from_moments(const Moments& a, const Moments& b) {
    const double pooled = std::sqrt((a.var + b.var) / 2.0);
    const double gap = std::abs(a.mean - b.mean);
    if (pooled == 0.0) {
        if (gap == 0.0) return 0.0;
        raise(ErrorCode::ZeroSpread, "zero pooled SD with unequal means");
    }
    return gap / pooled;
}

} // namespace

TermSet TermSet::mains_only(int covariate_count, bool intercept) {
    TermSet t;
    t.main_effects.resize(static_cast<std::size_t>(covariate_count));
    for (int j = 0; j < covariate_count; ++j) t.main_effects[static_cast<std::size_t>(j)] = j;
    t.include_intercept = intercept;
    return t;
}

void TermSet::validate(int covariate_count) const {
    auto check_index = [&](int j) {
        if (j < 0 || j >= covariate_count)
            raise(ErrorCode::DimensionMismatch,
                  "term index " + std::to_string(j) + " outside covariate count " +
                      std::to_string(covariate_count));
    };
    std::set<int> mains, quads;
    for (int j : main_effects) {
        check_index(j);
        if (!mains.insert(j).second) raise(ErrorCode::InvalidConfig, "duplicate main effect");
    }
    for (int j : quadratics) {
        check_index(j);
        if (!quads.insert(j).second) raise(ErrorCode::InvalidConfig, "duplicate quadratic");
    }
    std::set<std::pair<int, int>> inters;
    for (auto [a, b] : interactions) {
        check_index(a);
        check_index(b);
        if (a == b) raise(ErrorCode::InvalidConfig, "self-interaction; use a quadratic term");
        auto key = std::minmax(a, b);
        if (!inters.insert(key).second) raise(ErrorCode::InvalidConfig, "duplicate interaction");
    }
}

Eigen::MatrixXd build_design(const StackedDataset& d, const TermSet& terms) {
    const int p = static_cast<int>(d.covariate_count());
    terms.validate(p);
    const auto n = static_cast<Eigen::Index>(d.rows.size());
    Eigen::MatrixXd design(n, terms.term_count());

    auto mains = terms.main_effects;
    auto quads = terms.quadratics;
    auto inters = terms.interactions;
    std::sort(mains.begin(), mains.end());
    std::sort(quads.begin(), quads.end());
    for (auto& pr : inters)
        if (pr.first > pr.second) std::swap(pr.first, pr.second);
    std::sort(inters.begin(), inters.end());

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& x = d.rows[static_cast<std::size_t>(i)].covariates;
        if (static_cast<int>(x.size()) != p)
            raise(ErrorCode::DimensionMismatch, "row covariate length differs from dataset");
        Eigen::Index c = 0;
        if (terms.include_intercept) design(i, c++) = 1.0;
        for (int j : mains) design(i, c++) = x[static_cast<std::size_t>(j)];
        for (int j : quads) {
            const double v = x[static_cast<std::size_t>(j)];
            design(i, c++) = v * v;
        }
        for (auto [a, b] : inters)
            design(i, c++) = x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(b)];
    }
    return design;
}

MembershipModel fit_membership(const StackedDataset& d, const TermSet& terms,
                               const FitOptions& opts) {
    if (d.n_validation() == 0 || d.n_trial() == 0)
        raise(ErrorCode::InvalidConfig, "both samples must be nonempty");

    const Eigen::MatrixXd design = build_design(d, terms);
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k)
        raise(ErrorCode::RankDeficient, "design matrix is rank deficient");

    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i)
        s[i] = d.rows[static_cast<std::size_t>(i)].sample == SampleLabel::Trial ? 1.0 : 0.0;

    MembershipModel model;
    model.terms = terms;
    model.theta = Eigen::VectorXd::Zero(k);

    Eigen::VectorXd eta = design * model.theta;
    double ll = bernoulli_loglik(eta, s);
    model.loglik_trace.push_back(ll);

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        Eigen::VectorXd p(n), wdiag(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            p[i] = clamp_prob(expit(eta[i]));
            wdiag[i] = p[i] * (1.0 - p[i]);
        }

        const Eigen::VectorXd score = design.transpose() * (s - p);
        const double score_norm = score.lpNorm<Eigen::Infinity>();
        if (score_norm <= opts.tol) {
            model.converged = true;
            model.iterations = iter - 1;
            model.final_gradient_norm = score_norm;
            return model;
        }

        const bool extreme_probs =
            p.minCoeff() < 1e-10 || p.maxCoeff() > 1.0 - 1e-10;
        if (extreme_probs && model.theta.lpNorm<Eigen::Infinity>() > 1e6)
            raise(ErrorCode::SeparationDetected,
                  "fitted probabilities degenerate while coefficients diverge");

        const Eigen::MatrixXd info =
            design.transpose() * wdiag.asDiagonal() * design;
        Eigen::VectorXd step = info.ldlt().solve(score);
        if (!step.allFinite()) {
            if (extreme_probs)
                raise(ErrorCode::SeparationDetected, "singular working information");
            raise(ErrorCode::NotConverged, "non-finite IRLS step");
        }

        // Step-halving keeps the log-likelihood non-decreasing.
        double scale = 1.0;
        Eigen::VectorXd theta_new;
        Eigen::VectorXd eta_new;
        double ll_new = 0.0;
        bool accepted = false;
        for (int halving = 0; halving <= 30; ++halving) {
            theta_new = model.theta + scale * step;
            eta_new = design * theta_new;
            ll_new = bernoulli_loglik(eta_new, s);
            if (ll_new >= ll) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            // No ascent direction left; report at the current point.
            model.iterations = iter;
            model.final_gradient_norm = score_norm;
            raise(ErrorCode::NotConverged, "step-halving failed to improve likelihood");
        }
        model.theta = theta_new;
        eta = eta_new;
        ll = ll_new;
        model.loglik_trace.push_back(ll);
    }

    raise(ErrorCode::NotConverged,
          "IRLS did not reach tolerance within max_iter iterations");
}

std::vector<double> predict_prob(const MembershipModel& m, const StackedDataset& d) {
    const Eigen::MatrixXd design = build_design(d, m.terms);
    if (design.cols() != m.theta.size())
        raise(ErrorCode::DimensionMismatch, "model terms incompatible with dataset");
    const Eigen::VectorXd eta = design * m.theta;
    std::vector<double> out(static_cast<std::size_t>(eta.size()));
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        out[static_cast<std::size_t>(i)] = clamp_prob(expit(eta[i]));
    return out;
}

WeightSet make_weights(const std::vector<double>& probs, const StackedDataset& d) {
    if (probs.size() != d.rows.size())
        raise(ErrorCode::DimensionMismatch, "probability vector not aligned to rows");
    WeightSet w;
    w.weights.resize(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double e = probs[i];
        if (!(e > 0.0 && e < 1.0))
            raise(ErrorCode::ProbabilityOutOfRange,
                  "probability outside (0,1) at row " + std::to_string(i));
        if (d.rows[i].sample == SampleLabel::Validation)
            w.weights[i] = e / (1.0 - e);
    }
    return w;
}

double interpolated_quantile(std::vector<double> values, double q) {
    if (values.empty()) raise(ErrorCode::InvalidConfig, "quantile of empty set");
    if (!(q > 0.0 && q < 1.0)) raise(ErrorCode::InvalidConfig, "quantile must be in (0,1)");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

WeightSet trim_weights(const WeightSet& w, double upper_quantile) {
    if (!(upper_quantile > 0.0 && upper_quantile < 1.0))
        raise(ErrorCode::InvalidConfig, "trim quantile must be in (0,1)");
    if (w.trimmed) return w;

    std::vector<double> positive;
    for (double wi : w.weights)
        if (wi > 0.0) positive.push_back(wi);

    WeightSet out = w;
    out.trimmed = true;
    out.trim_quantile = upper_quantile;
    if (positive.empty()) {
        out.trim_threshold = 0.0;
        return out;
    }
    const double threshold = interpolated_quantile(std::move(positive), upper_quantile);
    out.trim_threshold = threshold;
    for (double& wi : out.weights)
        if (wi > threshold) wi = threshold;
    return out;
}

double asmd(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) raise(ErrorCode::InvalidConfig, "asmd of empty sample");
    const bool binary = all_binary(a) && all_binary(b);
    return asmd_from_moments(sample_moments(a, binary), sample_moments(b, binary));
}

std::vector<CovariateBalance> balance_table(const StackedDataset& d, const WeightSet* w) {
    if (w && w->weights.size() != d.rows.size())
        raise(ErrorCode::DimensionMismatch, "weight vector not aligned to dataset rows");

    const std::size_t p = d.covariate_count();
    std::vector<CovariateBalance> out;
    out.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> trial, val, val_w;
        for (std::size_t i = 0; i < d.rows.size(); ++i) {
            const auto& r = d.rows[i];
            if (r.sample == SampleLabel::Trial) {
                trial.push_back(r.covariates[j]);
            } else {
                val.push_back(r.covariates[j]);
                if (w) val_w.push_back(w->weights[i]);
            }
        }
        const bool binary = all_binary(trial) && all_binary(val);
        const Moments mt = sample_moments(trial, binary);
        const Moments mv = w ? weighted_moments(val, val_w, binary)
                             : sample_moments(val, binary);
        CovariateBalance row;
        row.covariate = d.covariate_names[j];
        row.trial_mean = mt.mean;
        row.validation_mean = mv.mean;
        row.asmd = asmd_from_moments(mt, mv);
        out.push_back(std::move(row));
    }
    return out;
}

double dom(std::span<const double> pi_fitted, std::span<const double> pi_true) {
    if (pi_fitted.size() != pi_true.size())
        raise(ErrorCode::DimensionMismatch, "probability vectors differ in length");
    if (pi_true.size() < 2) raise(ErrorCode::ZeroSpread, "need at least two probabilities");
    const Moments m = sample_moments(pi_true, false);
    const double sd = std::sqrt(m.var);
    if (sd == 0.0) raise(ErrorCode::ZeroSpread, "truth-model probabilities have zero spread");
    double acc = 0.0;
    for (std::size_t i = 0; i < pi_fitted.size(); ++i)
        acc += std::abs(pi_fitted[i] - pi_true[i]);
    return acc / (static_cast<double>(pi_fitted.size()) * sd);
}

} // namespace xme
