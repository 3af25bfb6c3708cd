#include "xme/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xme/errors.hpp"
#include "xme/estimators.hpp"

namespace xme {

namespace {

double expit(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Flattened (kind, indices, coefficient) list for fast predictor evaluation.
struct PredictorTerm {
    int a = 0;
    int b = -1; // b == a: quadratic; b >= 0 and != a: interaction; b < 0: main
    double coeff = 0.0;
};

std::vector<PredictorTerm> membership_predictor(int form, double gamma1) {
    const CoefficientTable table = CoefficientTable::scaled(gamma1, 0.0);
    const TermSet terms = membership_form_terms(form, /*include_intercept=*/false);
    std::vector<PredictorTerm> out;
    for (int j : terms.main_effects)
        out.push_back({j, -1, table.membership[static_cast<std::size_t>(j)]});
    for (int j : terms.quadratics)
        out.push_back({j, j, table.membership_quadratic(j)});
    for (auto [a, b] : terms.interactions)
        out.push_back({a, b, table.membership_interaction(a, b)});
    return out;
}

double eval_predictor(const std::vector<PredictorTerm>& terms,
                      const std::array<double, 4>& x) {
    double acc = 0.0;
    for (const auto& t : terms) {
        if (t.b < 0)
            acc += t.coeff * x[static_cast<std::size_t>(t.a)];
        else
            acc += t.coeff * x[static_cast<std::size_t>(t.a)] * x[static_cast<std::size_t>(t.b)];
    }
    return acc;
}

std::vector<std::uint32_t> stratum_indices(const Population& pop, unsigned char member) {
    std::vector<std::uint32_t> idx;
    for (std::size_t i = 0; i < pop.member.size(); ++i)
        if (pop.member[i] == member) idx.push_back(static_cast<std::uint32_t>(i));
    return idx;
}

// Partial Fisher-Yates: n draws without replacement, returned ascending.
std::vector<std::uint32_t> sample_without_replacement(std::vector<std::uint32_t> idx,
                                                      int n, Rng& rng) {
    if (static_cast<std::size_t>(n) > idx.size())
        raise(ErrorCode::InsufficientStratum,
              "stratum holds " + std::to_string(idx.size()) + " members, need " +
                  std::to_string(n));
    for (int j = 0; j < n; ++j) {
        const auto pick = static_cast<std::size_t>(j) +
                          rng.below(idx.size() - static_cast<std::size_t>(j));
        std::swap(idx[static_cast<std::size_t>(j)], idx[pick]);
    }
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct BiasStats {
    double mean = 0.0;
    double mc_se = 0.0;
};

BiasStats mean_and_mc_se(const std::vector<double>& values) {
    BiasStats s;
    if (values.empty()) {
        s.mean = std::numeric_limits<double>::quiet_NaN();
        s.mc_se = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.mc_se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return s;
}

} // namespace

TermSet membership_form_terms(int form, bool include_intercept) {
    if (form < 1 || form > kMembershipForms)
        raise(ErrorCode::InvalidConfig, "membership form must be in 1..7");
    TermSet t = TermSet::mains_only(4, include_intercept);
    switch (form) {
    case 1: break;
    case 2: t.quadratics = {2}; break;
    case 3: t.quadratics = {3}; break;
    case 4: t.interactions = {{2, 3}}; break;
    case 5:
        t.interactions = {{2, 3}};
        t.quadratics = {2, 3};
        break;
    case 6: t.interactions = {{0, 3}}; break;
    case 7: t.interactions = {{0, 2}}; break;
    default: break;
    }
    return t;
}

Population generate_population(const ScenarioSpec& spec, Rng& rng) {
    const auto n = static_cast<std::size_t>(spec.population_size);
    const auto predictor = membership_predictor(spec.true_model, spec.gamma1);

    Population pop;
    pop.x.resize(n);
    pop.prob.resize(n);
    pop.member.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& x = pop.x[i];
        x[0] = rng.normal();
        x[1] = rng.normal();
        x[2] = rng.normal();
        x[3] = rng.normal();
        const double p = expit(eval_predictor(predictor, x));
        pop.prob[i] = p;
        pop.member[i] = rng.bernoulli(p) ? 1 : 0;
    }
    return pop;
}

SampleDraw draw_samples(const Population& pop, int n, Rng& rng) {
    const auto val_idx = sample_without_replacement(stratum_indices(pop, 0), n, rng);
    const auto rct_idx = sample_without_replacement(stratum_indices(pop, 1), n, rng);

    SampleDraw draw;
    draw.data.covariate_names = {"x1", "x2", "x3", "x4"};
    draw.data.rows.reserve(static_cast<std::size_t>(2 * n));
    draw.true_probs.reserve(static_cast<std::size_t>(2 * n));

    auto append = [&](std::uint32_t i, SampleLabel label) {
        StackedRow row;
        row.sample = label;
        row.covariates.assign(pop.x[i].begin(), pop.x[i].end());
        draw.data.rows.push_back(std::move(row));
        draw.true_probs.push_back(pop.prob[i]);
    };
    for (auto i : val_idx) append(i, SampleLabel::Validation);
    for (auto i : rct_idx) append(i, SampleLabel::Trial);
    return draw;
}

void generate_outcomes(SampleDraw& draw, const ScenarioSpec& spec, Rng& rng) {
    const CoefficientTable table = CoefficientTable::scaled(spec.gamma1, spec.gamma2);
    const double noise_sd = std::sqrt(spec.y_noise_var);

    for (auto& row : draw.data.rows) {
        const auto& x = row.covariates;
        double error_mean = 0.0;
        for (std::size_t j = 0; j < 4; ++j) error_mean += table.error[j] * x[j];

        const double z0 = rng.normal();
        const double z1 = 2.0 + rng.normal();
        const double y0 = z0 + error_mean + noise_sd * rng.normal();
        const double y1 = z1 + error_mean + noise_sd * rng.normal();

        int a = 0;
        if (row.sample == SampleLabel::Trial) a = rng.bernoulli(0.5) ? 1 : 0;
        row.treatment = a;
        row.z_true = a == 1 ? z1 : z0;
        row.y_reported = a == 1 ? y1 : y0;
    }
}

double asmd_of_true_probs(const SampleDraw& draw) {
    std::vector<double> trial, val;
    for (std::size_t i = 0; i < draw.data.rows.size(); ++i) {
        if (draw.data.rows[i].sample == SampleLabel::Trial)
            trial.push_back(draw.true_probs[i]);
        else
            val.push_back(draw.true_probs[i]);
    }
    if (trial.empty() || val.empty())
        raise(ErrorCode::InvalidConfig, "both samples must be nonempty");
    return asmd(trial, val);
}

double asmd_of_true_probs(const Population& pop) {
    std::vector<double> trial, val;
    for (std::size_t i = 0; i < pop.member.size(); ++i) {
        if (pop.member[i]) trial.push_back(pop.prob[i]);
        else val.push_back(pop.prob[i]);
    }
    if (trial.empty() || val.empty())
        raise(ErrorCode::InvalidConfig, "both strata must be nonempty");
    return asmd(trial, val);
}

ReplicateResult run_replicate(const ScenarioSpec& spec, int rep_index) {
    Rng rng(derive_stream(spec.seed, static_cast<std::uint64_t>(rep_index)));

    const Population pop = generate_population(spec, rng);
    SampleDraw draw = draw_samples(pop, spec.sample_size, rng);
    generate_outcomes(draw, spec, rng);
    const StackedDataset& d = draw.data;

    ReplicateResult result;
    result.asmd_true_probs = asmd_of_true_probs(draw);

    // Realized control-arm mean error in the trial: the per-replicate target.
    {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : d.rows)
            if (r.sample == SampleLabel::Trial && r.treatment == 0) {
                sum += r.y_reported - *r.z_true;
                ++n;
            }
        if (n == 0) {
            for (auto& e : result.estimates) e.failed = true;
            return result;
        }
        result.mu0_rct_true = sum / static_cast<double>(n);
    }

    // Realized covariate shift (validation minus trial) against the error
    // coefficients gives the model-based bias of the unweighted estimator.
    {
        const CoefficientTable table = CoefficientTable::scaled(spec.gamma1, spec.gamma2);
        std::array<double, 4> mean_v{}, mean_t{};
        std::size_t n_v = 0, n_t = 0;
        for (const auto& r : d.rows) {
            if (r.sample == SampleLabel::Validation) {
                for (std::size_t j = 0; j < 4; ++j) mean_v[j] += r.covariates[j];
                ++n_v;
            } else {
                for (std::size_t j = 0; j < 4; ++j) mean_t[j] += r.covariates[j];
                ++n_t;
            }
        }
        MeasurementErrorSpec err;
        err.alpha_x.assign(table.error.begin(), table.error.end());
        CovariateShiftSpec shift;
        shift.beta0.assign(4, 0.0);
        shift.sigma_x2.assign(4, 1.0);
        shift.beta1.resize(4);
        for (std::size_t j = 0; j < 4; ++j)
            shift.beta1[j] = mean_v[j] / static_cast<double>(n_v) -
                             mean_t[j] / static_cast<double>(n_t);
        result.analytic_bias = analytic_mu0_bias(err, shift);
    }

    auto record = [&](Estimator which, const EstimateReport& rep) {
        auto& slot = result.estimates[static_cast<std::size_t>(which)];
        slot.value = rep.estimate;
        slot.se = rep.se.value_or(0.0);
        slot.ci_covers = rep.ci_low.has_value() && rep.ci_high.has_value() &&
                         *rep.ci_low <= result.mu0_rct_true &&
                         result.mu0_rct_true <= *rep.ci_high;
        slot.failed = false;
    };
    auto record_failure = [&](Estimator which) {
        result.estimates[static_cast<std::size_t>(which)].failed = true;
    };

    try {
        record(Estimator::Naive, naive_mu0(d));
    } catch (const Error&) {
        record_failure(Estimator::Naive);
    }

    auto weighted = [&](int form) {
        const TermSet terms = membership_form_terms(form, /*include_intercept=*/true);
        const MembershipModel model = fit_membership(d, terms);
        const std::vector<double> probs = predict_prob(model, d);
        const WeightSet w = make_weights(probs, d);
        return weighted_mu0(d, w);
    };
    try {
        record(Estimator::WeightedTrue, weighted(spec.true_model));
    } catch (const Error&) {
        record_failure(Estimator::WeightedTrue);
    }
    try {
        record(Estimator::WeightedMains, weighted(1));
    } catch (const Error&) {
        record_failure(Estimator::WeightedMains);
    }
    return result;
}

ScenarioResult aggregate_replicates(const ScenarioSpec& spec,
                                    const std::vector<ReplicateResult>& reps) {
    ScenarioResult out;
    out.scenario = spec;

    std::vector<double> asmds, oracle;
    asmds.reserve(reps.size());
    oracle.reserve(reps.size());
    for (const auto& r : reps) {
        asmds.push_back(r.asmd_true_probs);
        oracle.push_back(r.analytic_bias);
    }
    out.asmd_true_probs = mean_and_mc_se(asmds).mean;
    out.analytic_bias_mean = mean_and_mc_se(oracle).mean;

    for (std::size_t k = 0; k < kEstimatorNames.size(); ++k) {
        EstimatorAggregate agg;
        agg.estimator = kEstimatorNames[k];
        std::vector<double> biases;
        std::size_t covered = 0;
        for (const auto& r : reps) {
            const auto& e = r.estimates[k];
            if (e.failed) {
                ++agg.failed_replicates;
                continue;
            }
            biases.push_back(e.value - r.mu0_rct_true);
            if (e.ci_covers) ++covered;
        }
        const BiasStats stats = mean_and_mc_se(biases);
        agg.mean_bias = stats.mean;
        agg.abs_mean_bias = std::abs(stats.mean);
        agg.mc_se = stats.mc_se;
        agg.used_replicates = static_cast<int>(biases.size());
        agg.coverage = biases.empty()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : static_cast<double>(covered) / static_cast<double>(biases.size());
        out.estimators[k] = std::move(agg);
    }
    return out;
}

ScenarioResult run_scenario_serial(const ScenarioSpec& spec) {
    std::vector<ReplicateResult> reps(static_cast<std::size_t>(spec.replicates));
    for (int r = 0; r < spec.replicates; ++r)
        reps[static_cast<std::size_t>(r)] = run_replicate(spec, r);
    return aggregate_replicates(spec, reps);
}

ScenarioResult run_scenario(const ScenarioSpec& spec, int threads) {
    return run_grid({spec}, threads).front();
}

std::vector<ScenarioResult> run_grid(const std::vector<ScenarioSpec>& specs,
                                     int parallelism) {
    struct Task {
        int scenario;
        int replicate;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<ReplicateResult>> reps(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        reps[s].resize(static_cast<std::size_t>(specs[s].replicates));
        for (int r = 0; r < specs[s].replicates; ++r)
            tasks.push_back({static_cast<int>(s), r});
    }

#ifdef _OPENMP
    const int nthreads = parallelism > 0 ? parallelism : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks.size()); ++t) {
        const Task task = tasks[static_cast<std::size_t>(t)];
        reps[static_cast<std::size_t>(task.scenario)][static_cast<std::size_t>(task.replicate)] =
            run_replicate(specs[static_cast<std::size_t>(task.scenario)], task.replicate);
    }
#else
    (void)parallelism;
    for (const Task& task : tasks)
        reps[static_cast<std::size_t>(task.scenario)][static_cast<std::size_t>(task.replicate)] =
            run_replicate(specs[static_cast<std::size_t>(task.scenario)], task.replicate);
#endif

    std::vector<ScenarioResult> out;
    out.reserve(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s)
        out.push_back(aggregate_replicates(specs[s], reps[s]));
    return out;
}

std::vector<ScenarioSpec> make_grid(const std::vector<double>& gamma1,
                                    const std::vector<double>& gamma2,
                                    const std::vector<int>& true_models,
                                    std::uint64_t base_seed,
                                    const ScenarioSpec& prototype) {
    std::vector<ScenarioSpec> out;
    out.reserve(gamma1.size() * gamma2.size() * true_models.size());
    std::uint64_t index = 0;
    for (double g1 : gamma1)
        for (double g2 : gamma2)
            for (int form : true_models) {
                ScenarioSpec spec = prototype;
                spec.gamma1 = g1;
                spec.gamma2 = g2;
                spec.true_model = form;
                spec.seed = derive_stream(base_seed, index++);
                out.push_back(spec);
            }
    return out;
}

} // namespace xme
