#include "xme/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <span>
#include <string>

#include "xme/csv.hpp"
#include "xme/errors.hpp"
#include "xme/estimators.hpp"
#include "xme/membership.hpp"
#include "xme/simulation.hpp"

namespace xme {

namespace {

using nlohmann::json;

// Doubles go through format_double so JSON bytes stay reproducible.
json num(double v) { return json::parse(format_double(v), nullptr, true); }

json report_json(const EstimateReport& r) {
    json j;
    j["label"] = r.label;
    j["estimate"] = num(r.estimate);
    if (r.se) j["se"] = num(*r.se);
    if (r.ci_low) j["ci_low"] = num(*r.ci_low);
    if (r.ci_high) j["ci_high"] = num(*r.ci_high);
    j["n_effective"] = num(r.n_effective);
    return j;
}

void write_meta(const std::string& out_base, const std::string& command, json resolved,
                std::vector<std::string>& written) {
    json meta;
    meta["command"] = command;
    meta["config"] = std::move(resolved);
    meta["outputs"] = written;
    const std::string path = out_base + ".meta.json";
    write_file(path, meta.dump(2) + "\n");
    written.push_back(path);
}

std::string balance_csv(const std::vector<CovariateBalance>& pre,
                        const std::vector<CovariateBalance>* post) {
    std::string out = post ? "covariate,trial_mean,validation_mean,asmd_unweighted,"
                             "validation_mean_weighted,asmd_weighted\n"
                           : "covariate,trial_mean,validation_mean,asmd_unweighted\n";
    for (std::size_t i = 0; i < pre.size(); ++i) {
        out += pre[i].covariate;
        out += ',';
        out += format_double(pre[i].trial_mean);
        out += ',';
        out += format_double(pre[i].validation_mean);
        out += ',';
        out += format_double(pre[i].asmd);
        if (post) {
            out += ',';
            out += format_double((*post)[i].validation_mean);
            out += ',';
            out += format_double((*post)[i].asmd);
        }
        out += '\n';
    }
    return out;
}

struct WeightPipeline {
    std::vector<double> probs;
    bool probs_from_file = false;
    std::optional<MembershipModel> model;
    WeightSet untrimmed;
    WeightSet final_weights;
};

WeightPipeline run_weight_pipeline(const StackedCsv& input,
                                   const std::optional<std::string>& terms_grammar,
                                   std::optional<double> trim_quantile) {
    const StackedDataset& d = input.dataset;
    WeightPipeline p;
    if (input.membership_probs) {
        p.probs = *input.membership_probs;
        p.probs_from_file = true;
    } else {
        const int pcount = static_cast<int>(d.covariate_count());
        const TermSet terms = terms_grammar ? parse_terms(*terms_grammar, pcount)
                                            : TermSet::mains_only(pcount);
        p.model = fit_membership(d, terms);
        p.probs = predict_prob(*p.model, d);
    }
    p.untrimmed = make_weights(p.probs, d);
    p.final_weights = trim_quantile ? trim_weights(p.untrimmed, *trim_quantile)
                                    : p.untrimmed;
    return p;
}

json weights_diag_json(const StackedCsv& input, const WeightPipeline& p) {
    const StackedDataset& d = input.dataset;
    std::vector<double> probs_v, probs_t;
    for (std::size_t i = 0; i < d.rows.size(); ++i)
        (d.rows[i].sample == SampleLabel::Validation ? probs_v : probs_t)
            .push_back(p.probs[i]);

    json j;
    j["probs_source"] = p.probs_from_file ? "prob_column" : "fitted";
    if (p.model) {
        json fit;
        fit["converged"] = p.model->converged;
        fit["iterations"] = p.model->iterations;
        fit["final_gradient_norm"] = num(p.model->final_gradient_norm);
        json theta = json::array();
        for (Eigen::Index c = 0; c < p.model->theta.size(); ++c)
            theta.push_back(num(p.model->theta[c]));
        fit["theta"] = theta;
        j["membership_fit"] = fit;
    }
    j["asmd_probs"] = num(asmd(probs_t, probs_v));
    j["trimmed"] = p.final_weights.trimmed;
    if (p.final_weights.trim_threshold)
        j["trim_threshold"] = num(*p.final_weights.trim_threshold);
    if (p.final_weights.trim_quantile)
        j["trim_quantile"] = num(*p.final_weights.trim_quantile);
    j["quantile_convention"] = "interpolated order statistic";
    j["asmd_convention"] = "pooled sqrt(mean of variances); binary columns use p(1-p)";
    return j;
}

json grid_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

} // namespace

std::vector<std::string> cmd_estimate(const EstimateConfig& config) {
    const StackedCsv input = parse_stacked_csv(config.data_path);
    const StackedDataset& d = input.dataset;

    const WeightPipeline pipeline =
        run_weight_pipeline(input, config.terms, config.trim_quantile);

    const EstimateReport ate = naive_ate(d);
    const EstimateReport mu0_plain = naive_mu0(d);
    const EstimateReport mu0_w = weighted_mu0(d, pipeline.final_weights);

    std::vector<double> mu1_grid = config.mu1_grid;
    if (mu1_grid.empty()) {
        for (double offset : {-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2})
            mu1_grid.push_back(mu0_w.estimate + offset);
    }
    const std::vector<EstimateReport> corrected = corrected_ate(d, mu0_w, mu1_grid);

    json report;
    report["naive_ate"] = report_json(ate);
    report["mu0_naive"] = report_json(mu0_plain);
    report["mu0_weighted"] = report_json(mu0_w);
    {
        json arr = json::array();
        for (std::size_t i = 0; i < corrected.size(); ++i) {
            json item = report_json(corrected[i]);
            item["mu1"] = num(mu1_grid[i]);
            arr.push_back(std::move(item));
        }
        report["ate_corrected"] = arr;
    }

    // Trial control rows with Z observed allow checking the transported
    // estimate against the in-trial truth.
    bool trial_truth = d.n_trial() > 0;
    for (const auto& r : d.rows)
        if (r.sample == SampleLabel::Trial && r.treatment == 0 && !r.z_true)
            trial_truth = false;
    if (trial_truth) {
        json bias;
        bias["mu0_naive"] = num(empirical_mu0_bias(d, mu0_plain));
        bias["mu0_weighted"] = num(empirical_mu0_bias(d, mu0_w));
        bias["mu0_rct_realized"] =
            num(mu0_plain.estimate - empirical_mu0_bias(d, mu0_plain));
        report["empirical_bias"] = bias;
    }
    report["diagnostics"] = weights_diag_json(input, pipeline);

    std::vector<std::string> written;
    const std::string report_path = config.out_base + ".report.json";
    write_file(report_path, report.dump(2) + "\n");
    written.push_back(report_path);

    const auto pre = balance_table(d, nullptr);
    const auto post = balance_table(d, &pipeline.final_weights);
    const std::string balance_path = config.out_base + ".balance.csv";
    write_file(balance_path, balance_csv(pre, &post));
    written.push_back(balance_path);

    json resolved;
    resolved["data"] = config.data_path;
    resolved["terms"] = config.terms ? json(*config.terms) : json("mains");
    resolved["trim_quantile"] =
        config.trim_quantile ? num(*config.trim_quantile) : json(nullptr);
    resolved["mu1_grid"] = grid_json(mu1_grid);
    resolved["out"] = config.out_base;
    write_meta(config.out_base, "estimate", std::move(resolved), written);
    return written;
}

std::vector<std::string> cmd_weights(const WeightsConfig& config) {
    const StackedCsv input = parse_stacked_csv(config.data_path);
    const StackedDataset& d = input.dataset;

    const WeightPipeline pipeline =
        run_weight_pipeline(input, config.terms, config.trim_quantile);

    std::string csv = "row,S,prob,weight_pretrim,weight\n";
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        csv += std::to_string(i);
        csv += ',';
        csv += label_text(d.rows[i].sample);
        csv += ',';
        csv += format_double(pipeline.probs[i]);
        csv += ',';
        csv += format_double(pipeline.untrimmed.weights[i]);
        csv += ',';
        csv += format_double(pipeline.final_weights.weights[i]);
        csv += '\n';
    }

    std::vector<std::string> written;
    const std::string weights_path = config.out_base + ".weights.csv";
    write_file(weights_path, csv);
    written.push_back(weights_path);

    const auto pre = balance_table(d, nullptr);
    const auto post = balance_table(d, &pipeline.final_weights);
    const std::string balance_path = config.out_base + ".balance.csv";
    write_file(balance_path, balance_csv(pre, &post));
    written.push_back(balance_path);

    const std::string diag_path = config.out_base + ".diagnostics.json";
    write_file(diag_path, weights_diag_json(input, pipeline).dump(2) + "\n");
    written.push_back(diag_path);

    json resolved;
    resolved["data"] = config.data_path;
    resolved["terms"] = config.terms ? json(*config.terms) : json("mains");
    resolved["trim_quantile"] =
        config.trim_quantile ? num(*config.trim_quantile) : json(nullptr);
    resolved["out"] = config.out_base;
    write_meta(config.out_base, "weights", std::move(resolved), written);
    return written;
}

std::vector<std::string> cmd_simulate(const SimulateConfig& config) {
    for (double g : config.gamma1)
        if (g < 0.0 || g > 1.0) raise(ErrorCode::InvalidConfig, "gamma1 outside [0,1]");
    for (double g : config.gamma2)
        if (g < 0.0 || g > 1.0) raise(ErrorCode::InvalidConfig, "gamma2 outside [0,1]");
    for (int m : config.models)
        if (m < 1 || m > kMembershipForms)
            raise(ErrorCode::InvalidConfig, "model form outside 1..7");
    if (config.replicates < 1 || config.sample_size < 1 || config.population_size < 2)
        raise(ErrorCode::InvalidConfig, "sizes must be positive");

    ScenarioSpec prototype;
    prototype.population_size = config.population_size;
    prototype.sample_size = config.sample_size;
    prototype.replicates = config.replicates;
    prototype.y_noise_var = config.y_noise_var;
    const std::vector<ScenarioSpec> specs =
        make_grid(config.gamma1, config.gamma2, config.models, config.seed, prototype);
    const std::vector<ScenarioResult> results = run_grid(specs, config.threads);

    std::string csv =
        "gamma1,gamma2,true_model,estimator,mean_bias,abs_bias,mc_se,coverage,"
        "asmd_true_probs,failed_replicates\n";
    long failed_total = 0;
    for (const auto& res : results) {
        for (const auto& agg : res.estimators) {
            csv += format_double(res.scenario.gamma1);
            csv += ',';
            csv += format_double(res.scenario.gamma2);
            csv += ',';
            csv += std::to_string(res.scenario.true_model);
            csv += ',';
            csv += agg.estimator;
            csv += ',';
            csv += format_double(agg.mean_bias);
            csv += ',';
            csv += format_double(agg.abs_mean_bias);
            csv += ',';
            csv += format_double(agg.mc_se);
            csv += ',';
            csv += format_double(agg.coverage);
            csv += ',';
            csv += format_double(res.asmd_true_probs);
            csv += ',';
            csv += std::to_string(agg.failed_replicates);
            csv += '\n';
            failed_total += agg.failed_replicates;
        }
    }

    std::vector<std::string> written;
    const std::string results_path = config.out_base + ".results.csv";
    write_file(results_path, csv);
    written.push_back(results_path);

    json resolved;
    resolved["gamma1"] = grid_json(config.gamma1);
    resolved["gamma2"] = grid_json(config.gamma2);
    resolved["models"] = config.models;
    resolved["replicates"] = config.replicates;
    resolved["n"] = config.sample_size;
    resolved["pop_size"] = config.population_size;
    resolved["y_noise_var"] = num(config.y_noise_var);
    resolved["seed"] = config.seed;
    resolved["threads"] = config.threads;
    resolved["out"] = config.out_base;
    resolved["scenarios"] = specs.size();
    resolved["failed_replicates_total"] = failed_total;
    write_meta(config.out_base, "simulate", std::move(resolved), written);
    return written;
}

std::vector<std::string> cmd_dom(const DomConfig& config) {
    const auto pairs =
        parse_two_columns(config.data_path, config.fitted_column, config.true_column);
    std::vector<double> fitted, truth;
    fitted.reserve(pairs.size());
    truth.reserve(pairs.size());
    for (auto [f, t] : pairs) {
        fitted.push_back(f);
        truth.push_back(t);
    }
    const double eta = dom(fitted, truth);

    json j;
    j["dom"] = num(eta);
    j["rows"] = pairs.size();

    std::vector<std::string> written;
    const std::string path = config.out_base + ".dom.json";
    write_file(path, j.dump(2) + "\n");
    written.push_back(path);

    json resolved;
    resolved["data"] = config.data_path;
    resolved["fitted_column"] = config.fitted_column;
    resolved["true_column"] = config.true_column;
    resolved["out"] = config.out_base;
    write_meta(config.out_base, "dom", std::move(resolved), written);

    // The scalar is the point of the command; echo it on stdout too.
    std::printf("dom = %s\n", format_double(eta).c_str());
    return written;
}

} // namespace xme
