#include "etz/cli.hpp"

#include "etz/cuq.hpp"
#include "etz/decomposition.hpp"
#include "etz/error.hpp"
#include "etz/estimators.hpp"
#include "etz/moments.hpp"
#include "etz/report.hpp"
#include "etz/simulation.hpp"
#include "etz/trial_data.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace etz::cli {
namespace {

using report::Json;

constexpr std::uint64_t kDefaultSeed = 20240101;

struct Options {
    std::string input;
    std::string output;
    std::string format = "json";
    std::string control_label = kControlLabel;

    std::optional<double> var_baseline;
    std::optional<double> var_milestone;
    std::optional<double> var_change;
    std::optional<double> cov_1m;
    double traj_cov = 0.0;
    std::optional<double> tolerance;
    bool per_arm = false;
    std::vector<double> entry_grid;

    std::size_t n = 500;
    std::optional<std::uint64_t> seed;
    std::size_t replicates = 1000;
    double alpha_z = 0.0;
    double var_z = 53.802;
    double mu_rx = -2.0;
    double mu_c = 0.0;
    double var_traj = 70.809;
    double traj_corr = 0.0;
    double var_e = 10.778;
    double cov_z_traj = 0.0;
    std::optional<double> var_e_biomarker;
    bool counterfactual = false;

    std::vector<double> c_offset{0.0, 2.5, 5.0};
    double intercept = 0.0;
    double effect_rx = -2.0;
    double effect_c = 0.0;
    double slope_rx = 1.2;
    double slope_c = 0.6;
    double residual_var = 81.587;
    bool parallel_model = false;
    bool deattenuate = false;

    std::optional<double> delta;
    std::optional<double> sd;
    double alpha = 0.05;
    double power = 0.80;
};

struct ResolvedSeed {
    std::uint64_t value;
    std::string source;
};

const std::set<std::string> kBooleanKeys = {"per-arm", "counterfactual", "parallel-model",
                                            "deattenuate"};

// ---------------------------------------------------------------- options

void add_io(CLI::App* sub, Options& o, bool needs_input, const std::string& default_format) {
    auto* in = sub->add_option("--input", o.input,
                               "CSV trial data, wide (subject_id,arm,y1..ym) or long "
                               "(subject_id,arm,visit,value)");
    if (needs_input) in->required();
    sub->add_option("--output,--out", o.output, "Write the report here instead of stdout");
    // Subcommands share `o`, so the default is applied after parsing.
    sub->add_option("--format", o.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->default_str(default_format);
    sub->add_option("--control-label", o.control_label, "Arm label of the control group")
        ->capture_default_str();
}

void add_moments(CLI::App* sub, Options& o) {
    sub->add_option("--var-baseline", o.var_baseline,
                    "Var(Y) at visit 1 [outcome units^2]; summary-statistics mode");
    sub->add_option("--var-milestone", o.var_milestone,
                    "Var(Y) at the milestone visit m [outcome units^2]");
    sub->add_option("--var-change", o.var_change,
                    "Var(change-from-baseline) [outcome units^2]");
    sub->add_option("--cov-1m", o.cov_1m,
                    "Cov(Y at visit 1, Y at visit m) [outcome units^2]; optional");
    sub->add_option("--tolerance", o.tolerance,
                    "Feasibility tolerance [outcome units^2] (default 1e-9 x var_milestone)");
}

void add_sim(CLI::App* sub, Options& o) {
    sub->add_option("--n", o.n, "Subjects per simulated trial [count]")->capture_default_str();
    sub->add_option("--seed", o.seed, "64-bit RNG seed (fallback: ETZ_SEED, then 20240101)");
    sub->add_option("--alpha-z", o.alpha_z, "E[Z] [outcome units]")->capture_default_str();
    sub->add_option("--var-z", o.var_z, "Var(Z) [outcome units^2]")->capture_default_str();
    sub->add_option("--mu-rx", o.mu_rx, "E[Traj] under Rx [outcome units]")->capture_default_str();
    sub->add_option("--mu-c", o.mu_c, "E[Traj] under C [outcome units]")->capture_default_str();
    sub->add_option("--var-traj", o.var_traj, "Var(Traj) [outcome units^2]")->capture_default_str();
    sub->add_option("--traj-corr", o.traj_corr, "Corr(Traj^Rx, Traj^C) [unitless, 0..1]")
        ->capture_default_str();
    sub->add_option("--var-e", o.var_e, "Var(E) [outcome units^2]")->capture_default_str();
    sub->add_option("--cov-z-traj", o.cov_z_traj, "Cov(Z, Traj) [outcome units^2]")
        ->capture_default_str();
    sub->add_option("--var-e-biomarker", o.var_e_biomarker,
                    "Var of the biomarker score error [outcome units^2] (default: var-e)");
}

// ---------------------------------------------------------------- helpers

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io, "error reading '" + path + "'");
    return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    f << text;
    f.close();
    if (!f) throw Error(ErrorCode::io, "error writing '" + path + "'");
}

ResolvedSeed resolve_seed(const Options& o) {
    if (o.seed) return {*o.seed, "flag"};
    if (const char* env = std::getenv("ETZ_SEED"); env && *env) {
        std::uint64_t v = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw Error(ErrorCode::invalid_argument, "ETZ_SEED is not a 64-bit unsigned integer");
        }
        return {v, "ETZ_SEED"};
    }
    return {kDefaultSeed, "default"};
}

Json scalar_from_string(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (!s.empty() && ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v)) {
        return v;
    }
    return s;
}

// Every option of the subcommand with its resolved value.
Json resolved_config(const CLI::App* sub, const std::optional<ResolvedSeed>& seed) {
    Json cfg;
    cfg["subcommand"] = sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            if (opt->get_expected_max() == 0) {
                cfg[name] = true;
            } else if (results.size() == 1 && opt->get_expected_max() == 1) {
                cfg[name] = scalar_from_string(results.front());
            } else {
                Json arr = Json::array();
                for (const auto& r : results) arr.push_back(scalar_from_string(r));
                cfg[name] = arr;
            }
        } else if (opt->get_expected_max() == 0) {
            cfg[name] = false;
        } else if (!opt->get_default_str().empty()) {
            cfg[name] = scalar_from_string(opt->get_default_str());
        } else {
            cfg[name] = nullptr;
        }
    }
    if (seed) {
        cfg["seed"] = seed->value;
        cfg["seed_source"] = seed->source;
    }
    return cfg;
}

bool has_summary(const Options& o) {
    return o.var_baseline || o.var_milestone || o.var_change || o.cov_1m;
}

struct LoadedMoments {
    VisitMoments moments;
    std::optional<TrialDataset> data;
    std::optional<ArmVisitMeans> means;
    Json data_info;
};

LoadedMoments load_moments(const Options& o, std::ostream& err) {
    if (!o.input.empty() && has_summary(o)) {
        throw Error(ErrorCode::invalid_argument,
                    "give either --input or the summary moments, not both");
    }
    LoadedMoments lm;
    if (!o.input.empty()) {
        const TrialDataset raw = parse_csv(read_file(o.input), o.control_label);
        auto cc = complete_cases_baseline_milestone(raw);
        if (cc.dropped_total() > 0) {
            err << "etz: warning code=listwise_deletion dropped=" << cc.dropped_total();
            for (const auto& [arm, k] : cc.dropped_per_arm) err << " " << arm << "=" << k;
            err << "\n";
        }
        lm.moments = pooled_visit_moments(cc.data);
        lm.means = arm_visit_means(cc.data);
        Json dropped = Json::object();
        for (const auto& [arm, k] : cc.dropped_per_arm) dropped[arm] = k;
        lm.data_info = {{"mode", "data"},
                        {"subjects_read", raw.size()},
                        {"visit_count", raw.visit_count()},
                        {"dropped_per_arm", dropped}};
        lm.data = std::move(cc.data);
        return lm;
    }
    if (!o.var_baseline || !o.var_milestone || !(o.var_change || o.cov_1m)) {
        throw Error(ErrorCode::invalid_argument,
                    "summary mode needs --var-baseline, --var-milestone and --var-change "
                    "(or --cov-1m); data mode needs --input");
    }
    if (o.var_change && o.cov_1m) {
        lm.moments = VisitMoments::from_summary(*o.var_baseline, *o.var_milestone,
                                                *o.var_change, *o.cov_1m);
    } else if (o.var_change) {
        lm.moments = VisitMoments::from_summary(*o.var_baseline, *o.var_milestone, *o.var_change);
    } else {
        lm.moments = VisitMoments::from_covariance(*o.var_baseline, *o.var_milestone, *o.cov_1m);
    }
    lm.data_info = {{"mode", "summary"}};
    return lm;
}

Json moments_json(const LoadedMoments& lm) {
    return lm.means ? report::to_json(lm.moments, *lm.means) : report::to_json(lm.moments);
}

double tolerance_for(const Options& o, const VisitMoments& m) {
    if (o.tolerance) {
        if (!(*o.tolerance >= 0.0)) {
            throw Error(ErrorCode::invalid_argument, "--tolerance must be >= 0");
        }
        return *o.tolerance;
    }
    return default_tolerance(m);
}

Json base_report(const CLI::App* sub, const std::optional<ResolvedSeed>& seed) {
    Json j;
    j["command"] = sub->get_name();
    j["config"] = resolved_config(sub, seed);
    return j;
}

void require_json(const Options& o, const char* command) {
    if (o.format != "json") {
        throw Error(ErrorCode::invalid_argument,
                    std::string(command) + " produces a JSON report only; use --format json");
    }
}

SimConfig sim_config(const Options& o, std::uint64_t seed, std::ostream& err) {
    SimConfig cfg;
    cfg.n_subjects = o.n;
    cfg.alpha_z = o.alpha_z;
    cfg.var_z = o.var_z;
    cfg.mu_rx = o.mu_rx;
    cfg.mu_c = o.mu_c;
    cfg.var_traj = o.var_traj;
    cfg.traj_corr = o.traj_corr;
    cfg.var_e = o.var_e;
    cfg.cov_z_traj = o.cov_z_traj;
    cfg.var_e_biomarker = o.var_e_biomarker.value_or(o.var_e);
    cfg.seed = seed;
    if (has_summary(o)) {
        const auto lm = load_moments(o, err);
        const EtzComponents c = decompose_independent(lm.moments, tolerance_for(o, lm.moments));
        cfg.var_z = c.var_z;
        cfg.var_traj = c.var_traj;
        cfg.var_e = c.var_e;
        cfg.var_e_biomarker = o.var_e_biomarker.value_or(c.var_e);
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------- commands

struct Outcome {
    std::string text;
    int code = kOk;
};

Outcome cmd_decompose(const CLI::App* sub, const Options& o, std::ostream& err) {
    require_json(o, "decompose");
    const LoadedMoments lm = load_moments(o, err);
    Json j = base_report(sub, std::nullopt);
    j["data"] = lm.data_info;
    j["moments"] = moments_json(lm);
    j["cov_terms"] = report::to_json(cov_aware_terms(lm.moments));
    const EtzComponents c = decompose_unchecked(lm.moments);
    const FeasibilityVerdict v = feasibility_check(c, tolerance_for(o, lm.moments));
    j["components"] = report::to_json(c, lm.moments, v);
    if (o.per_arm && lm.data) {
        Json arms = Json::object();
        for (const auto& [arm, m] : per_arm_visit_moments(*lm.data)) arms[arm] = report::to_json(m);
        j["per_arm_moments"] = arms;
    }
    if (!v.pass) {
        err << "etz: error code=infeasible message=" << Json(InfeasibleDecomposition(c, v).what()).dump()
            << "\n";
    }
    return {report::dump(j), v.pass ? kOk : kInfeasible};
}

Outcome cmd_cuq(const CLI::App* sub, const Options& o, std::ostream& err) {
    const LoadedMoments lm = load_moments(o, err);
    const EtzComponents c = decompose_independent(lm.moments, tolerance_for(o, lm.moments));
    const CuqReport r = cuq_report(c, o.traj_cov);
    std::vector<EntryCriterionRow> rows;
    if (!o.entry_grid.empty()) rows = entry_criterion_study(c, o.entry_grid);

    if (o.format == "csv") {
        if (rows.empty()) {
            throw Error(ErrorCode::invalid_argument,
                        "--format csv writes the entry-criterion table; give --entry-grid");
        }
        return {report::entry_criterion_csv(rows), kOk};
    }
    Json j = base_report(sub, std::nullopt);
    j["data"] = lm.data_info;
    j["moments"] = moments_json(lm);
    j["components"] = report::to_json(c, lm.moments, feasibility_check(c, tolerance_for(o, lm.moments)));
    j["cuq"] = report::to_json(r);
    j["baselining_gain"] = baselining_gain(c);
    j["baselining_beneficial"] = baselining_beneficial(c);
    if (!baselining_beneficial(c)) {
        j["warning"] =
            "Var(E) >= Var(Z): change-from-baseline is no less variable than the milestone "
            "outcome; consider a different outcome measure";
    }
    if (o.delta) {
        j["sample_size"] = {
            {"delta", *o.delta},
            {"alpha", o.alpha},
            {"power", o.power},
            {"n_factual_milestone",
             sample_size(*o.delta, std::sqrt(r.var_factual_milestone), o.alpha, o.power)},
            {"n_factual_change",
             sample_size(*o.delta, std::sqrt(r.var_factual_change), o.alpha, o.power)},
            {"n_counterfactual",
             sample_size(*o.delta, std::sqrt(r.var_counterfactual), o.alpha, o.power)}};
    }
    if (!rows.empty()) j["entry_criterion"] = report::to_json(rows);
    return {report::dump(j), kOk};
}

Outcome cmd_samplesize(const CLI::App* sub, const Options& o, std::ostream& err) {
    require_json(o, "samplesize");
    if (!o.delta) throw Error(ErrorCode::invalid_argument, "samplesize needs --delta");
    Json j = base_report(sub, std::nullopt);
    if (o.sd) {
        if (has_summary(o) || !o.input.empty()) {
            throw Error(ErrorCode::invalid_argument, "give either --sd or moments, not both");
        }
        j["n"] = sample_size(*o.delta, *o.sd, o.alpha, o.power);
        return {report::dump(j), kOk};
    }
    const LoadedMoments lm = load_moments(o, err);
    const EtzComponents c = decompose_independent(lm.moments, tolerance_for(o, lm.moments));
    const CuqReport r = cuq_report(c, o.traj_cov);
    const auto n_mile = sample_size(*o.delta, std::sqrt(r.var_factual_milestone), o.alpha, o.power);
    const auto n_change = sample_size(*o.delta, std::sqrt(r.var_factual_change), o.alpha, o.power);
    const auto n_cf = sample_size(*o.delta, std::sqrt(r.var_counterfactual), o.alpha, o.power);
    j["data"] = lm.data_info;
    j["moments"] = moments_json(lm);
    j["variances"] = {{"factual_milestone", r.var_factual_milestone},
                      {"factual_change", r.var_factual_change},
                      {"counterfactual", r.var_counterfactual}};
    j["n_factual_milestone"] = n_mile;
    j["n_factual_change"] = n_change;
    j["n_counterfactual"] = n_cf;
    j["saving_vs_milestone"] = {
        {"baselining", 1.0 - static_cast<double>(n_change) / static_cast<double>(n_mile)},
        {"counterfactual", 1.0 - static_cast<double>(n_cf) / static_cast<double>(n_mile)}};
    j["n_meaning"] = "factual: subjects per arm; counterfactual: self-controlled subjects";
    return {report::dump(j), kOk};
}

Outcome cmd_simulate(const CLI::App* sub, const Options& o, std::ostream& err) {
    const ResolvedSeed seed = resolve_seed(o);
    const SimConfig cfg = sim_config(o, seed.value, err);
    const auto sim = simulate_counterfactual(cfg);
    if (o.format == "csv") {
        if (o.counterfactual) return {export_potential_outcomes(sim), kOk};
        return {export_wide(to_factual(sim, cfg.seed)), kOk};
    }
    const TrialDataset d = to_factual(sim, cfg.seed);
    const VisitMoments m = pooled_visit_moments(d);
    const EtzComponents c = decompose_unchecked(m);
    Json j = base_report(sub, seed);
    j["sim_config"] = report::to_json(cfg);
    j["moments"] = report::to_json(m, arm_visit_means(d));
    j["components"] = report::to_json(c, m, feasibility_check(c, default_tolerance(m)));
    j["independence_r2"] = independence_diagnostic(d);
    return {report::dump(j), kOk};
}

Outcome cmd_attenuation(const CLI::App* sub, const Options& o, std::ostream& err) {
    const ResolvedSeed seed = resolve_seed(o);
    const SimConfig cfg = sim_config(o, seed.value, err);
    OutcomeModelParams model{o.intercept, o.effect_rx, o.effect_c, o.slope_rx,
                             o.parallel_model ? o.slope_rx : o.slope_c, o.residual_var,
                             o.parallel_model};
    model.validate();
    const BiasStudy study = mc_bias_study(cfg, model, o.c_offset, o.replicates);
    if (o.format == "csv") return {report::replicate_csv(study), kOk};
    Json j = base_report(sub, seed);
    j["sim_config"] = report::to_json(cfg);
    j["outcome_model"] = report::to_json(model);
    j["study"] = report::to_json(study);
    if (o.deattenuate) {
        j["diagnostic_deattenuated_slope_c"] = study.deattenuated_slope_c();
        j["diagnostic_note"] = "fitted C slope on B divided by lambda; not applied to estimates";
    }
    return {report::dump(j), kOk};
}

Outcome cmd_diagnose(const CLI::App* sub, const Options& o, std::ostream& err) {
    require_json(o, "diagnose");
    const LoadedMoments lm = load_moments(o, err);
    Json j = base_report(sub, std::nullopt);
    j["data"] = lm.data_info;
    j["moments"] = moments_json(lm);
    Json arms = Json::object();
    for (const auto& [arm, m] : per_arm_visit_moments(*lm.data)) arms[arm] = report::to_json(m);
    j["per_arm_moments"] = arms;
    j["independence_r2"] = independence_diagnostic(*lm.data);
    return {report::dump(j), kOk};
}

// ---------------------------------------------------------------- config file

std::string normalize_key(std::string key) {
    for (char& ch : key) {
        if (ch == '_') ch = '-';
    }
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    return key;
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::pair<std::string, std::string>> parse_config(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = strip(line.substr(0, line.find('#')));
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_argument,
                        "config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string value = strip(s.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        out.emplace_back(normalize_key(strip(s.substr(0, eq))), value);
    }
    return out;
}

// Moves --config out of argv and appends the file's keys that the command
// line does not already set; command-line flags win.
std::vector<std::string> merge_config(std::vector<std::string> args, CLI::App& app) {
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
            break;
        }
    }
    if (path.empty()) return args;

    CLI::App* sub = nullptr;
    for (std::size_t i = 1; i < args.size() && !sub; ++i) {
        for (CLI::App* s : app.get_subcommands({})) {
            if (s->get_name() == args[i]) sub = s;
        }
    }
    if (!sub) throw Error(ErrorCode::invalid_argument, "--config needs a subcommand");

    std::set<std::string> given;
    for (const auto& a : args) {
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
    }
    for (const auto& [key, value] : parse_config(read_file(path))) {
        bool known = false;
        for (const CLI::App* s : app.get_subcommands({})) {
            known = known || s->get_option_no_throw("--" + key) != nullptr;
        }
        if (!known) throw Error(ErrorCode::invalid_argument, "config: unknown key '" + key + "'");
        if (!sub->get_option_no_throw("--" + key) || given.contains(key)) continue;
        if (kBooleanKeys.contains(key)) {
            if (value == "true" || value == "1") args.push_back("--" + key);
            continue;
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

int report_error(std::ostream& err, std::string_view code, const std::string& message) {
    err << "etz: error code=" << code << " message=" << Json(message).dump() << "\n";
    return kValidation;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"ETZ variance decomposition, counterfactual uncertainty quantification and "
                 "attenuation bias studies for repeated-measures trials",
                 "etz"};
    app.require_subcommand(1);
    app.add_option("--config", "Flat key = value file mirroring flag names");

    auto* decompose = app.add_subcommand(
        "decompose", "Split visit moments into Var(Z), Var(Traj) and Var(E)");
    add_io(decompose, o, false, "json");
    add_moments(decompose, o);
    decompose->add_flag("--per-arm", o.per_arm, "Also report unpooled per-arm moments");

    auto* cuq = app.add_subcommand(
        "cuq", "Factual vs counterfactual variances, reduction fractions and sample sizes");
    add_io(cuq, o, false, "json");
    add_moments(cuq, o);
    cuq->add_option("--traj-cov", o.traj_cov, "Cov(Traj^Rx, Traj^C) [outcome units^2]")
        ->capture_default_str();
    cuq->add_option("--entry-grid", o.entry_grid,
                    "Var(Z) values for the entry-criterion table [outcome units^2]")
        ->delimiter(',');
    cuq->add_option("--delta", o.delta, "Effect size to detect [outcome units]");
    cuq->add_option("--alpha", o.alpha, "Two-sided significance level [probability]")
        ->capture_default_str();
    cuq->add_option("--power", o.power, "Target power [probability]")->capture_default_str();

    auto* simulate = app.add_subcommand(
        "simulate", "Simulate a randomized trial from the counterfactual generative model");
    add_io(simulate, o, false, "csv");
    add_moments(simulate, o);
    add_sim(simulate, o);
    simulate->add_flag("--counterfactual", o.counterfactual,
                       "Write both potential outcomes per subject instead of the factual trial");

    auto* attenuation = app.add_subcommand(
        "attenuation", "Monte-Carlo bias study of control-side and equipoise estimators");
    add_io(attenuation, o, false, "json");
    add_moments(attenuation, o);
    add_sim(attenuation, o);
    attenuation->add_option("--replicates", o.replicates, "Monte-Carlo replicates [count]")
        ->capture_default_str();
    attenuation->add_option("--c-offset", o.c_offset,
                            "Offsets c >= 0 from E[Z] at which efficacy is evaluated "
                            "[outcome units]")
        ->delimiter(',')
        ->capture_default_str();
    attenuation->add_option("--intercept", o.intercept, "Model intercept [outcome units]")
        ->capture_default_str();
    attenuation->add_option("--effect-rx", o.effect_rx, "Rx fixed effect [outcome units]")
        ->capture_default_str();
    attenuation->add_option("--effect-c", o.effect_c, "C fixed effect [outcome units]")
        ->capture_default_str();
    attenuation->add_option("--slope-rx", o.slope_rx, "Rx slope on Z [unitless]")
        ->capture_default_str();
    attenuation->add_option("--slope-c", o.slope_c, "C slope on Z [unitless]")
        ->capture_default_str();
    attenuation->add_option("--residual-var", o.residual_var,
                            "Outcome residual variance [outcome units^2]")
        ->capture_default_str();
    attenuation->add_flag("--parallel-model", o.parallel_model,
                          "Use slope-rx for both arms (traditional-medicine model)");
    attenuation->add_flag("--deattenuate", o.deattenuate,
                          "Print the fitted C slope divided by lambda (diagnostic only)");

    auto* samplesize = app.add_subcommand(
        "samplesize", "Normal-approximation sample sizes for factual and counterfactual designs");
    add_io(samplesize, o, false, "json");
    add_moments(samplesize, o);
    samplesize->add_option("--traj-cov", o.traj_cov, "Cov(Traj^Rx, Traj^C) [outcome units^2]")
        ->capture_default_str();
    samplesize->add_option("--delta", o.delta, "Effect size to detect [outcome units]")->required();
    samplesize->add_option("--sd", o.sd, "SD of one comparison, bypassing moments [outcome units]");
    samplesize->add_option("--alpha", o.alpha, "Two-sided significance level [probability]")
        ->capture_default_str();
    samplesize->add_option("--power", o.power, "Target power [probability]")
        ->capture_default_str();

    auto* diagnose = app.add_subcommand(
        "diagnose", "Per-arm moments and the change-on-baseline R^2 diagnostic for a data file");
    add_io(diagnose, o, true, "json");

    try {
        std::vector<std::string> args = merge_config(argv, app);
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        try {
            app.parse(reversed);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return kOk;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return kOk;
        } catch (const CLI::ParseError& e) {
            return report_error(err, "usage", e.what());
        }

        CLI::App* sub = app.get_subcommands().front();
        if (const CLI::Option* fmt = sub->get_option("--format"); fmt->count() == 0) {
            o.format = fmt->get_default_str();
        }
        Outcome result;
        if (sub == decompose) {
            result = cmd_decompose(sub, o, err);
        } else if (sub == cuq) {
            result = cmd_cuq(sub, o, err);
        } else if (sub == simulate) {
            result = cmd_simulate(sub, o, err);
        } else if (sub == attenuation) {
            result = cmd_attenuation(sub, o, err);
        } else if (sub == samplesize) {
            result = cmd_samplesize(sub, o, err);
        } else {
            result = cmd_diagnose(sub, o, err);
        }
        write_output(o.output, result.text, out);
        return result.code;
    } catch (const InfeasibleDecomposition& e) {
        err << "etz: error code=infeasible message=" << Json(std::string(e.what())).dump() << "\n";
        return kInfeasible;
    } catch (const Error& e) {
        report_error(err, code_name(e.code()), e.what());
        if (e.code() == ErrorCode::infeasible) return kInfeasible;
        if (e.code() == ErrorCode::io) return kIo;
        return kValidation;
    } catch (const std::exception& e) {
        return report_error(err, "internal", e.what());
    }
}

}  // namespace etz::cli
