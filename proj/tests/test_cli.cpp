#include "etz/cli.hpp"
#include "etz/simulation.hpp"
#include "etz/trial_data.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "etz");
    std::ostringstream out, err;
    const int code = etz::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path tmp_dir() {
    const char* env = std::getenv("ETZ_TMP");
    fs::path p = fs::path(env ? env : fs::temp_directory_path().string()) / "cli_tmp";
    fs::create_directories(p);
    return p;
}

std::string write_tmp(const std::string& name, const std::string& text) {
    const fs::path p = tmp_dir() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const std::vector<std::string> kTableThree{"--var-baseline", "64.58", "--var-milestone", "135.39",
                                           "--var-change", "92.37"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST_CASE("decompose in summary mode") {
    const auto r = run(with({"decompose"}, kTableThree));
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(j["command"] == "decompose");
    CHECK(j["components"]["var_z"].get<double>() == doctest::Approx(53.80));
    CHECK(j["components"]["var_traj"].get<double>() == doctest::Approx(70.81));
    CHECK(j["components"]["var_e"].get<double>() == doctest::Approx(10.78));
    CHECK(j["components"]["feasible"] == true);
    CHECK(j["cov_terms"]["z_plus_covterm"].get<double>() == doctest::Approx(53.80));
    CHECK(j["config"]["var-baseline"].get<double>() == 64.58);
}

TEST_CASE("infeasible decomposition exits 3 with a report") {
    const auto r = run({"decompose", "--var-baseline", "100", "--var-milestone", "80",
                        "--var-change", "30"});
    CHECK(r.code == 3);
    const auto j = Json::parse(r.out);
    CHECK(j["components"]["feasible"] == false);
    CHECK(j["components"]["failing_components"][0] == "var_traj");
    CHECK(r.err.find("code=infeasible") != std::string::npos);

    CHECK(run({"cuq", "--var-baseline", "100", "--var-milestone", "80", "--var-change", "30"}).code ==
          3);
}

TEST_CASE("cuq report") {
    const auto r = run(with({"cuq", "--delta", "5", "--entry-grid", "20,53.8"}, kTableThree));
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(std::abs(100 * j["cuq"]["frac_total"].get<double>() - 39.74) <= 0.05);
    CHECK(j["cuq"]["denominator"] == "var_factual_milestone");
    CHECK(j["baselining_beneficial"] == true);
    CHECK(j["entry_criterion"].size() == 2);
    CHECK(j["sample_size"]["n_counterfactual"].get<int>() <
          j["sample_size"]["n_factual_milestone"].get<int>());

    const auto csv = run(with({"cuq", "--format", "csv", "--entry-grid", "20,53.8"}, kTableThree));
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("var_z,sd_baseline,sd_change\n", 0) == 0);

    const auto warn = run({"cuq", "--var-baseline", "50", "--var-milestone", "70",
                           "--var-change", "100"});
    REQUIRE(warn.code == 0);
    CHECK(Json::parse(warn.out).contains("warning"));
}

TEST_CASE("samplesize") {
    const auto direct = run({"samplesize", "--delta", "1", "--sd", "1"});
    REQUIRE(direct.code == 0);
    CHECK(Json::parse(direct.out)["n"] == 8);

    const auto moments = run(with({"samplesize", "--delta", "5"}, kTableThree));
    REQUIRE(moments.code == 0);
    const auto j = Json::parse(moments.out);
    CHECK(j["n_factual_change"].get<int>() < j["n_factual_milestone"].get<int>());
    CHECK(j["n_counterfactual"].get<int>() < j["n_factual_change"].get<int>());

    CHECK(run({"samplesize", "--sd", "1"}).code == 2);
    CHECK(run(with({"samplesize", "--delta", "1", "--sd", "1"}, kTableThree)).code == 2);
}

TEST_CASE("data mode, diagnose and per-arm moments") {
    etz::SimConfig cfg;
    cfg.n_subjects = 400;
    const auto d = etz::to_factual(etz::simulate_counterfactual(cfg), cfg.seed);
    const auto path = write_tmp("trial.csv", etz::export_wide(d));

    const auto dec = run({"decompose", "--input", path, "--per-arm"});
    REQUIRE(dec.code == 0);
    const auto j = Json::parse(dec.out);
    CHECK(j["data"]["mode"] == "data");
    CHECK(j["per_arm_moments"].contains("Rx"));
    CHECK(j["moments"]["tau_hat"].is_number());

    const auto diag = run({"diagnose", "--input", path});
    REQUIRE(diag.code == 0);
    const double r2 = Json::parse(diag.out)["independence_r2"];
    CHECK(r2 >= 0.0);
    CHECK(r2 <= 1.0);

    const auto missing = write_tmp("missing.csv", "subject_id,arm,y1,y2\na,C,1,\nb,C,2,3\nc,C,3,5\n"
                                                  "d,T,1,1\ne,T,2,4\nf,T,5,5\n");
    const auto m = run({"decompose", "--input", missing, "--tolerance", "1000"});
    CHECK(m.code == 0);
    CHECK(m.err.find("listwise_deletion dropped=1") != std::string::npos);
    CHECK(Json::parse(m.out)["data"]["dropped_per_arm"]["C"] == 1);

    CHECK(run(with({"decompose", "--input", path}, kTableThree)).code == 2);
}

TEST_CASE("simulate and attenuation") {
    const auto csv = run({"simulate", "--n", "50", "--seed", "3"});
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("subject_id,arm,y1,y2\n", 0) == 0);

    const auto cf = run({"simulate", "--n", "50", "--counterfactual"});
    CHECK(cf.out.rfind("subject_id,z,b,y1", 0) == 0);

    const auto js = run({"simulate", "--n", "500", "--format", "json", "--seed", "3"});
    REQUIRE(js.code == 0);
    CHECK(Json::parse(js.out)["config"]["seed_source"] == "flag");

    const auto att = run({"attenuation", "--n", "100", "--replicates", "100", "--deattenuate"});
    REQUIRE(att.code == 0);
    const auto j = Json::parse(att.out);
    CHECK(j["study"]["reports"].size() == 5);
    CHECK(j.contains("diagnostic_deattenuated_slope_c"));
    CHECK(j["config"]["seed_source"] == "default");

    const auto par = run({"attenuation", "--n", "100", "--replicates", "100", "--parallel-model",
                          "--c-offset", "5"});
    REQUIRE(par.code == 0);
    for (const auto& rep : Json::parse(par.out)["study"]["reports"]) {
        CHECK(rep["bias_equipoise"].get<double>() == 0.0);
    }

    const auto rows = run({"attenuation", "--n", "100", "--replicates", "100", "--format", "csv"});
    CHECK(std::count(rows.out.begin(), rows.out.end(), '\n') == 1 + 100 * 5);

    CHECK(run({"attenuation", "--n", "101", "--replicates", "100"}).code == 2);
    CHECK(run({"attenuation", "--replicates", "10"}).code == 2);
}

TEST_CASE("seed from the environment") {
    setenv("ETZ_SEED", "99", 1);
    const auto a = run({"simulate", "--n", "100", "--format", "json"});
    const auto b = run({"simulate", "--n", "100", "--format", "json", "--seed", "99"});
    setenv("ETZ_SEED", "oops", 1);
    const auto bad = run({"simulate", "--n", "100"});
    unsetenv("ETZ_SEED");
    REQUIRE(a.code == 0);
    const auto ja = Json::parse(a.out), jb = Json::parse(b.out);
    CHECK(ja["config"]["seed_source"] == "ETZ_SEED");
    CHECK(ja["moments"] == jb["moments"]);
    CHECK(bad.code == 2);
}

TEST_CASE("exit codes and error format") {
    const auto bad = run({"decompose", "--var-baseline", "-1", "--var-milestone", "1",
                          "--var-change", "1"});
    CHECK(bad.code == 2);
    CHECK(bad.err.rfind("etz: error code=", 0) == 0);
    CHECK(run({"decompose"}).code == 2);
    CHECK(run({"nonsense"}).code == 2);
    CHECK(run({"decompose", "--unknown-flag", "1"}).code == 2);
    CHECK(run(with({"decompose", "--format", "csv"}, kTableThree)).code == 2);
    const auto io = run({"decompose", "--input", "/nonexistent/file.csv"});
    CHECK(io.code == 4);
    CHECK(io.err.find("code=io") != std::string::npos);
    CHECK(run(with({"decompose", "--output", "/nonexistent/dir/out.json"}, kTableThree)).code == 4);
}

TEST_CASE("help lists every flag of a subcommand") {
    const auto r = run({"attenuation", "--help"});
    CHECK(r.code == 0);
    for (const char* flag : {"--replicates", "--c-offset", "--slope-rx", "--slope-c", "--seed",
                             "--var-e-biomarker", "--parallel-model", "--format", "--output"}) {
        CHECK_MESSAGE(r.out.find(flag) != std::string::npos, flag);
    }
    const auto top = run({"--help"});
    CHECK(top.code == 0);
    for (const char* sub : {"decompose", "cuq", "simulate", "attenuation", "samplesize", "diagnose"}) {
        CHECK(top.out.find(sub) != std::string::npos);
    }
}

TEST_CASE("config file merges under command-line flags") {
    const auto cfg = write_tmp("run.cfg", "# summary moments\nvar_baseline = 64.58\n"
                                          "var-milestone = 135.39\nvar_change = 92.37\n"
                                          "delta = 5\nn = 77\n");
    const auto r = run({"cuq", "--config", cfg});
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(std::abs(100 * j["cuq"]["frac_total"].get<double>() - 39.74) <= 0.05);
    CHECK(j.contains("sample_size"));

    const auto over = run({"cuq", "--config", cfg, "--var-change", "90"});
    REQUIRE(over.code == 0);
    CHECK(Json::parse(over.out)["moments"]["var_change"].get<double>() == 90.0);

    const auto unknown = write_tmp("bad.cfg", "no_such_key = 1\n");
    CHECK(run({"cuq", "--config", unknown}).code == 2);
    CHECK(run({"cuq", "--config", "/nonexistent.cfg"}).code == 4);
}

TEST_CASE("reports are byte-identical across runs") {
    const std::vector<std::string> args{"attenuation", "--n", "100", "--replicates", "100",
                                        "--seed", "11"};
    CHECK(run(args).out == run(args).out);

    const char* cli = std::getenv("ETZ_CLI");
    REQUIRE(cli != nullptr);
    // The JSON config echoes --out, so both runs write the same path.
    for (const std::string format : {"csv", "json"}) {
        const fs::path p = tmp_dir() / ("sim." + format);
        const std::string cmd = std::string("\"") + cli + "\" simulate --n 500 --seed 7 --format " +
                                format + " --out \"" + p.string() + "\"";
        REQUIRE(std::system(cmd.c_str()) == 0);
        const auto first = slurp(p);
        REQUIRE(std::system(cmd.c_str()) == 0);
        CHECK(!first.empty());
        CHECK(first == slurp(p));
    }
}
