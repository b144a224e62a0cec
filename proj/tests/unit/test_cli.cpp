#include <doctest.h>

#include "dosekit/cli.hpp"
#include "dosekit/doseresponse.hpp"
#include "dosekit/error.hpp"
#include "support.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace dosekit;
using namespace dosekit::cli;

namespace {

struct RunResult {
    int code = 0;
    std::string out;
    std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dosekit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    RunResult r;
    r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
    const auto cfg = parse_config("[run]\nseed = 7\njobs = 3\n[design]\nscale = 10\n[world]\nprior_unsafe = 0.2\n", "/tmp/base");
    CHECK(*cfg.seed == 7);
    CHECK(cfg.jobs == 3);
    CHECK(cfg.scale == 10);
    CHECK(cfg.world.prior_unsafe == 0.2);

    const auto kind = [](const std::string& text) {
        try {
            (void)parse_config(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::io;
    };
    CHECK(kind("[run]\njobs = 1\n") == ErrorKind::config);
    CHECK(kind("[run]\nseed = 1\nbogus = 2\n") == ErrorKind::config);
    CHECK(kind("[nope]\nx = 1\n[run]\nseed = 1\n") == ErrorKind::config);
    CHECK(kind("[run]\nseed = -4\n") == ErrorKind::config);
    CHECK(kind("[run]\nseed = 1\n[stats]\nci_level = 1.5\n") == ErrorKind::config);

    const auto shipped = load_config(std::string(DOSEKIT_DATA_DIR) + "/../config/default.ini");
    CHECK(*shipped.seed == kDefaultSeed);
    auto moved = shipped;
    moved.out_dir = "/elsewhere";
    moved.jobs = 8;
    CHECK(canonical_config(moved) == canonical_config(shipped));
    moved.world.prior_unsafe = 0.2;
    CHECK(canonical_config(moved) != canonical_config(shipped));
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("empty verdict file is a structured error") {
    testsupport::TempDir dir("cli_empty");
    write_file(dir.file("empty.jsonl"), "");
    const auto r = run_cli({"--out", dir.file("out"), "analyze", dir.file("empty.jsonl")});
    CHECK(r.code != 0);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["error"]["command"] == "analyze");
    CHECK(j["error"]["kind"] == "empty_input");
}

TEST_CASE("usage and config errors") {
    auto r = run_cli({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "usage");
    testsupport::TempDir dir("cli_cfg");
    write_file(dir.file("bad.ini"), "[run]\njobs = 1\n");
    r = run_cli({"--config", dir.file("bad.ini"), "plan"});
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "config");
    write_file(dir.file("dup.jsonl"),
               "{\"condition\":\"A\",\"judge\":\"j\",\"prompt_id\":\"1\",\"stratum\":\"safe\",\"unsafe\":false}\n"
               "{\"condition\":\"A\",\"judge\":\"j\",\"prompt_id\":\"1\",\"stratum\":\"safe\",\"unsafe\":true}\n");
    r = run_cli({"--out", dir.file("o"), "analyze", dir.file("dup.jsonl")});
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["error"]["kind"] == "duplicate_key");
    CHECK(j["error"]["line"] == 2);
}

TEST_CASE("fit on the shipped reference points") {
    testsupport::TempDir dir("cli_fit");
    const auto r = run_cli({"--out", dir.str(), "fit", testsupport::data_path("dose_response_reference.csv")});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(read_file(dir.file("fit_report.json")));
    const auto& hill = report["models"][0];
    CHECK(hill["model"] == "hill");
    CHECK(hill["params"]["q0"].get<double>() == doctest::Approx(16.6).epsilon(0.02));
    CHECK(hill["params"]["ec50"].get<double>() == doctest::Approx(1.2).epsilon(0.15));
    CHECK(std::filesystem::exists(dir.file("fit_plot.svg")));
    const auto manifest = nlohmann::json::parse(read_file(dir.file("fit.run.json")));
    CHECK(manifest["tool_version"] == kToolVersion);
    CHECK(manifest["config_sha256"].get<std::string>().size() == 64);
    CHECK(manifest["inputs"].size() == 1);
}

TEST_CASE("simulate then fit gives a monotone curve") {
    testsupport::TempDir dir("cli_sim");
    ToolConfig cfg = default_config();
    cfg.out_dir = dir.str();
    cfg.samples_per_prompt = 50;
    cfg.targets = dir.file("targets.csv");
    write_file(cfg.targets,
               "name,mode,p,U,N\n"
               "P0,filter_all_unsafe,,,\n"
               "P1,oversample_to_p,0.01,,\n"
               "P5,oversample_to_p,0.05,,\n"
               "P10,oversample_to_p,0.10,,\n");
    cmd_simulate(cfg);
    cmd_analyze(cfg);
    cmd_fit(cfg);
    const auto points = doseresponse::read_points(dir.file("points.csv"));
    CHECK(points.points.size() == 4);
    const auto report = nlohmann::json::parse(read_file(dir.file("fit_report.json")));
    const auto& params = report["models"][0]["params"];
    CHECK(params["dmax"].get<double>() > 0.0);
    for (const char* name : {"simulate.run.json", "analyze.run.json", "fit.run.json"}) {
        CHECK(std::filesystem::exists(dir.file(name)));
    }
}

TEST_CASE("plan and mix commands") {
    testsupport::TempDir dir("cli_plan");
    ToolConfig cfg = default_config();
    cfg.out_dir = dir.str();
    const auto written = cmd_plan(cfg);
    CHECK(std::find(written.begin(), written.end(), "plan.csv") != written.end());
    CHECK(read_file(dir.file("contrasts.json")).find("matched_count_varying_proportion") != std::string::npos);
    cmd_mix(cfg);
    const auto verification = nlohmann::json::parse(read_file(dir.file("verification.json")));
    for (const auto& v : verification) CHECK(v["pass"] == true);
}

TEST_CASE("decompose and agree on fixtures") {
    testsupport::TempDir dir("cli_misc");
    auto r = run_cli({"--out", dir.str(), "--format", "json", "decompose", testsupport::data_path("seed_matrix_c0.csv"),
                      testsupport::data_path("seed_matrix_c1.csv")});
    CHECK(r.code == 0);
    r = run_cli({"--out", dir.str(), "agree", testsupport::data_path("cross_judge_encoders.csv")});
    CHECK(r.code == 0);
    CHECK(std::filesystem::exists(dir.file("profile.json")));
}

}
