#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "pumpcast/pumpcast.hpp"
#include "test_util.hpp"

using namespace pumpcast;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_or_empty(const std::string& path) {
    try {
        return read_file(path);
    } catch (const IoError&) {
        return "";
    }
}

// Runs the installed binary with shell redirection; the sandbox is
// POSIX-only, so WEXITSTATUS is fine here.
CliResult run_cli(const testutil::TempDir& dir, const std::string& args) {
    static int counter = 0;
    const std::string tag = std::to_string(counter++);
    const std::string out_path = dir.file("cli_" + tag + ".out");
    const std::string err_path = dir.file("cli_" + tag + ".err");
    const std::string command = std::string("'") + PUMPCAST_CLI_PATH + "' " + args + " > '" +
                                out_path + "' 2> '" + err_path + "'";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_or_empty(out_path);
    result.err = read_or_empty(err_path);
    return result;
}

// Quiet 200-minute profile for the data-stage commands.
std::string write_small_config(const testutil::TempDir& dir, const std::string& name,
                               std::uint64_t seed) {
    json j;
    j["seed"] = seed;
    j["windows"] = {20};
    j["horizons"] = {3};
    j["data"]["synthetic"]["duration_minutes"] = 200;
    const auto path = dir.file(name);
    write_file(path, j.dump(2) + "\n");
    return path;
}

// Two-episode profile: one fault in the training prefix, one in the test
// segment. Model sizes are tiny so grid invocations stay snappy.
std::string write_grid_config(const testutil::TempDir& dir, const std::string& output_dir) {
    json j;
    j["seed"] = 11;
    j["output_dir"] = output_dir;
    j["windows"] = {20};
    j["horizons"] = {3};
    j["data"]["synthetic"]["duration_minutes"] = 400;
    j["data"]["synthetic"]["sensors"]["flow"]["noise_std"] = 5.0;
    j["data"]["synthetic"]["sensors"]["flow"]["seasonal_amplitude"] = 10.0;
    j["data"]["synthetic"]["episodes"] = {{{"start_minute", 120},
                                           {"ramp_minutes", 5},
                                           {"duration_minutes", 30},
                                           {"severity", 5.0},
                                           {"sensors", {"vibration"}}},
                                          {{"start_minute", 330},
                                           {"ramp_minutes", 5},
                                           {"duration_minutes", 30},
                                           {"severity", 5.0},
                                           {"sensors", {"vibration"}}}};
    j["forest"]["n_trees"] = 6;
    j["boosted"]["rounds"] = 6;
    j["logistic"]["epochs"] = 40;
    j["isolation"]["n_trees"] = 20;
    j["eval"]["bootstrap_resamples"] = 20;
    const auto path = dir.file("grid_config.json");
    write_file(path, j.dump(2) + "\n");
    return path;
}

}  // namespace

TEST_CASE("bare invocation prints help and signals misuse") {
    testutil::TempDir dir;
    const auto result = run_cli(dir, "");
    REQUIRE(result.exit_code == 2);
    REQUIRE(result.out.empty());
    REQUIRE(result.err.find("Usage") != std::string::npos);
    REQUIRE(result.err.find("grid") != std::string::npos);
}

TEST_CASE("print-config echoes the fully resolved defaults") {
    testutil::TempDir dir;
    const auto result = run_cli(dir, "--print-config");
    REQUIRE(result.exit_code == 0);
    const auto j = json::parse(result.out);
    REQUIRE(j.at("seed").get<std::uint64_t>() == 42);
    REQUIRE(j.at("windows") == json({60, 120}));
    REQUIRE(j.at("horizons") == json({5, 15, 30}));
    REQUIRE(j.at("smote").at("enabled").get<bool>());

    const auto overridden = run_cli(dir, "--print-config --seed 7 --output-dir elsewhere");
    REQUIRE(overridden.exit_code == 0);
    const auto j2 = json::parse(overridden.out);
    REQUIRE(j2.at("seed").get<std::uint64_t>() == 7);
    REQUIRE(j2.at("output_dir").get<std::string>() == "elsewhere");
}

TEST_CASE("config errors exit 2 with a structured message") {
    testutil::TempDir dir;
    const auto path = dir.file("bad.json");
    write_file(path, "{\"bogus\": 1}\n");
    const auto result = run_cli(dir, "--config '" + path + "' --print-config");
    REQUIRE(result.exit_code == 2);
    const auto j = json::parse(result.err);
    REQUIRE(j.at("error").at("type").get<std::string>() == "config");
    REQUIRE(j.at("error").at("message").get<std::string>().find("bogus") != std::string::npos);
}

TEST_CASE("a missing config file is an io failure, not a config failure") {
    testutil::TempDir dir;
    const auto result = run_cli(dir, "--config '" + dir.file("absent.json") + "' --print-config");
    REQUIRE(result.exit_code == 1);
    const auto j = json::parse(result.err);
    REQUIRE(j.at("error").at("type").get<std::string>() == "runtime");
}

TEST_CASE("rejected flag values never reach the pipeline") {
    testutil::TempDir dir;
    const auto result = run_cli(dir, "--jobs 0 grid");
    REQUIRE(result.exit_code != 0);
}

TEST_CASE("generate, label and features chain through files") {
    testutil::TempDir dir;
    const auto config = write_small_config(dir, "config.json", 3);
    const auto telemetry = dir.file("telemetry.csv");
    const auto labeled = dir.file("labeled.csv");
    const auto samples = dir.file("samples.csv");

    auto result = run_cli(dir, "--config '" + config + "' generate --out '" + telemetry + "'");
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.out.find("(200 records)") != std::string::npos);
    const auto ingested = ingest_csv_text(read_file(telemetry));
    REQUIRE(ingested.series.size() == 200);
    REQUIRE(ingested.series.contiguous());

    result = run_cli(dir, "--config '" + config + "' label --out '" + labeled + "'");
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.out.find("(200 records)") != std::string::npos);
    const auto relabeled = labeled_series_from_csv(read_file(labeled));
    REQUIRE(relabeled.size() == 200);
    REQUIRE(relabeled.series == ingested.series);

    result = run_cli(dir, "--config '" + config + "' features --out '" + samples + "'");
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.out.find("(178 samples)") != std::string::npos);
    const auto dataset = dataset_from_csv(read_file(samples));
    REQUIRE(dataset.size() == 178);
    REQUIRE(dataset.dimension() == 25);
}

TEST_CASE("generation is seed-stable and seed-sensitive") {
    testutil::TempDir dir;
    const auto config = write_small_config(dir, "config.json", 3);
    const auto a = dir.file("a.csv");
    const auto b = dir.file("b.csv");
    const auto c = dir.file("c.csv");
    REQUIRE(run_cli(dir, "--config '" + config + "' generate --out '" + a + "'").exit_code == 0);
    REQUIRE(run_cli(dir, "--config '" + config + "' generate --out '" + b + "'").exit_code == 0);
    REQUIRE(run_cli(dir, "--config '" + config + "' --seed 99 generate --out '" + c +
                             "'").exit_code == 0);
    REQUIRE(read_file(a) == read_file(b));
    REQUIRE(read_file(a) != read_file(c));
}

TEST_CASE("a csv source with the wrong header exits 3") {
    testutil::TempDir dir;
    const auto csv = dir.file("wrong.csv");
    write_file(csv, "time,vib,temp,flow,pressure,current\n");
    json j;
    j["data"]["source"] = "csv";
    j["data"]["csv_path"] = csv;
    const auto config = dir.file("config.json");
    write_file(config, j.dump() + "\n");

    const auto result = run_cli(dir, "--config '" + config + "' label");
    REQUIRE(result.exit_code == 3);
    const auto err = json::parse(result.err);
    REQUIRE(err.at("error").at("type").get<std::string>() == "data");
}

TEST_CASE("train writes a reloadable model") {
    testutil::TempDir dir;
    const auto output = dir.file("out");
    const auto config = write_grid_config(dir, output);
    const auto model_path = dir.file("model.json");
    const auto result = run_cli(dir, "--config '" + config + "' train --model boosted --out '" +
                                         model_path + "'");
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.out.find("wrote") != std::string::npos);
    const auto model = load_model(model_path);
    REQUIRE(std::holds_alternative<BoostedModel>(model));

    const auto unknown = run_cli(dir, "--config '" + config + "' train --model svm");
    REQUIRE(unknown.exit_code == 2);
}

TEST_CASE("evaluate prints a metric line and stores run artifacts") {
    testutil::TempDir dir;
    const auto output = dir.file("out");
    const auto config = write_grid_config(dir, output);
    const auto result = run_cli(dir, "--config '" + config + "' evaluate --model forest");
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.out.rfind("L20_h3_forest: recall=", 0) == 0);
    REQUIRE(result.out.find("auroc=") != std::string::npos);
    REQUIRE(fs::exists(fs::path(output) / "runs" / "L20_h3_forest" / "metrics.json"));
    REQUIRE(fs::exists(fs::path(output) / "runs" / "L20_h3_forest" / "predictions.csv"));
}

TEST_CASE("report re-emits grid summaries byte-identically") {
    testutil::TempDir dir;
    const auto output = dir.file("out");
    const auto config = write_grid_config(dir, output);

    const auto grid = run_cli(dir, "--config '" + config + "' --jobs 2 grid");
    REQUIRE(grid.exit_code == 0);
    REQUIRE(grid.out.find("(8 runs, 0 failed)") != std::string::npos);

    const auto summary = read_file((fs::path(output) / "summary.csv").string());
    const auto long_rows = read_file((fs::path(output) / "long.csv").string());
    const auto mcnemar_rows = read_file((fs::path(output) / "mcnemar.csv").string());
    REQUIRE(summary.find("forest") != std::string::npos);

    const auto report = run_cli(dir, "--output-dir '" + output + "' report");
    REQUIRE(report.exit_code == 0);
    REQUIRE(read_file((fs::path(output) / "summary.csv").string()) == summary);
    REQUIRE(read_file((fs::path(output) / "long.csv").string()) == long_rows);
    REQUIRE(read_file((fs::path(output) / "mcnemar.csv").string()) == mcnemar_rows);
}
