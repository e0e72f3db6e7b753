#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "flowsched/instance.hpp"
#include "support/builders.hpp"

using flowsched::testing::make_instance;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    std::string capture = temp_path("fs_cli_out_" + std::to_string(counter++) + ".txt");
    std::string cmd = std::string(FLOWSCHED_CLI_PATH) + " " + args + " >" + capture + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(status);
    r.out = read_file(capture);
    return r;
}

}  // namespace

TEST_CASE("generate writes identical bytes for identical flags") {
    auto a = temp_path("fs_gen_a.json");
    auto b = temp_path("fs_gen_b.json");
    std::string flags = "generate --n 3 --m 2 --pmax 4 --rmax 4 --density 1.0 --seed 7 --out ";
    CHECK(run_cli(flags + a).exit_code == 0);
    CHECK(run_cli(flags + b).exit_code == 0);
    CHECK(read_file(a) == read_file(b));
    CHECK(!read_file(a).empty());
}

TEST_CASE("generate usage errors exit with 2") {
    CHECK(run_cli("generate --n 3 --m 2 --pmax 4 --rmax 4 --density 1.0 --seed 7").exit_code == 2);
    CHECK(run_cli("generate --n 3 --m 2 --pmax 4 --rmax 4 --density 0 --seed 7 --out " +
                  temp_path("fs_gen_zero.json"))
              .exit_code == 2);
}

TEST_CASE("solve total reports the flow of the single-unit instance") {
    auto path = temp_path("fs_solve_one.json");
    flowsched::save_instance(make_instance(1, {{0, {1}}}), path);
    CliResult r = run_cli("solve --objective total --in " + path);
    REQUIRE(r.exit_code == 0);
    auto out = nlohmann::json::parse(r.out);
    CHECK(out["total_flow"] == 1);
    CHECK(out["audit_pass"] == true);
}

TEST_CASE("solve max reports the boundary") {
    auto path = temp_path("fs_solve_pair.json");
    flowsched::save_instance(make_instance(1, {{0, {2}}, {1, {2}}}), path);
    auto sched = temp_path("fs_sched.json");
    auto trace = temp_path("fs_trace.json");
    CliResult r =
        run_cli("solve --objective max --in " + path + " --out " + sched + " --trace " + trace);
    REQUIRE(r.exit_code == 0);
    auto out = nlohmann::json::parse(r.out);
    CHECK(out["bound"] == 3);
    auto sched_json = nlohmann::json::parse(read_file(sched));
    CHECK(sched_json.contains("machines"));
    CHECK(sched_json.contains("metrics"));
    auto trace_json = nlohmann::json::parse(read_file(trace));
    CHECK(trace_json.contains("rounds"));
}

TEST_CASE("solve on a missing or invalid file exits with 1") {
    CHECK(run_cli("solve --objective total --in /nonexistent.json").exit_code == 1);
    auto path = temp_path("fs_invalid.json");
    std::ofstream(path) << R"({"m": 1, "jobs": [{"id": 0, "r": 0, "p": [null]}]})";
    CHECK(run_cli("solve --objective total --in " + path).exit_code == 1);
}

TEST_CASE("an injected fault makes the audit fail with exit 3") {
    auto path = temp_path("fs_solve_inject.json");
    flowsched::save_instance(make_instance(2, {{0, {2, 3}}, {1, {1, 1}}, {0, {3, 1}}}), path);
    CHECK(run_cli("solve --objective total --in " + path + " --inject-fault").exit_code == 3);
    CHECK(run_cli("solve --objective max --in " + path + " --inject-fault").exit_code == 3);
    CHECK(run_cli("solve --objective total --in " + path).exit_code == 0);
}

TEST_CASE("solve --preprocess keeps a candidate result") {
    auto path = temp_path("fs_solve_prep.json");
    flowsched::save_instance(make_instance(1, {{0, {8}}, {0, {1}}}), path);
    CliResult r = run_cli("solve --objective total --preprocess --in " + path);
    REQUIRE(r.exit_code == 0);
    auto out = nlohmann::json::parse(r.out);
    CHECK(out["preprocess"]["applied"] == true);
    CHECK(out["preprocess"]["candidate"] == 8);
}

TEST_CASE("compare reports ratios and additive gaps") {
    auto path = temp_path("fs_cmp_one.json");
    flowsched::save_instance(make_instance(1, {{0, {1}}}), path);
    CliResult r = run_cli("compare --in " + path);
    REQUIRE(r.exit_code == 0);
    auto out = nlohmann::json::parse(r.out);
    CHECK(out["total"]["ratio"] == "1");
    CHECK(out["total"]["oracle"] == 1);
    CHECK(out["max"]["additive_gap"] == 0);
}

TEST_CASE("compare refuses instances over the oracle cap") {
    auto path = temp_path("fs_cmp_big.json");
    std::vector<std::pair<long, std::vector<std::optional<long>>>> jobs;
    for (int i = 0; i < 8; ++i) jobs.push_back({0, {1}});
    flowsched::save_instance(make_instance(1, jobs), path);
    CHECK(run_cli("compare --in " + path).exit_code == 1);
    CHECK(run_cli("compare --cap 8 --in " + path).exit_code == 0);
}

TEST_CASE("bench runs a small grid deterministically") {
    auto out_a = temp_path("fs_bench_a.json");
    auto out_b = temp_path("fs_bench_b.json");
    std::string grid = "\"n=2,3;m=1,2;pmax=2;rmax=2;density=1.0;seeds=0,1\"";
    std::string work_a = temp_path("fs_bench_work_a");
    std::string work_b = temp_path("fs_bench_work_b");
    CHECK(run_cli("bench --grid " + grid + " --workdir " + work_a + " --out " + out_a).exit_code ==
          0);
    CHECK(run_cli("bench --grid " + grid + " --workdir " + work_b + " --out " + out_b).exit_code ==
          0);
    CHECK(read_file(out_a) == read_file(out_b));
    auto report = nlohmann::json::parse(read_file(out_a));
    CHECK(report["aggregates"]["instances"] == 8);
    CHECK(report["aggregates"]["aborted"] == false);
    for (const auto& row : report["instances"]) {
        CHECK(row["total"]["audit_pass"] == true);
        CHECK(row["max"]["audit_pass"] == true);
    }
}

TEST_CASE("bench rejects an empty or malformed grid with exit 2") {
    CHECK(run_cli("bench --grid \"n=3..2\"").exit_code == 2);
    CHECK(run_cli("bench --grid \"bogus=1\"").exit_code == 2);
}
