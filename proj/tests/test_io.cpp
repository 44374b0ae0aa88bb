#include <catch_amalgamated.hpp>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sys/wait.h>

#include "streampred/io.hpp"

using namespace streampred;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / "streampred_io_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(STREAMPRED_CLI_PATH) + " " + args +
                            " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

fs::path synthetic_csv(const std::string& name, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(5.0, 2.0);
    std::ostringstream os;
    os << "t,price,qty\n";
    os.precision(17);
    for (int i = 0; i < n; ++i) os << i << ',' << d(rng) << ",2\n";
    return write_file(name, os.str());
}

}  // namespace

TEST_CASE("numeric formatting is fixed-precision and locale independent") {
    CHECK(format12(1.5) == "1.5");
    CHECK(format12(0.0) == "0");
    CHECK(format12(-2.25) == "-2.25");
    const double v = 1.0 / 3.0;
    const std::string s = format12(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == Catch::Approx(v).margin(1e-12));
    CHECK(s.find(',') == std::string::npos);
}

TEST_CASE("csv ingestion reads the named column in order") {
    const auto p = write_file("basic.csv",
                              "id,price\n1,2.5\n2,3.25\n3,-1\n");
    const auto r = ingest_csv(p, "price", 100);
    REQUIRE(r.observations.size() == 3);
    CHECK(r.rows_scanned == 3);
    CHECK(r.observations[0].index == 1);
    CHECK(r.observations[0].value == 2.5);
    CHECK(r.observations[1].value == 3.25);
    CHECK(r.observations[2].value == -1.0);
}

TEST_CASE("csv ingestion handles quotes, blank lines, and row caps") {
    const auto p = write_file("quoted.csv",
                              "name,\"price\"\n\"a,b\",1.5\n\n\"say \"\"hi\"\"\",2.5\nc,3.5\n");
    const auto r = ingest_csv(p, "price", 2);
    REQUIRE(r.observations.size() == 2);
    CHECK(r.observations[0].value == 1.5);
    CHECK(r.observations[1].value == 2.5);
    CHECK(r.rows_scanned == 2);  // blank line skipped, cap reached before c
}

TEST_CASE("derived column as a product expression") {
    const auto p = write_file("prod.csv",
                              "Quantity,UnitPrice\n2,3.5\n4,0.25\n");
    const auto r = ingest_csv(p, "Quantity*UnitPrice", 10);
    REQUIRE(r.observations.size() == 2);
    CHECK(r.observations[0].value == Catch::Approx(7.0).margin(1e-12));
    CHECK(r.observations[1].value == Catch::Approx(1.0).margin(1e-12));
    // whitespace around the names is tolerated
    const auto r2 = ingest_csv(p, "Quantity * UnitPrice", 10);
    CHECK(r2.observations[0].value == Catch::Approx(7.0).margin(1e-12));
}

TEST_CASE("csv ingestion errors name the offending row") {
    CHECK_THROWS_AS(ingest_csv(scratch() / "missing.csv", "x", 10), data_error);
    const auto empty = write_file("empty.csv", "");
    CHECK_THROWS_AS(ingest_csv(empty, "x", 10), data_error);
    const auto nocol = write_file("nocol.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(ingest_csv(nocol, "price", 10), data_error);
    const auto headonly = write_file("headonly.csv", "a,b\n");
    CHECK_THROWS_AS(ingest_csv(headonly, "a", 10), data_error);
    const auto bad = write_file("bad.csv", "a\n1\nnope\n");
    try {
        ingest_csv(bad, "a", 10);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    const auto shortrow = write_file("short.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(ingest_csv(shortrow, "b", 10), data_error);
    CHECK_THROWS_AS(ingest_csv(nocol, "a", 0), config_error);
}

TEST_CASE("config parsing round-trips and rejects unknown keys") {
    nlohmann::ordered_json j;
    j["input"] = "in.csv";
    j["column"] = "price";
    j["max_rows"] = 500;
    j["burnin_frac"] = 0.2;
    j["grid_points"] = 5;
    j["seed"] = 9;
    j["output_dir"] = "outdir";
    j["methods"] = {"sht", nlohmann::ordered_json{{"name", "dpp"}, {"dpp_mass", 2.0}}};
    const RunConfig c = parse_run_config(j);
    CHECK(c.input == "in.csv");
    CHECK(c.column == "price");
    CHECK(c.max_rows == 500);
    CHECK(c.burnin_frac == 0.2);
    CHECK(c.grid_points == 5);
    CHECK(c.seed == 9);
    CHECK(c.output_dir == "outdir");
    REQUIRE(c.methods.size() == 2);
    CHECK(c.methods[0].label == "sht");
    CHECK(c.methods[1].label == "dpp");
    CHECK(c.methods[1].params.dpp_mass == 2.0);
    CHECK(c.echo == j);

    auto bad = j;
    bad["bogus"] = 1;
    CHECK_THROWS_AS(parse_run_config(bad), config_error);
    auto bad2 = j;
    bad2["methods"] = {nlohmann::ordered_json{{"name", "dpp"}, {"bogus", 1}}};
    CHECK_THROWS_AS(parse_run_config(bad2), config_error);
    auto bad3 = j;
    bad3["methods"] = {"sht", "sht"};
    CHECK_THROWS_AS(parse_run_config(bad3), config_error);
    auto bad4 = j;
    bad4["methods"] = nlohmann::ordered_json::array();
    CHECK_THROWS_AS(parse_run_config(bad4), config_error);
    auto bad5 = j;
    bad5["methods"] = {nlohmann::ordered_json{{"dpp_mass", 2.0}}};
    CHECK_THROWS_AS(parse_run_config(bad5), config_error);
    auto bad6 = j;
    bad6.erase("input");
    CHECK_THROWS_AS(parse_run_config(bad6), config_error);
    auto bad7 = j;
    bad7["methods"] = {"nope"};
    CHECK_THROWS_AS(parse_run_config(bad7), config_error);
}

TEST_CASE("'all' expands to the twelve methods") {
    nlohmann::ordered_json j;
    j["input"] = "in.csv";
    j["column"] = "x";
    j["methods"] = {"all"};
    const RunConfig c = parse_run_config(j);
    REQUIRE(c.methods.size() == 12);
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(c.methods[i].label == method_label(legal_ids()[i]));
}

TEST_CASE("library run writes traces, curves, and a replayable manifest") {
    const auto csv = synthetic_csv("run_in.csv", 300, 71);
    nlohmann::ordered_json j;
    j["input"] = csv.string();
    j["column"] = "price";
    j["burnin_frac"] = 0.10;
    j["grid_points"] = 5;
    j["seed"] = 3;
    j["output_dir"] = (scratch() / "run_a").string();
    j["methods"] = {"sht", "dpp"};
    const RunConfig cfg = parse_run_config(j);
    const auto manifest = run(cfg);

    CHECK(manifest.at("library_version") == kLibraryVersion);
    CHECK(manifest.at("rows_used") == 300);
    CHECK(manifest.at("burnin") == 30);
    REQUIRE(manifest.at("results").size() == 2);
    for (const char* label : {"sht", "dpp"}) {
        const auto dir = scratch() / "run_a" / label;
        const std::string trace = slurp(dir / "cpe_trace.csv");
        CHECK(trace.rfind("index,y,yhat,abs_err,cpe\n", 0) == 0);
        CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 270);
        const std::string curve = slurp(dir / "sensitivity.csv");
        CHECK(curve.rfind("tau,cpe\n", 0) == 0);
        CHECK(std::count(curve.begin(), curve.end(), '\n') == 1 + 5);
        const auto& r = manifest.at("results").at(label);
        CHECK(r.at("taus").size() == 5);
        CHECK(r.at("cpes").size() == 5);
        CHECK(r.at("seed") == 3);
    }

    // replay through the echoed config into a fresh directory: identical bytes
    RunConfig replay = parse_run_config(manifest.at("config"));
    replay.output_dir = scratch() / "run_b";
    run(replay);
    for (const char* label : {"sht", "dpp"}) {
        CHECK(slurp(scratch() / "run_a" / label / "cpe_trace.csv") ==
              slurp(scratch() / "run_b" / label / "cpe_trace.csv"));
        CHECK(slurp(scratch() / "run_a" / label / "sensitivity.csv") ==
              slurp(scratch() / "run_b" / label / "sensitivity.csv"));
    }
}

TEST_CASE("run propagates stream-too-short configs as config errors") {
    const auto csv = synthetic_csv("tiny.csv", 3, 72);
    nlohmann::ordered_json j;
    j["input"] = csv.string();
    j["column"] = "price";
    j["burnin_frac"] = 0.10;
    j["output_dir"] = (scratch() / "tiny_out").string();
    j["methods"] = {"sht"};
    CHECK_THROWS_AS(run(parse_run_config(j)), config_error);
}

TEST_CASE("cli lists methods and reports exit codes") {
    CHECK(run_cli("methods") == 0);
    CHECK(run_cli("run") != 0);  // missing required inputs
    CHECK(run_cli("run --input nope.csv") == 1);   // no column: config error
    const auto csv = synthetic_csv("cli_in.csv", 200, 73);
    CHECK(run_cli("run --input " + csv.string() + " --column nope --methods sht --out " +
                  (scratch() / "cli_bad").string()) == 2);  // data error
    const auto badcfg = write_file("bad.json", "{not json");
    CHECK(run_cli("run --config " + badcfg.string()) == 1);
    const auto unknowncfg = write_file(
        "unknown.json",
        "{\"input\":\"x.csv\",\"column\":\"a\",\"methods\":[\"sht\"],\"zzz\":1}");
    CHECK(run_cli("run --config " + unknowncfg.string()) == 1);
}

TEST_CASE("cli run and replay produce identical artifacts") {
    const auto csv = synthetic_csv("cli_run.csv", 250, 74);
    const auto out1 = scratch() / "cli_a";
    const auto out2 = scratch() / "cli_b";
    CHECK(run_cli("run --input " + csv.string() +
                  " --column price --methods sht,dpp,cm-mean --grid-points 5"
                  " --seed 11 --out " + out1.string()) == 0);
    CHECK(run_cli("replay --manifest " + (out1 / "manifest.json").string() +
                  " --out " + out2.string()) == 0);
    for (const char* label : {"sht", "dpp", "cm-mean"}) {
        CHECK(slurp(out1 / label / "cpe_trace.csv") ==
              slurp(out2 / label / "cpe_trace.csv"));
        CHECK(slurp(out1 / label / "sensitivity.csv") ==
              slurp(out2 / label / "sensitivity.csv"));
    }
    CHECK(run_cli("replay --manifest " + (out1 / "missing.json").string()) == 1);
}
