#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "msrds/cli/commands.hpp"
#include "msrds/cli/emit.hpp"
#include "msrds/errors.hpp"

using namespace msrds;
using cli::ResultTable;
using cli::RunConfig;

namespace {

namespace fs = std::filesystem;

fs::path tmp_dir() {
    const fs::path dir = fs::path(MSRDS_TEST_TMPDIR);
    fs::create_directories(dir);
    return dir;
}

fs::path write_tmp(const std::string& name, const std::string& contents) {
    const fs::path path = tmp_dir() / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(MSRDS_BIN) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

constexpr const char* kPitchforkConfig =
    R"({"model": {"kind": "pitchfork", "alpha": -0.75, "beta": 1}})";

}  // namespace

TEST_CASE("load_config: minimal pitchfork document fills defaults") {
    const auto config = cli::parse_config(kPitchforkConfig);
    CHECK(config.kind == RunConfig::ModelKind::kPitchfork);
    CHECK(config.alpha == -0.75);
    CHECK(config.beta == 1.0);
    CHECK(config.dimension == 1);
    CHECK(config.seed == 12345);
    CHECK(config.spectrum.horizon == 50.0);
    CHECK(config.spectrum.samples == 64);
    CHECK(config.formats == std::vector<std::string>{"csv"});
    CHECK(config.config_hash.size() == 16);
    // defaults are echoed in the canonical serialization
    CHECK(config.effective_json.find("\"horizon\":50.0") != std::string::npos);
}

TEST_CASE("load_config: dimension mismatch names the offending matrix") {
    const std::string bad = R"({"model": {"kind": "linear", "d": 2,
        "A": [[0,0],[0,0]], "B": [[0,0,0],[0,0,0]],
        "C": [[0,0],[0,0]], "D": [[0,0],[0,0]]}})";
    try {
        (void)cli::parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("model.B") != std::string::npos);
    }
}

TEST_CASE("load_config: unknown keys are rejected") {
    const std::string bad =
        R"({"model": {"kind": "pitchfork", "alpha": 0}, "gamma": 1})";
    try {
        (void)cli::parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("gamma") != std::string::npos);
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
}

TEST_CASE("load_config: parse errors carry line and column") {
    try {
        (void)cli::parse_config("{\n  \"model\": [!\n}");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_config: range validation") {
    CHECK_THROWS_AS((void)cli::parse_config(
                        R"({"model": {"kind": "pitchfork", "alpha": 0},
                            "simulate": {"dt": 0.5}})"),
                    ConfigError);
    CHECK_THROWS_AS((void)cli::parse_config(
                        R"({"model": {"kind": "pitchfork", "alpha": 0},
                            "bifurcate": {"depth": 10}})"),
                    ConfigError);
    CHECK_THROWS_AS((void)cli::parse_config(
                        R"({"model": {"kind": "pitchfork", "alpha": 0},
                            "output": {"formats": ["pdf"]}})"),
                    ConfigError);
}

TEST_CASE("cmd_spectrum: pitchfork rows carry the Theorem-level points") {
    auto config = cli::parse_config(kPitchforkConfig);
    config.alpha = 0.0;
    config.spectrum.method = "eigen-lift";
    cli::refresh_hash(config);
    const auto table = cli::cmd_spectrum(config);

    const auto lo = table.column_index("lower");
    const auto hi = table.column_index("upper");
    const auto me = table.column_index("method");
    // analytic rows (method 2) then eigen-lift rows (method 0)
    std::vector<double> eigen_points;
    for (const auto& row : table.rows)
        if (row[me] == 0.0) {
            CHECK(row[lo] == doctest::Approx(row[hi]).epsilon(1e-12));
            eigen_points.push_back(row[lo]);
        }
    REQUIRE(eigen_points.size() == 2);
    CHECK(std::fabs(eigen_points[0] - 0.5) <= 1e-9);
    CHECK(std::fabs(eigen_points[1] - 1.0) <= 1e-9);

    config.beta = 0.0;
    cli::refresh_hash(config);
    const auto single = cli::cmd_spectrum(config);
    std::size_t eigen_rows = 0;
    for (const auto& row : single.rows)
        if (row[single.column_index("method")] == 0.0) {
            ++eigen_rows;
            CHECK(std::fabs(row[single.column_index("lower")] - 0.5) <= 1e-9);
        }
    CHECK(eigen_rows == 1);
}

TEST_CASE("cmd_spectrum: zero linear system sits at the origin with Gamma = 0") {
    const std::string text = R"({"model": {"kind": "linear", "d": 2,
        "A": [[0,0],[0,0]], "B": [[0,0],[0,0]],
        "C": [[0,0],[0,0]], "D": [[0,0],[0,0]]},
        "spectrum": {"method": "eigen-lift"}})";
    const auto table = cli::cmd_spectrum(cli::parse_config(text));
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0][table.column_index("lower")] == 0.0);
    CHECK(table.rows[0][table.column_index("upper")] == 0.0);
    CHECK(table.rows[0][table.column_index("gamma")] == 0.0);
    CHECK(table.rows[0][table.column_index("multiplicity")] == 6.0);  // d(d+1)
}

TEST_CASE("cmd_simulate: zero model emits constant columns") {
    const std::string text = R"({"model": {"kind": "linear", "d": 1,
        "A": [[0]], "B": [[0]], "C": [[0]], "D": [[0]]},
        "simulate": {"t1": 0.2, "dt": 0.01, "particles": 200, "output_every": 5,
                     "init": {"mean": [0.5], "second_moment": [[0.25]]}}})";
    const auto table = cli::cmd_simulate(cli::parse_config(text));
    REQUIRE(table.rows.size() >= 3);
    const auto mean_col = table.column_index("mean_1");
    const auto sec_col = table.column_index("secmom_11");
    const auto z_col = table.column_index("z_secmom_11");
    for (const auto& row : table.rows) {
        CHECK(row[mean_col] == 0.5);
        CHECK(row[sec_col] == 0.25);
        CHECK(row[z_col] == 0.0);
    }
}

TEST_CASE("cmd_pullback: limits approach the branch monotonically") {
    auto config = cli::parse_config(kPitchforkConfig);
    const auto table = cli::cmd_pullback(config);
    REQUIRE(table.rows.size() == 3);  // default start times -10, -20, -40
    const auto xcol = table.column_index("limit_x");
    const double branch = 0.3535533905932738;
    double prev = 1e300;
    for (const auto& row : table.rows) {
        const double dist = std::fabs(row[xcol] - branch);
        CHECK(dist <= prev + 1e-12);
        prev = dist;
    }
    CHECK(std::fabs(table.rows.back()[xcol] - branch) <= 1e-6);
    CHECK(table.rows.back()[table.column_index("classification")] == 1.0);
}

TEST_CASE("cmd_bifurcate: branch structure across the grid") {
    auto config = cli::parse_config(kPitchforkConfig);
    config.bifurcate.alpha_grid = {-1.5, -1.25, -0.75};
    config.bifurcate.x = 1.0;
    config.bifurcate.y = 1.0;
    config.bifurcate.depth = 40.0;
    const auto table = cli::cmd_bifurcate(config);
    REQUIRE(table.rows.size() == 3);
    const auto cls = table.column_index("classification");
    const auto norm = table.column_index("ms_norm");
    const auto xcol = table.column_index("limit_x");
    CHECK(table.rows[0][cls] == 0.0);
    CHECK(table.rows[0][norm] < 1e-3);
    CHECK(table.rows[1][cls] == 0.0);
    CHECK(table.rows[1][norm] < 1e-3);
    CHECK(table.rows[2][cls] == 1.0);
    CHECK(table.rows[2][xcol] == doctest::Approx(0.3535533905932738).epsilon(1e-6));
}

TEST_CASE("pullback and bifurcate require a pitchfork model with beta 1") {
    const std::string linear = R"({"model": {"kind": "linear", "d": 1,
        "A": [[0]], "B": [[0]], "C": [[0]], "D": [[0]]}})";
    CHECK_THROWS_AS((void)cli::cmd_pullback(cli::parse_config(linear)), ConfigError);

    auto config = cli::parse_config(kPitchforkConfig);
    config.beta = 2.0;
    CHECK_THROWS_AS((void)cli::cmd_bifurcate(config), ConfigError);
}

TEST_CASE("emit/parse csv: empty tables and exact round-trips") {
    ResultTable empty;
    empty.columns = {"a", "b"};
    empty.provenance = {{"tool", "msrds"}, {"config-hash", "00ff"}};
    const std::string text = cli::render_csv(empty);
    CHECK(text == "# tool: msrds\n# config-hash: 00ff\na,b\n");

    ResultTable table;
    table.columns = {"x", "y", "z"};
    table.provenance = {{"seed", "1"}};
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-30, 30);
    for (int r = 0; r < 20; ++r)
        table.add_row({std::ldexp(uni(gen), expo(gen)), uni(gen) * 1e-300,
                       static_cast<double>(r)});
    table.rows[0][0] = 0.1;  // a classic shortest-round-trip case

    const auto parsed = cli::parse_csv(cli::render_csv(table));
    CHECK(parsed.columns == table.columns);
    CHECK(parsed.provenance == table.provenance);
    REQUIRE(parsed.rows.size() == table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(parsed.rows[r][c] == table.rows[r][c]);

    // emission is deterministic
    CHECK(cli::render_csv(table) == cli::render_csv(table));
}

TEST_CASE("bifurcation svg has exactly one polyline per branch present") {
    auto config = cli::parse_config(kPitchforkConfig);
    config.bifurcate.alpha_grid = {-1.5, -0.75, -0.7};
    config.bifurcate.depth = 40.0;
    config.formats = {"csv", "svg"};
    config.out_dir = (tmp_dir() / "svg_case").string();
    const auto table = cli::cmd_bifurcate(config);

    std::set<double> classes;
    const auto cls = table.column_index("classification");
    for (const auto& row : table.rows) classes.insert(row[cls]);

    const auto written = cli::write_outputs("bifurcate", config, table);
    REQUIRE(written.size() == 2);
    const std::string svg = slurp(written[1]);
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
        ++polylines;
    CHECK(polylines == classes.size());
    CHECK(svg.find("xlink") == std::string::npos);  // no external references
    CHECK(svg.find("http://www.w3.org/2000/svg") != std::string::npos);
}

TEST_CASE("binary: exit codes and byte-identical reruns") {
    const auto dir = tmp_dir();
    const auto good = write_tmp("good.json", std::string(kPitchforkConfig));
    const auto out1 = dir / "run1";
    const auto out2 = dir / "run2";

    CHECK(run_binary("bifurcate --config " + good.string() + " --out " + out1.string() +
                     " --quiet") == 0);
    CHECK(run_binary("bifurcate --config " + good.string() + " --out " + out2.string() +
                     " --quiet") == 0);
    const std::string csv1 = slurp(out1 / "bifurcate.csv");
    CHECK(!csv1.empty());
    CHECK(csv1 == slurp(out2 / "bifurcate.csv"));
    CHECK(csv1.find("# config-hash: ") != std::string::npos);

    // spectrum of the pitchfork model, eigen-lift only, deterministic too
    const auto spec_cfg = write_tmp("spec.json",
                                    R"({"model": {"kind": "pitchfork", "alpha": 0,
                                        "beta": 1},
                                        "spectrum": {"method": "eigen-lift"}})");
    CHECK(run_binary("spectrum --config " + spec_cfg.string() + " --out " +
                     out1.string() + " --quiet") == 0);
    CHECK(run_binary("spectrum --config " + spec_cfg.string() + " --out " +
                     out2.string() + " --quiet") == 0);
    CHECK(slurp(out1 / "spectrum.csv") == slurp(out2 / "spectrum.csv"));

    // config errors -> 2
    const auto bad = write_tmp("bad.json", R"({"model": {"kind": "pitchfork"}})");
    CHECK(run_binary("bifurcate --config " + bad.string() + " --quiet") == 2);
    CHECK(run_binary("bifurcate --config " + (dir / "missing.json").string() +
                     " --quiet") == 2);
    CHECK(run_binary("bifurcate --quiet") == 2);  // missing --config flag

    // numerical failure -> 3 (particle blow-up guard)
    const auto blow = write_tmp("blow.json",
                                R"({"model": {"kind": "linear", "d": 1, "A": [[200]],
                                    "B": [[0]], "C": [[1]], "D": [[0]], "bound": 200},
                                    "simulate": {"t1": 1.0, "dt": 0.01,
                                                 "particles": 100}})");
    CHECK(run_binary("simulate --config " + blow.string() + " --quiet") == 3);

    // unwritable output path -> 4
    const auto file_blocker = write_tmp("blocker", "not a directory");
    CHECK(run_binary("bifurcate --config " + good.string() + " --out " +
                     (file_blocker / "sub").string() + " --quiet") == 4);
}

TEST_CASE("binary: seed override changes the provenance hash") {
    const auto dir = tmp_dir();
    const auto good = write_tmp("good2.json", std::string(kPitchforkConfig));
    const auto out1 = dir / "seed1";
    const auto out2 = dir / "seed2";
    CHECK(run_binary("pullback --config " + good.string() + " --out " + out1.string() +
                     " --quiet") == 0);
    CHECK(run_binary("pullback --config " + good.string() + " --out " + out2.string() +
                     " --seed 999 --quiet") == 0);
    const std::string a = slurp(out1 / "pullback.csv");
    const std::string b = slurp(out2 / "pullback.csv");
    auto hash_of = [](const std::string& text) {
        const auto pos = text.find("# config-hash: ");
        return text.substr(pos + 15, 16);
    };
    CHECK(hash_of(a) != hash_of(b));
}
