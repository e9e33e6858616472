#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "gate/cli_io.hpp"
#include "gate/params.hpp"
#include "gate/planner.hpp"

using namespace gate;
using namespace gate::io;

namespace {

struct Proc {
    int code = -1;
    std::string out;
};

Proc run_cli(const std::string& args) {
    Proc r;
    const std::string cmd = std::string(GATE_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class CliDir : public ::testing::Test {
protected:
    void SetUp() override {
        root = fs::temp_directory_path() /
               ("gate_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    void TearDown() override { fs::remove_all(root); }

    std::string config(const std::string& body) const {
        static int k = 0;
        const fs::path p = root / ("cfg" + std::to_string(k++) + ".json");
        std::ofstream(p) << body;
        return p.string();
    }
    std::string short_config(const std::string& extra = "") const {
        return config(R"({"preset":"desk","tau_plan":5,"tau_optim":10)" + extra + "}");
    }
    std::string dir(const std::string& name) const { return (root / name).string(); }

    fs::path root;
};

std::vector<std::string> header_of(const std::string& csv) {
    std::vector<std::string> cols;
    std::stringstream line(csv.substr(0, csv.find('\n')));
    std::string c;
    while (std::getline(line, c, ',')) cols.push_back(c);
    return cols;
}

std::size_t line_count(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST(FormatDouble, SeventeenDigitRoundTrip) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-300.0, 300.0);
    for (int k = 0; k < 2000; ++k) {
        const double v = std::pow(10.0, u(rng)) * (k % 2 ? -1.0 : 1.0);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.0), "0");
    EXPECT_EQ(format_double(1.0), "1");
}

TEST(TrajectoryCsv, FixedHeaderAndRoundTrip) {
    ParameterSet p = desk_preset();
    p.tauPlan = 5;
    p.tauOptim = 10;
    const Problem prob = make_problem(p, SolveMode::Deterministic);
    const TrajectorySet t = simulate(prob, warm_start(prob));
    const std::string csv = trajectory_csv(t);
    const std::vector<std::string> want{"year", "scenario_id", "scenario_prob", "Y", "growth", "c", "f", "C", "CT", "Q",
                                        "H", "S", "K", "share_consumption", "share_capital", "share_compute",
                                        "share_hardware_rd", "share_software_rd", "share_training", "share_inference"};
    EXPECT_EQ(trajectory_columns(), want);
    EXPECT_EQ(header_of(csv), want);
    const TrajectoryTable a = parse_trajectory_csv(csv);
    const TrajectoryTable b = table_from(t);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i], b.rows[i]);
    EXPECT_EQ(trajectory_csv(t), csv);
    const TrajectoryTable c = table_from_json(table_json(a));
    EXPECT_EQ(c.rows, a.rows);
    EXPECT_EQ(c.columns, a.columns);
}

TEST(Hash, StableAndSensitive) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    const ParameterSet p = default_preset();
    const SolverSettings s;
    const std::string h = params_hash(p, SolveMode::Deterministic, s);
    EXPECT_EQ(h, params_hash(default_preset(), SolveMode::Deterministic, SolverSettings{}));
    EXPECT_NE(h, params_hash(p, SolveMode::Externality, s));
    ParameterSet q = p;
    q.rho = -0.66;
    EXPECT_NE(h, params_hash(q, SolveMode::Deterministic, s));
    SolverSettings t = s;
    t.maxIterations += 1;
    EXPECT_NE(h, params_hash(p, SolveMode::Deterministic, t));
}

TEST(ParseGrid, Forms) {
    EXPECT_EQ(parse_grid("0.5,0.55,0.6"), (std::vector<double>{0.5, 0.55, 0.6}));
    const auto lin = parse_grid("lin:0:1:5");
    ASSERT_EQ(lin.size(), 5u);
    EXPECT_DOUBLE_EQ(lin[1], 0.25);
    EXPECT_DOUBLE_EQ(lin[4], 1.0);
    const auto lg = parse_grid("log:1e30:1e40:3");
    ASSERT_EQ(lg.size(), 3u);
    EXPECT_NEAR(lg[1] / 1e35, 1.0, 1e-12);
    EXPECT_THROW(parse_grid("lin:0:1"), std::exception);
    EXPECT_THROW(parse_grid("cube:0:1:3"), std::exception);
    EXPECT_THROW(parse_grid(""), std::exception);
}

TEST(Config, PresetKeyAndProblems) {
    std::vector<Violation> problems;
    const ParameterSet p = load_config(nlohmann::json{{"preset", "desk"}, {"rho", -0.7}}, problems);
    EXPECT_TRUE(problems.empty());
    EXPECT_EQ(p.rho, -0.7);
    EXPECT_EQ(p.tauOptim, desk_preset().tauOptim);
    load_config(nlohmann::json{{"preset", "nope"}}, problems);
    ASSERT_FALSE(problems.empty());
    EXPECT_EQ(problems[0].field, "preset");
}

TEST(Summary, YearsOfAutomation) {
    TrajectoryTable t;
    t.columns = trajectory_columns();
    const std::size_t nc = t.columns.size();
    const double f[] = {0.1, 0.3, 0.5, 0.9, 1.0};
    const double g[] = {0.02, 0.05, 0.3, 0.1, 0.2};
    for (int y = 0; y < 5; ++y) {
        std::vector<double> row(nc, 0.0);
        row[t.column("year")] = y;
        row[t.column("scenario_prob")] = 1.0;
        row[t.column("f")] = f[y];
        row[t.column("growth")] = g[y];
        t.rows.push_back(row);
    }
    const RunSummary s = summarize(t);
    EXPECT_EQ(s.finalF, 1.0);
    ASSERT_TRUE(s.yearF50);
    EXPECT_EQ(*s.yearF50, 2.0);
    ASSERT_TRUE(s.yearF100);
    EXPECT_EQ(*s.yearF100, 4.0);
    EXPECT_EQ(s.peakGrowth, 0.3);
}

TEST_F(CliDir, RunDefaultsWritesFiles) {
    const Proc r = run_cli("run --config " + config("{}") + " --out " + dir("d"));
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* f : {"trajectory.csv", "manifest.json", "diagnostics.jsonl"})
        EXPECT_TRUE(fs::exists(root / "d" / f)) << f;
    const std::string csv = read_file(root / "d" / "trajectory.csv");
    EXPECT_EQ(header_of(csv), trajectory_columns());
    EXPECT_EQ(line_count(csv), 1u + static_cast<std::size_t>(default_preset().tauPlan));
    EXPECT_NE(r.out.find("final f"), std::string::npos);
    EXPECT_NE(r.out.find("peak annual output growth"), std::string::npos);
    const auto m = nlohmann::json::parse(read_file(root / "d" / "manifest.json"));
    EXPECT_EQ(m["mode"], "det");
    EXPECT_EQ(m["params_hash"], params_hash(default_preset(), SolveMode::Deterministic, SolverSettings{}));
}

TEST_F(CliDir, RunRowsPerScenario) {
    const std::string cfg =
        short_config(R"(,"belief_spec":[{"zeta":0.5,"prob":0.5},{"zeta":1.0,"prob":0.5}])");
    const Proc r = run_cli("run --config " + cfg + " --mode unc --single-start --out " + dir("u"));
    ASSERT_EQ(r.code, 0) << r.out;
    const TrajectoryTable t = parse_trajectory_csv(read_file(root / "u" / "trajectory.csv"));
    EXPECT_EQ(t.scenario_count(), 2u);
    EXPECT_EQ(t.rows.size(), 2u * 5u);
}

TEST_F(CliDir, ValidationFailureExitsOne) {
    const Proc r = run_cli("run --config " + config(R"({"rho":0.5})") + " --out " + dir("x"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("rho"), std::string::npos);
    EXPECT_FALSE(fs::exists(root / "x" / "trajectory.csv"));
}

TEST_F(CliDir, MalformedConfigExitsOne) {
    EXPECT_EQ(run_cli("run --config " + config("{not json") + " --out " + dir("x")).code, 1);
    EXPECT_EQ(run_cli("run --config " + dir("missing.json") + " --out " + dir("x")).code, 1);
}

TEST_F(CliDir, StrictRejectsOutOfRange) {
    const std::string cfg = short_config(R"(,"alpha":0.9)");
    EXPECT_EQ(run_cli("run --strict --config " + cfg + " --out " + dir("x")).code, 1);
}

TEST_F(CliDir, RunsAreByteIdentical) {
    const std::string cfg = short_config();
    ASSERT_EQ(run_cli("run --config " + cfg + " --out " + dir("a")).code, 0);
    ASSERT_EQ(run_cli("run --config " + cfg + " --out " + dir("b")).code, 0);
    EXPECT_EQ(read_file(root / "a" / "trajectory.csv"), read_file(root / "b" / "trajectory.csv"));
    EXPECT_EQ(read_file(root / "a" / "schedule.json"), read_file(root / "b" / "schedule.json"));
    EXPECT_EQ(read_file(root / "a" / "diagnostics.jsonl"), read_file(root / "b" / "diagnostics.jsonl"));
}

TEST_F(CliDir, CompareWithItselfIsZero) {
    ASSERT_EQ(run_cli("run --config " + short_config() + " --out " + dir("a")).code, 0);
    const Proc r = run_cli("compare --json " + dir("a") + " " + dir("a"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["runs"].size(), 2u);
    EXPECT_EQ(doc["years"].size(), 5u);
    for (const auto& [name, s] : doc["series"].items())
        for (const auto& d : s["diffs"])
            for (const auto& v : d["values"]) EXPECT_EQ(v.get<double>(), 0.0) << name;
}

TEST_F(CliDir, CompareThreeRunsShape) {
    ASSERT_EQ(run_cli("run --config " + short_config() + " --out " + dir("a")).code, 0);
    ASSERT_EQ(run_cli("run --config " + short_config(R"(,"rho":-0.5)") + " --out " + dir("b")).code, 0);
    ASSERT_EQ(run_cli("run --config " + short_config(R"(,"xi":8)") + " --mode ext --out " + dir("c")).code, 0);
    const Proc r = run_cli("compare " + dir("a") + " " + dir("b") + " " + dir("c") + " --out " + dir("cmp.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const std::string csv = read_file(root / "cmp.csv");
    const auto cols = header_of(csv);
    EXPECT_EQ(line_count(csv), 1u + 5u);
    for (const std::string& s : comparison_series()) {
        const auto values = std::count_if(cols.begin(), cols.end(), [&](const std::string& c) {
            return c.rfind(s + "[", 0) == 0;
        });
        const auto diffs = std::count_if(cols.begin(), cols.end(), [&](const std::string& c) {
            return c.rfind(s + "_diff[", 0) == 0;
        });
        EXPECT_EQ(values, 3) << s;
        EXPECT_EQ(diffs, 3) << s;
    }
}

TEST_F(CliDir, CompareTruncatesToCommonHorizon) {
    ASSERT_EQ(run_cli("run --config " + short_config() + " --out " + dir("a")).code, 0);
    ASSERT_EQ(run_cli("run --config " + config(R"({"preset":"desk","tau_plan":3,"tau_optim":10})") + " --out " +
                      dir("b"))
                  .code,
              0);
    const Proc r = run_cli("compare --json " + dir("a") + " " + dir("b") + " --out " + dir("c.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("warning"), std::string::npos);
    const auto doc = nlohmann::json::parse(read_file(root / "c.json"));
    EXPECT_EQ(doc["years"].size(), 3u);
    EXPECT_FALSE(doc["warnings"].empty());
}

TEST_F(CliDir, CompareNeedsTwoRuns) {
    ASSERT_EQ(run_cli("run --config " + short_config() + " --out " + dir("a")).code, 0);
    EXPECT_NE(run_cli("compare " + dir("a")).code, 0);
    EXPECT_EQ(run_cli("compare " + dir("a") + " " + dir("nothing")).code, 1);
}

TEST_F(CliDir, SweepFivePoints) {
    const Proc r = run_cli("sweep --config " + short_config() + " --param rho --grid lin:-0.8:-0.4:5 --out " +
                           dir("sw"));
    ASSERT_EQ(r.code, 0) << r.out;
    const std::string csv = read_file(root / "sw" / "sweep.csv");
    EXPECT_EQ(line_count(csv), 6u);
    EXPECT_EQ(header_of(csv)[1], "rho");
    for (int k = 0; k < 5; ++k) {
        char name[16];
        std::snprintf(name, sizeof name, "point_%03d", k);
        EXPECT_TRUE(fs::exists(root / "sw" / name / "trajectory.csv")) << name;
    }
}

TEST_F(CliDir, SweepRecordsFailuresAndContinues) {
    const Proc r = run_cli("sweep --config " + short_config() + " --param rho --grid -0.65,0.5 --out " + dir("sw"));
    ASSERT_EQ(r.code, 0) << r.out;
    const TrajectoryTable t = parse_trajectory_csv(read_file(root / "sw" / "point_000" / "trajectory.csv"));
    EXPECT_EQ(t.rows.size(), 5u);
    const std::string csv = read_file(root / "sw" / "sweep.csv");
    std::stringstream ss(csv);
    std::string line, first, second;
    std::getline(ss, line);
    std::getline(ss, first);
    std::getline(ss, second);
    EXPECT_NE(first.find(",1,"), std::string::npos);
    EXPECT_NE(second.find(",0,"), std::string::npos);
    EXPECT_NE(second.find("rho"), std::string::npos);
}

TEST_F(CliDir, DegenerateSweepMatchesRun) {
    const std::string cfg = short_config();
    ASSERT_EQ(run_cli("run --config " + cfg + " --out " + dir("r")).code, 0);
    const Proc r = run_cli("sweep --config " + cfg + " --param flop_gap_fraction --grid 0.55 --out " + dir("sw"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(read_file(root / "r" / "trajectory.csv"), read_file(root / "sw" / "point_000" / "trajectory.csv"));
    const auto m = nlohmann::json::parse(read_file(root / "r" / "manifest.json"));
    const std::string csv = read_file(root / "sw" / "sweep.csv");
    EXPECT_NE(csv.find(format_double(m["result"]["V"].get<double>())), std::string::npos);
}

TEST_F(CliDir, SweepRejectsUnknownParameter) {
    EXPECT_EQ(run_cli("sweep --config " + short_config() + " --param bogus --grid 1,2 --out " + dir("sw")).code, 1);
}

TEST_F(CliDir, SchemaSubcommand) {
    const Proc r = run_cli("schema");
    ASSERT_EQ(r.code, 0);
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc, schema_json());
}
