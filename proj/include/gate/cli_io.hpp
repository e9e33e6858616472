#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gate/params.hpp"
#include "gate/planner.hpp"

namespace gate::io {

namespace fs = std::filesystem;

/// Fixed trajectory CSV header, in order.
const std::vector<std::string>& trajectory_columns();

/// Shortest-exact decimal form with 17 significant digits.
std::string format_double(double v);

void write_trajectory_csv(std::ostream& os, const TrajectorySet& t);
std::string trajectory_csv(const TrajectorySet& t);

/// Column-major view of a trajectory file.
struct TrajectoryTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
    /// Probability-weighted value of `name` per distinct year, years ascending.
    std::vector<std::pair<double, double>> expected(std::string_view name) const;
    std::size_t scenario_count() const;
};

TrajectoryTable parse_trajectory_csv(const std::string& text);
TrajectoryTable table_from(const TrajectorySet& t);
nlohmann::json table_json(const TrajectoryTable& t);
TrajectoryTable table_from_json(const nlohmann::json& doc);

std::uint64_t fnv1a64(std::string_view bytes);
/// Hash of the canonical (ParameterSet, mode, solver settings) document.
std::string params_hash(const ParameterSet& p, SolveMode mode, const SolverSettings& s);

nlohmann::json solver_settings_json(const SolverSettings& s);

struct RunSummary {
    double finalF = 0.0;
    std::optional<double> yearF50;
    std::optional<double> yearF100;
    double peakGrowth = 0.0;
};

RunSummary summarize(const TrajectoryTable& plan);
nlohmann::json summary_json(const RunSummary& s);

/// Manifest describing one completed solve.
nlohmann::json make_manifest(const ParameterSet& p, SolveMode mode, const SolverSettings& s, const Solution& sol,
                             const std::string& startedAt, const std::string& finishedAt);

std::string utc_timestamp();

/// Writes `contents` to `path` through a temporary file and rename.
void write_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);

std::string diagnostics_jsonl(const SolveDiagnostics& d);

/// Writes trajectory.csv (reported plan), manifest.json, diagnostics.jsonl and
/// schedule.json into `dir`.
void write_run(const fs::path& dir, const ParameterSet& p, SolveMode mode, const SolverSettings& s,
               const Solution& sol, const std::string& startedAt);

struct RunData {
    std::string name;
    nlohmann::json manifest;
    TrajectoryTable table;
};

RunData load_run(const fs::path& dir);

/// Headline series compared across runs.
const std::vector<std::string>& comparison_series();

struct Comparison {
    std::vector<std::string> runs;
    std::vector<double> years;
    std::vector<std::string> series;
    // values[series][run][year]
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::string> warnings;

    /// Pairs (i, j), i < j, in the order their difference columns appear.
    std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
};

Comparison compare_runs(const std::vector<RunData>& runs);
std::string comparison_csv(const Comparison& c);
nlohmann::json comparison_json(const Comparison& c);

/// Grid specs: "a,b,c", "lin:lo:hi:n" or "log:lo:hi:n".
std::vector<double> parse_grid(const std::string& spec);

/// Reads a configuration document; a top-level "preset" key selects the base.
ParameterSet load_config(const nlohmann::json& doc, std::vector<Violation>& problems);

struct SweepPoint {
    std::size_t index = 0;
    double value = 0.0;
    bool ok = false;
    std::string error;
    double V = 0.0;
    bool converged = false;
    int iterations = 0;
    RunSummary summary;
};

struct SweepOptions {
    std::string param;
    std::vector<double> grid;
    SolveMode mode = SolveMode::Deterministic;
    SolverSettings solver;
    int jobs = 1;
    bool strict = true;
    std::optional<fs::path> outDir;
};

/// One solve per grid point; each point warm-starts from its predecessor in
/// the same worker chunk.
std::vector<SweepPoint> run_sweep(const ParameterSet& base, const SweepOptions& opt);
std::string sweep_csv(const std::vector<SweepPoint>& pts, const std::string& param);

/// Configures spdlog from GATE_LOG_LEVEL (trace..off); default "info".
void configure_logging();

/// Entry point of the command-line tool. Returns the process exit code.
int cli_main(int argc, char** argv);

} // namespace gate::io
