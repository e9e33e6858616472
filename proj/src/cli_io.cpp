#include "gate/cli_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

namespace gate::io {

using nlohmann::json;

const std::vector<std::string>& trajectory_columns() {
    static const std::vector<std::string> cols{
        "year", "scenario_id", "scenario_prob", "Y", "growth", "c", "f", "C", "CT", "Q", "H", "S", "K",
        "share_consumption", "share_capital", "share_compute", "share_hardware_rd", "share_software_rd",
        "share_training", "share_inference"};
    return cols;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<double> row_of(const ScenarioTrajectory& sc, const PeriodRecord& r) {
    return {r.year, static_cast<double>(sc.id), sc.prob, r.Y, r.growth, r.c, r.f, r.C, r.CT, r.Q, r.H, r.S, r.K,
            r.shares.output[kConsumption], r.shares.output[kCapitalInv], r.shares.output[kComputeInv],
            r.shares.output[kHardwareRD], r.shares.output[kSoftwareRD], r.shares.compute[kTraining],
            r.shares.compute[kInference]};
}

std::string join_row(const std::vector<double>& row) {
    std::string s;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) s += ',';
        s += format_double(row[i]);
    }
    return s;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += v[i];
    }
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_number(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw std::runtime_error("not a number: \"" + s + "\"");
    return v;
}

} // namespace

void write_trajectory_csv(std::ostream& os, const TrajectorySet& t) {
    os << join(trajectory_columns(), ',') << '\n';
    for (const auto& sc : t.scenarios)
        for (const auto& r : sc.periods) os << join_row(row_of(sc, r)) << '\n';
}

std::string trajectory_csv(const TrajectorySet& t) {
    std::ostringstream os;
    write_trajectory_csv(os, t);
    return os.str();
}

std::size_t TrajectoryTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::out_of_range("trajectory has no column " + std::string(name));
}

std::vector<std::pair<double, double>> TrajectoryTable::expected(std::string_view name) const {
    const std::size_t y = column("year"), pr = column("scenario_prob"), c = column(name);
    std::map<double, double> acc;
    for (const auto& r : rows) acc[r[y]] += r[pr] * r[c];
    return {acc.begin(), acc.end()};
}

std::size_t TrajectoryTable::scenario_count() const {
    const std::size_t id = column("scenario_id");
    std::vector<double> ids;
    for (const auto& r : rows)
        if (std::find(ids.begin(), ids.end(), r[id]) == ids.end()) ids.push_back(r[id]);
    return ids.size();
}

TrajectoryTable parse_trajectory_csv(const std::string& text) {
    TrajectoryTable t;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty trajectory file");
    t.columns = split(line, ',');
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != t.columns.size()) throw std::runtime_error("ragged trajectory row");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_number(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

TrajectoryTable table_from(const TrajectorySet& t) {
    TrajectoryTable out;
    out.columns = trajectory_columns();
    for (const auto& sc : t.scenarios)
        for (const auto& r : sc.periods) out.rows.push_back(row_of(sc, r));
    return out;
}

json table_json(const TrajectoryTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json row = json::array();
        for (double v : r) row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        rows.push_back(row);
    }
    return {{"columns", t.columns}, {"rows", rows}};
}

TrajectoryTable table_from_json(const json& doc) {
    TrajectoryTable t;
    t.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
        std::vector<double> row;
        for (const auto& v : r) row.push_back(v.is_null() ? std::nan("") : v.get<double>());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

json solver_settings_json(const SolverSettings& s) {
    return {{"method", s.method == SolverSettings::Method::Lbfgs ? "lbfgs" : "gradient_ascent"},
            {"max_iterations", s.maxIterations},
            {"rel_grad_tol", s.relGradTol},
            {"lbfgs_rank", s.lbfgsRank},
            {"max_restarts", s.maxRestarts},
            {"multi_start", s.multiStart}};
}

std::string params_hash(const ParameterSet& p, SolveMode mode, const SolverSettings& s) {
    const json doc{{"params", to_json(p)}, {"mode", to_string(mode)}, {"solver", solver_settings_json(s)}};
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
    return buf;
}

RunSummary summarize(const TrajectoryTable& plan) {
    RunSummary s;
    const auto f = plan.expected("f");
    const auto g = plan.expected("growth");
    if (!f.empty()) s.finalF = f.back().second;
    for (const auto& [year, v] : f) {
        if (!s.yearF50 && v >= 0.5) s.yearF50 = year;
        if (!s.yearF100 && v >= 1.0 - 1e-12) s.yearF100 = year;
    }
    s.peakGrowth = -INFINITY;
    for (const auto& [year, v] : g) s.peakGrowth = std::max(s.peakGrowth, v);
    if (g.empty()) s.peakGrowth = 0.0;
    return s;
}

json summary_json(const RunSummary& s) {
    return {{"final_f", s.finalF},
            {"year_f50", s.yearF50 ? json(*s.yearF50) : json(nullptr)},
            {"year_f100", s.yearF100 ? json(*s.yearF100) : json(nullptr)},
            {"peak_growth", s.peakGrowth}};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json make_manifest(const ParameterSet& p, SolveMode mode, const SolverSettings& s, const Solution& sol,
                   const std::string& startedAt, const std::string& finishedAt) {
    const std::string hash = params_hash(p, mode, s);
    const TrajectoryTable plan = table_from(sol.plan());
    return {{"run_id", "run-" + hash},
            {"params_hash", hash},
            {"mode", to_string(mode)},
            {"solver", solver_settings_json(s)},
            {"params", to_json(p)},
            {"started_at", startedAt},
            {"finished_at", finishedAt},
            {"tau_plan_steps", p.plan_steps()},
            {"scenarios", sol.trajectories.scenarios.size()},
            {"outputs",
             {{"trajectory", "trajectory.csv"}, {"diagnostics", "diagnostics.jsonl"}, {"schedule", "schedule.json"}}},
            {"result",
             {{"V", sol.diag.V},
              {"converged", sol.diag.converged},
              {"nan_abort", sol.diag.nanAbort},
              {"iterations", sol.diag.iterations},
              {"grad_norm", sol.diag.gradNorm},
              {"termination", sol.diag.termination},
              {"starts", sol.diag.starts},
              {"best_start", sol.diag.bestStart}}},
            {"summary", summary_json(summarize(plan))}};
}

void write_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << contents;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string diagnostics_jsonl(const SolveDiagnostics& d) {
    std::string out;
    for (const auto& r : d.history) {
        out += json{{"iteration", r.iteration}, {"V", r.V}, {"grad_norm", r.gradNorm}, {"step", r.step}}.dump();
        out += '\n';
    }
    return out;
}

void write_run(const fs::path& dir, const ParameterSet& p, SolveMode mode, const SolverSettings& s,
               const Solution& sol, const std::string& startedAt) {
    fs::create_directories(dir);
    write_atomic(dir / "trajectory.csv", trajectory_csv(sol.plan()));
    write_atomic(dir / "diagnostics.jsonl", diagnostics_jsonl(sol.diag));
    const json schedule{{"steps", sol.schedule.layout.steps},
                        {"info_states", sol.schedule.layout.infoStates},
                        {"logits", sol.schedule.logits}};
    write_atomic(dir / "schedule.json", schedule.dump());
    write_atomic(dir / "manifest.json", make_manifest(p, mode, s, sol, startedAt, utc_timestamp()).dump(2) + "\n");
}

RunData load_run(const fs::path& dir) {
    RunData r;
    r.name = dir.filename().string();
    if (r.name.empty()) r.name = dir.parent_path().filename().string();
    r.manifest = json::parse(read_file(dir / "manifest.json"));
    r.table = parse_trajectory_csv(read_file(dir / "trajectory.csv"));
    return r;
}

const std::vector<std::string>& comparison_series() {
    static const std::vector<std::string> s{"Y", "growth", "f", "C", "CT", "share_consumption", "share_capital",
                                            "share_compute", "share_hardware_rd", "share_software_rd",
                                            "share_training", "share_inference"};
    return s;
}

std::vector<std::pair<std::size_t, std::size_t>> Comparison::pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = i + 1; j < runs.size(); ++j) out.emplace_back(i, j);
    return out;
}

Comparison compare_runs(const std::vector<RunData>& runs) {
    if (runs.size() < 2) throw std::invalid_argument("compare needs at least two runs");
    Comparison c;
    c.series = comparison_series();
    std::size_t horizon = SIZE_MAX;
    std::vector<std::vector<std::pair<double, double>>> first;
    for (const auto& r : runs) {
        c.runs.push_back(r.name);
        horizon = std::min(horizon, r.table.expected("year").size());
    }
    for (const auto& r : runs) {
        const std::size_t n = r.table.expected("year").size();
        if (n != horizon)
            c.warnings.push_back("run " + r.name + " has " + std::to_string(n) + " periods; comparison truncated to " +
                                 std::to_string(horizon));
    }
    const auto years = runs.front().table.expected("year");
    for (std::size_t t = 0; t < horizon; ++t) c.years.push_back(years[t].first);
    c.values.assign(c.series.size(), {});
    for (std::size_t s = 0; s < c.series.size(); ++s) {
        for (const auto& r : runs) {
            const auto e = r.table.expected(c.series[s]);
            std::vector<double> v;
            for (std::size_t t = 0; t < horizon; ++t) v.push_back(e[t].second);
            c.values[s].push_back(std::move(v));
        }
    }
    return c;
}

std::string comparison_csv(const Comparison& c) {
    std::vector<std::string> header{"year"};
    const auto pairs = c.pairs();
    for (const auto& s : c.series) {
        for (const auto& r : c.runs) header.push_back(s + "[" + r + "]");
        for (const auto& [i, j] : pairs) header.push_back(s + "_diff[" + c.runs[j] + "-" + c.runs[i] + "]");
    }
    std::string out = join(header, ',') + "\n";
    for (std::size_t t = 0; t < c.years.size(); ++t) {
        std::vector<double> row{c.years[t]};
        for (std::size_t s = 0; s < c.series.size(); ++s) {
            for (std::size_t r = 0; r < c.runs.size(); ++r) row.push_back(c.values[s][r][t]);
            for (const auto& [i, j] : pairs) row.push_back(c.values[s][j][t] - c.values[s][i][t]);
        }
        out += join_row(row) + "\n";
    }
    return out;
}

json comparison_json(const Comparison& c) {
    json series = json::object();
    const auto pairs = c.pairs();
    for (std::size_t s = 0; s < c.series.size(); ++s) {
        json diffs = json::array();
        for (const auto& [i, j] : pairs) {
            std::vector<double> d;
            for (std::size_t t = 0; t < c.years.size(); ++t) d.push_back(c.values[s][j][t] - c.values[s][i][t]);
            diffs.push_back({{"a", c.runs[i]}, {"b", c.runs[j]}, {"values", d}});
        }
        series[c.series[s]] = {{"values", c.values[s]}, {"diffs", diffs}};
    }
    return {{"runs", c.runs}, {"years", c.years}, {"series", series}, {"warnings", c.warnings}};
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    const auto parts = split(spec, ':');
    if (parts.size() == 4 && (parts[0] == "lin" || parts[0] == "log")) {
        const double lo = parse_number(parts[1]), hi = parse_number(parts[2]);
        const int n = std::stoi(parts[3]);
        if (n < 1) throw std::invalid_argument("grid needs at least one point");
        if (parts[0] == "log" && !(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("log grid bounds must be positive");
        for (int i = 0; i < n; ++i) {
            const double u = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
            out.push_back(parts[0] == "lin" ? lo + u * (hi - lo)
                                            : std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))));
        }
        return out;
    }
    for (const auto& s : split(spec, ',')) out.push_back(parse_number(s));
    if (out.empty()) throw std::invalid_argument("empty grid");
    return out;
}

ParameterSet load_config(const json& doc, std::vector<Violation>& problems) {
    ParameterSet base = default_preset();
    json body = doc;
    if (body.is_object() && body.contains("preset")) {
        const auto name = body["preset"].is_string() ? body["preset"].get<std::string>() : std::string();
        if (auto pr = preset(name)) base = *pr;
        else problems.push_back({"preset", "unknown preset \"" + name + "\""});
        body.erase("preset");
    }
    return from_json(body, problems, base);
}

namespace {

bool is_unknown_key(const Violation& v) { return v.message.rfind("unknown key", 0) == 0; }

SweepPoint solve_point(const ParameterSet& base, const SweepOptions& opt, std::size_t i,
                       std::vector<double>& warm) {
    SweepPoint pt;
    pt.index = i;
    pt.value = opt.grid[i];
    try {
        json doc = to_json(base);
        if (!doc.contains(opt.param)) throw std::invalid_argument("unknown parameter " + opt.param);
        if (doc[opt.param].is_number_integer()) doc[opt.param] = static_cast<long long>(std::llround(pt.value));
        else doc[opt.param] = pt.value;
        std::vector<Violation> problems;
        const ParameterSet p = from_json(doc, problems, base);
        auto v = validate(p, opt.strict ? ValidationMode::Strict : ValidationMode::Permissive);
        problems.insert(problems.end(), v.begin(), v.end());
        if (!problems.empty()) throw std::invalid_argument(problems.front().message);
        const std::string started = utc_timestamp();
        const Solution sol = solve(p, opt.mode, opt.solver, {}, warm.empty() ? nullptr : &warm);
        if (sol.diag.nanAbort) throw std::runtime_error(sol.diag.termination);
        warm = sol.schedule.logits;
        pt.ok = true;
        pt.V = sol.diag.V;
        pt.converged = sol.diag.converged;
        pt.iterations = sol.diag.iterations;
        pt.summary = summarize(table_from(sol.plan()));
        if (opt.outDir) {
            char name[32];
            std::snprintf(name, sizeof name, "point_%03zu", i);
            write_run(*opt.outDir / name, p, opt.mode, opt.solver, sol, started);
        }
    } catch (const std::exception& e) {
        pt.ok = false;
        pt.error = e.what();
        spdlog::warn("sweep point {} ({}={}) failed: {}", i, opt.param, pt.value, e.what());
    }
    return pt;
}

} // namespace

std::vector<SweepPoint> run_sweep(const ParameterSet& base, const SweepOptions& opt) {
    const std::size_t n = opt.grid.size();
    std::vector<SweepPoint> out(n);
    const std::size_t jobs = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opt.jobs)), n));
    const std::size_t chunk = (n + jobs - 1) / jobs;
    auto work = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> warm;
        for (std::size_t i = lo; i < hi; ++i) out[i] = solve_point(base, opt, i, warm);
    };
    if (jobs == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) {
            const std::size_t lo = j * chunk, hi = std::min(n, lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& pts, const std::string& param) {
    std::string out = "index," + param + ",ok,V,converged,iterations,final_f,year_f50,year_f100,peak_growth,error\n";
    for (const auto& p : pts) {
        auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
        std::string err = p.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out += std::to_string(p.index) + "," + format_double(p.value) + "," + (p.ok ? "1" : "0") + "," +
               (p.ok ? format_double(p.V) : "") + "," + (p.converged ? "1" : "0") + "," +
               std::to_string(p.iterations) + "," + (p.ok ? format_double(p.summary.finalF) : "") + "," +
               opt(p.summary.yearF50) + "," + opt(p.summary.yearF100) + "," +
               (p.ok ? format_double(p.summary.peakGrowth) : "") + "," + err + "\n";
    }
    return out;
}

void configure_logging() {
    const char* env = std::getenv("GATE_LOG_LEVEL");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
}

namespace {

SolverSettings settings_from(int maxIter, const std::string& method, bool singleStart) {
    SolverSettings s;
    s.maxIterations = maxIter;
    s.multiStart = !singleStart;
    s.method = method == "gd" ? SolverSettings::Method::GradientAscent : SolverSettings::Method::Lbfgs;
    return s;
}

/// Loads and validates a config file. Prints problems; returns nullopt on failure.
std::optional<ParameterSet> load_validated(const std::string& path, bool strict) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const std::exception& e) {
        std::cerr << "error: cannot load config: " << e.what() << "\n";
        return std::nullopt;
    }
    std::vector<Violation> problems;
    const ParameterSet p = load_config(doc, problems);
    std::vector<Violation> fatal, warnings;
    for (auto& v : problems) (is_unknown_key(v) && !strict ? warnings : fatal).push_back(v);
    for (auto& v : validate(p, ValidationMode::Permissive)) fatal.push_back(v);
    for (auto& v : validate(p, ValidationMode::Strict)) {
        bool dup = false;
        for (const auto& f : fatal) dup = dup || f.message == v.message;
        if (dup) continue;
        bool fieldFatal = false;
        for (const auto& f : fatal) fieldFatal = fieldFatal || f.field == v.field;
        (strict || fieldFatal ? fatal : warnings).push_back(v);
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w.field << ": " << w.message << "\n";
    if (!fatal.empty()) {
        std::cerr << "validation failed:\n";
        for (const auto& v : fatal) std::cerr << "  " << v.field << ": " << v.message << "\n";
        return std::nullopt;
    }
    return p;
}

std::string fmt_opt_year(const std::optional<double>& y) { return y ? format_double(*y) : "not reached"; }

} // namespace

int cli_main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"gate: solve, sweep and compare growth scenarios"};
    app.require_subcommand(1);

    std::string config, modeStr = "det", outDir = "run_out", method = "lbfgs";
    int maxIter = 20000;
    bool strict = false, singleStart = false;
    auto* run = app.add_subcommand("run", "solve one scenario");
    run->add_option("--config", config, "parameter document (JSON)")->required();
    run->add_option("--mode", modeStr, "det | ext | unc")->check(CLI::IsMember({"det", "ext", "unc"}));
    run->add_option("--out", outDir, "output directory");
    run->add_option("--max-iterations", maxIter, "optimizer iteration cap");
    run->add_option("--method", method, "lbfgs | gd")->check(CLI::IsMember({"lbfgs", "gd"}));
    run->add_flag("--strict", strict, "treat range violations as errors");
    run->add_flag("--single-start", singleStart, "ascend from the warm start only");

    std::vector<std::string> dirs;
    std::string compareOut;
    bool compareJson = false;
    auto* cmp = app.add_subcommand("compare", "align headline series across runs");
    cmp->add_option("dirs", dirs, "run directories")->required()->expected(2, -1);
    cmp->add_option("--out", compareOut, "write the table here instead of stdout");
    cmp->add_flag("--json", compareJson, "emit JSON instead of CSV");

    std::string sweepConfig, param, grid, sweepOut = "sweep_out", sweepMode = "det";
    int jobs = 1;
    bool permissive = false;
    auto* sw = app.add_subcommand("sweep", "solve across a parameter grid");
    sw->add_option("--config", sweepConfig, "parameter document (JSON)")->required();
    sw->add_option("--param", param, "parameter key")->required();
    sw->add_option("--grid", grid, "a,b,c | lin:lo:hi:n | log:lo:hi:n")->required();
    sw->add_option("--jobs", jobs, "parallel workers");
    sw->add_option("--mode", sweepMode, "det | ext | unc")->check(CLI::IsMember({"det", "ext", "unc"}));
    sw->add_option("--out", sweepOut, "output directory");
    sw->add_option("--max-iterations", maxIter, "optimizer iteration cap");
    sw->add_flag("--single-start", singleStart, "ascend from the warm start only");
    sw->add_flag("--permissive", permissive, "allow grid points outside the documented ranges");

    auto* sch = app.add_subcommand("schema", "print the parameter schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*sch) {
        std::cout << schema_json().dump(2) << "\n";
        return 0;
    }

    if (*run) {
        auto p = load_validated(config, strict);
        if (!p) return 1;
        const SolveMode mode = *solve_mode_from_string(modeStr);
        const SolverSettings s = settings_from(maxIter, method, singleStart);
        const std::string started = utc_timestamp();
        spdlog::info("solving mode={} steps={} hash={}", modeStr, p->optim_steps(), params_hash(*p, mode, s));
        const Solution sol = solve(*p, mode, s, [](const IterationRecord& r) {
            if (r.iteration % 100 == 0)
                spdlog::debug("iteration {} V={:.12g} grad={:.3e} step={:.3e}", r.iteration, r.V, r.gradNorm, r.step);
            return true;
        });
        if (sol.diag.nanAbort) {
            fs::create_directories(outDir);
            write_atomic(fs::path(outDir) / "diagnostics.jsonl", diagnostics_jsonl(sol.diag));
            std::cerr << "error: solver aborted: " << sol.diag.termination << "\n";
            return 2;
        }
        write_run(outDir, *p, mode, s, sol, started);
        const RunSummary sum = summarize(table_from(sol.plan()));
        std::cout << "V = " << format_double(sol.diag.V) << (sol.diag.converged ? " (converged" : " (not converged")
                  << ", " << sol.diag.iterations << " iterations, grad max-norm " << sol.diag.gradNorm << ")\n"
                  << "final f = " << sum.finalF << "\n"
                  << "year f >= 0.5: " << fmt_opt_year(sum.yearF50) << "\n"
                  << "year f = 1: " << fmt_opt_year(sum.yearF100) << "\n"
                  << "peak annual output growth = " << sum.peakGrowth << "\n"
                  << "outputs written to " << outDir << "\n";
        return 0;
    }

    if (*cmp) {
        try {
            std::vector<RunData> runs;
            for (const auto& d : dirs) runs.push_back(load_run(d));
            const Comparison c = compare_runs(runs);
            for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
            const std::string text = compareJson ? comparison_json(c).dump(2) + "\n" : comparison_csv(c);
            if (compareOut.empty()) std::cout << text;
            else write_atomic(compareOut, text);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
        return 0;
    }

    if (*sw) {
        auto p = load_validated(sweepConfig, false);
        if (!p) return 1;
        SweepOptions opt;
        opt.param = param;
        try {
            opt.grid = parse_grid(grid);
        } catch (const std::exception& e) {
            std::cerr << "error: bad grid: " << e.what() << "\n";
            return 1;
        }
        if (!to_json(*p).contains(param)) {
            std::cerr << "error: unknown parameter " << param << "\n";
            return 1;
        }
        opt.mode = *solve_mode_from_string(sweepMode);
        opt.solver = settings_from(maxIter, method, singleStart);
        opt.jobs = jobs;
        opt.strict = !permissive;
        opt.outDir = fs::path(sweepOut);
        const auto pts = run_sweep(*p, opt);
        const std::string table = sweep_csv(pts, param);
        write_atomic(fs::path(sweepOut) / "sweep.csv", table);
        std::cout << table;
        return 0;
    }
    return 0;
}

} // namespace gate::io
