#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gate/automation.hpp"
#include "gate/economy.hpp"
#include "gate/params.hpp"

namespace gate {

enum class SolveMode { Deterministic, Externality, Uncertainty };

std::string to_string(SolveMode mode);
std::optional<SolveMode> solve_mode_from_string(std::string_view s);

constexpr std::size_t kLogitsPerPoint = 7;

/// Unconstrained controls of one period: 5 output logits then 2 compute logits.
struct DecisionPoint {
    std::array<double, 5> outputLogits{};
    std::array<double, 2> computeLogits{};

    Shares shares() const;
    static DecisionPoint from_shares(const Shares& s);
};

/// Normalised exponential with max-shift.
template <class T, std::size_t N>
std::array<T, N> softmax(std::span<const T> logits) {
    using std::exp;
    double mx = value_of(logits[0]);
    for (std::size_t k = 1; k < N; ++k) mx = std::max(mx, value_of(logits[k]));
    std::array<T, N> e;
    T sum(0.0);
    for (std::size_t k = 0; k < N; ++k) {
        e[k] = exp(logits[k] - mx);
        sum += e[k];
    }
    for (std::size_t k = 0; k < N; ++k) e[k] = e[k] / sum;
    return e;
}

enum class PolicyClass {
    Full,        // one decision point per (period, information state)
    PhaseSimple, // one decision point per automation phase
};

/// Surviving-candidate masks that can occur along a rollout: every suffix of
/// the zeta-sorted candidate list and every singleton.
struct InfoStates {
    std::vector<std::vector<bool>> masks;

    static InfoStates reachable(std::size_t candidates);
    std::size_t index_of(const std::vector<bool>& mask) const;
    std::size_t size() const { return masks.size(); }
};

struct ScheduleLayout {
    int steps = 0;
    std::size_t infoStates = 1;
    PolicyClass policy = PolicyClass::Full;

    std::size_t blocks() const;
    std::size_t size() const { return blocks() * kLogitsPerPoint; }
    /// Block consulted at period t in information state s with current f.
    std::size_t block(int t, std::size_t s, double f, double fInit) const;
};

struct DecisionSchedule {
    ScheduleLayout layout;
    std::vector<double> logits;

    DecisionPoint point(std::size_t block) const;
};

enum class UtilityKind { Crra, Spliced };

struct UtilitySpec {
    double eta = 1.45;
    double floor = 0.0;     // consumption floor inside utility
    UtilityKind kind = UtilityKind::Crra;
    double cStar = 0.0;     // splice point for UtilityKind::Spliced
};

template <class T>
T utility(const T& c, const UtilitySpec& u) {
    using std::log;
    using std::pow;
    const T cc = smax(c, T(u.floor));
    const bool logForm = std::abs(u.eta - 1.0) < 1e-9;
    auto crra = [&](const T& x) -> T {
        if (logForm) return log(x);
        return (pow(x, 1.0 - u.eta) - 1.0) / (1.0 - u.eta);
    };
    if (u.kind == UtilityKind::Spliced && value_of(cc) > u.cStar) {
        const double base = logForm ? std::log(u.cStar) : (std::pow(u.cStar, 1.0 - u.eta) - 1.0) / (1.0 - u.eta);
        return base + std::pow(u.cStar, 1.0 - u.eta) * log(cc / u.cStar);
    }
    return crra(cc);
}

/// One possible true automation function and its prior weight.
struct Scenario {
    int id = 0;
    AutomationFunction truth;
    double prob = 1.0;
};

/// Everything a rollout needs besides the decision vector.
struct Problem {
    ParameterSet p;
    SolveMode mode = SolveMode::Deterministic;
    double A = 1.0;
    double c0 = 1.0;       // initial per-capita consumption
    double xi = 1.0;       // R&D wedge applied to the efficiency laws
    UtilitySpec utility;
    BeliefState beliefs;
    InfoStates info;
    std::vector<Scenario> scenarios;
    ScheduleLayout layout;
};

struct ProblemOptions {
    PolicyClass policy = PolicyClass::Full;
    UtilityKind utility = UtilityKind::Crra;
    double floorFraction = 1e-12;   // consumption floor relative to c0
    double spliceMultiple = 1e3;    // c* relative to c0
    std::optional<int> steps;       // overrides p.optim_steps()
};

Problem make_problem(const ParameterSet& p, SolveMode mode, const ProblemOptions& opt = {});

/// Logits reproducing initial_shares() in every block.
std::vector<double> warm_start(const Problem& prob);

struct PeriodRecord {
    int period = 0;
    double year = 0.0;
    double Y = 0.0;
    double growth = 0.0;    // Y(t+1)/Y(t) - 1
    double c = 0.0;
    double f = 0.0;
    double capability = 0.0;
    double C = 0.0;
    double CT = 0.0;
    double Q = 0.0;
    double H = 0.0;
    double S = 0.0;
    double K = 0.0;
    double L = 0.0;
    double D = 0.0;          // training compute rate
    double B = 0.0;          // inference budget
    double inferenceUsed = 0.0;
    double composite = 0.0;
    double utility = 0.0;    // discounted utility increment
    Shares shares{};
    std::size_t infoState = 0;
    std::size_t block = 0;
};

struct ScenarioTrajectory {
    int id = 0;
    double prob = 1.0;
    double zeta = 1.0;
    std::vector<PeriodRecord> periods;
};

struct TrajectorySet {
    double V = 0.0;
    std::vector<ScenarioTrajectory> scenarios;

    /// First n periods of every scenario.
    TrajectorySet head(int n) const;
};

double objective(const Problem& prob, std::span<const double> x);
/// Objective plus its full trajectory record.
TrajectorySet simulate(const Problem& prob, std::span<const double> x);
/// Objective and exact reverse-mode gradient.
double objective_and_gradient(const Problem& prob, std::span<const double> x, std::span<double> grad);

/// Expected objective over already-simulated scenarios.
double objective(const TrajectorySet& t);

struct IterationRecord {
    int iteration = 0;
    double V = 0.0;
    double gradNorm = 0.0;
    double step = 0.0;
};

struct SolverSettings {
    enum class Method { Lbfgs, GradientAscent };
    Method method = Method::Lbfgs;
    int maxIterations = 20000;
    double relGradTol = 1e-6;
    int lbfgsRank = 20;
    int maxRestarts = 20;
    /// Also ascend from a fixed grid of constant-share schedules; keep the best.
    bool multiStart = true;
};

struct SolveDiagnostics {
    bool converged = false;
    bool nanAbort = false;
    int iterations = 0;
    double V = 0.0;
    double gradNorm = 0.0;
    std::string termination;
    std::vector<IterationRecord> history;  // incumbent improvements only
    int starts = 0;
    int bestStart = 0;
};

/// Receives every accepted iterate; return false to cancel the solve.
using ProgressCallback = std::function<bool(const IterationRecord&)>;

struct OptimizeResult {
    std::vector<double> x;
    SolveDiagnostics diag;
};

/// Constant-share schedules used as extra starting points: the warm start
/// first, then a grid over compute investment, training split and R&D.
std::vector<std::vector<double>> start_points(const Problem& prob);

/// Gradient ascent from x0 alone.
OptimizeResult optimize_from(const Problem& prob, std::vector<double> x0, const SolverSettings& s,
                             const ProgressCallback& cb = {});

/// Gradient ascent from x0 and, with multiStart, every start_points() entry.
/// Reported records track the incumbent so V never decreases.
OptimizeResult optimize(const Problem& prob, std::vector<double> x0, const SolverSettings& s,
                        const ProgressCallback& cb = {});

struct Solution {
    SolveMode mode = SolveMode::Deterministic;
    Problem planning;      // problem the schedule was optimised on
    Problem evaluation;    // problem the reported trajectories come from
    DecisionSchedule schedule;
    TrajectorySet trajectories;  // full optimisation horizon
    SolveDiagnostics diag;

    /// Reported plan: first tauPlan periods.
    TrajectorySet plan() const;
};

Solution solve(const ParameterSet& p, SolveMode mode, const SolverSettings& s = {},
               const ProgressCallback& cb = {}, const std::vector<double>* x0 = nullptr);

struct SanityReport {
    bool pass = false;
    double vFull = 0.0;
    double vAlternative = 0.0;
    double tolerance = 0.0;
    std::string message;
};

SanityReport sanity_check_simple_policy(const ParameterSet& p, const Solution& full,
                                        const SolverSettings& s = {}, double relTol = 1e-6);
SanityReport sanity_check_spliced_utility(const ParameterSet& p, const Solution& full,
                                          const SolverSettings& s = {}, double relTol = 1e-6);

} // namespace gate
