#include "gate/planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <type_traits>

#include <ceres/ceres.h>

namespace gate {

std::string to_string(SolveMode mode) {
    switch (mode) {
    case SolveMode::Deterministic: return "det";
    case SolveMode::Externality: return "ext";
    case SolveMode::Uncertainty: return "unc";
    }
    return "det";
}

std::optional<SolveMode> solve_mode_from_string(std::string_view s) {
    if (s == "det" || s == "deterministic") return SolveMode::Deterministic;
    if (s == "ext" || s == "externality") return SolveMode::Externality;
    if (s == "unc" || s == "uncertainty") return SolveMode::Uncertainty;
    return std::nullopt;
}

Shares DecisionPoint::shares() const {
    Shares s;
    s.output = softmax<double, 5>(outputLogits);
    s.compute = softmax<double, 2>(computeLogits);
    return s;
}

DecisionPoint DecisionPoint::from_shares(const Shares& s) {
    DecisionPoint d;
    for (std::size_t k = 0; k < 5; ++k) d.outputLogits[k] = std::log(s.output[k]);
    for (std::size_t k = 0; k < 2; ++k) d.computeLogits[k] = std::log(s.compute[k]);
    return d;
}

InfoStates InfoStates::reachable(std::size_t n) {
    InfoStates st;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<bool> m(n, false);
        for (std::size_t i = k; i < n; ++i) m[i] = true;
        st.masks.push_back(m);
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        std::vector<bool> m(n, false);
        m[k] = true;
        st.masks.push_back(m);
    }
    return st;
}

std::size_t InfoStates::index_of(const std::vector<bool>& mask) const {
    for (std::size_t i = 0; i < masks.size(); ++i)
        if (masks[i] == mask) return i;
    throw std::logic_error("unreachable information state");
}

std::size_t ScheduleLayout::blocks() const {
    if (policy == PolicyClass::PhaseSimple) return 3;
    return infoStates * static_cast<std::size_t>(steps);
}

std::size_t ScheduleLayout::block(int t, std::size_t s, double f, double fInit) const {
    if (policy == PolicyClass::PhaseSimple) {
        if (f <= fInit) return 0;
        return f < 1.0 ? 1 : 2;
    }
    return s * static_cast<std::size_t>(steps) + static_cast<std::size_t>(t);
}

DecisionPoint DecisionSchedule::point(std::size_t block) const {
    DecisionPoint d;
    const std::size_t o = block * kLogitsPerPoint;
    for (std::size_t k = 0; k < 5; ++k) d.outputLogits[k] = logits.at(o + k);
    for (std::size_t k = 0; k < 2; ++k) d.computeLogits[k] = logits.at(o + 5 + k);
    return d;
}

Problem make_problem(const ParameterSet& p, SolveMode mode, const ProblemOptions& opt) {
    Problem prob;
    prob.p = p;
    prob.mode = mode;
    prob.A = calibrate_tfp(p);
    prob.c0 = initial_shares(p).output[kConsumption] * p.Y0 / p.L0;
    prob.xi = mode == SolveMode::Externality ? p.xi : 1.0;
    prob.utility.eta = p.eta;
    prob.utility.floor = opt.floorFraction * prob.c0;
    prob.utility.kind = opt.utility;
    prob.utility.cStar = opt.spliceMultiple * prob.c0;

    if (mode == SolveMode::Uncertainty) {
        prob.beliefs = initial_beliefs(p);
    } else {
        prob.beliefs.candidates = {automation_function(p, 1.0)};
        prob.beliefs.prior = {1.0};
        prob.beliefs.surviving = {true};
    }
    prob.info = InfoStates::reachable(prob.beliefs.candidates.size());
    for (std::size_t j = 0; j < prob.beliefs.candidates.size(); ++j)
        prob.scenarios.push_back({static_cast<int>(j), prob.beliefs.candidates[j], prob.beliefs.prior[j]});

    prob.layout.steps = opt.steps.value_or(p.optim_steps());
    prob.layout.infoStates = prob.info.size();
    prob.layout.policy = opt.policy;
    return prob;
}

std::vector<double> warm_start(const Problem& prob) {
    const DecisionPoint d = DecisionPoint::from_shares(initial_shares(prob.p));
    std::vector<double> x(prob.layout.size());
    for (std::size_t b = 0; b < prob.layout.blocks(); ++b) {
        for (std::size_t k = 0; k < 5; ++k) x[b * kLogitsPerPoint + k] = d.outputLogits[k];
        for (std::size_t k = 0; k < 2; ++k) x[b * kLogitsPerPoint + 5 + k] = d.computeLogits[k];
    }
    return x;
}

namespace {

template <class T>
EconomyStateT<T> lift(const EconomyState& s) {
    EconomyStateT<T> o;
    o.compute = {T(s.compute.Q), T(s.compute.H), T(s.compute.S), T(s.compute.C), T(s.compute.CT)};
    o.K = T(s.K);
    o.L = T(s.L);
    return o;
}

template <class T>
SharesT<T> decode(std::span<const T> x, std::size_t block) {
    const std::size_t o = block * kLogitsPerPoint;
    SharesT<T> sh;
    sh.output = softmax<T, 5>(x.subspan(o, 5));
    sh.compute = softmax<T, 2>(x.subspan(o + 5, 2));
    return sh;
}

template <class T>
EconomyStateT<T> advance(const EconomyStateT<T>& s, const PeriodAllocationT<T>& per, const Problem& prob) {
    using std::exp;
    const ParameterSet& p = prob.p;
    const double dt = p.dt;
    EconomyStateT<T> n;
    n.compute = step_compute_state_t(s.compute, per.spend[kComputeInv], per.spend[kHardwareRD],
                                     per.spend[kSoftwareRD], T(per.D * dt), p, dt, prob.xi);
    const T Ik = capital_effective_investment(per.spend[kCapitalInv], s.K, p.aK);
    n.K = s.K + (Ik - p.deltaK * s.K) * dt;
    n.L = s.L * std::exp(p.gL * dt);
    return n;
}

template <class T>
T rollout(const Problem& prob, std::span<const T> x, TrajectorySet* rec) {
    constexpr bool kRecord = std::is_same_v<T, double>;
    const ParameterSet& p = prob.p;
    const double dt = p.dt;
    const double r = p.beta - p.gL;
    const int steps = prob.layout.steps;
    if (x.size() != prob.layout.size()) throw std::invalid_argument("decision vector has the wrong length");

    T total(0.0);
    const EconomyState s0 = initial_state(p);
    for (const Scenario& sc : prob.scenarios) {
        EconomyStateT<T> s = lift<T>(s0);
        BeliefState beliefs = prob.beliefs;
        T V(0.0);
        ScenarioTrajectory tr;
        tr.id = sc.id;
        tr.prob = sc.prob;
        tr.zeta = sc.truth.zeta;
        SharesT<T> sh{};
        for (int t = 0; t < steps; ++t) {
            const double cap = value_of(capability_with_inference(s.compute.CT, p.iotaMax, p.m));
            const double f = fraction_automatable(sc.truth, cap);
            std::size_t info = 0;
            if (prob.mode == SolveMode::Uncertainty) {
                beliefs = update_beliefs(beliefs, cap, f);
                info = prob.info.index_of(beliefs.surviving);
            }
            const std::size_t blk = prob.layout.block(t, info, f, p.fInit);
            sh = decode(x, blk);
            const PeriodAllocationT<T> per = period_output_t(s, sh, sc.truth, p, prob.A);
            const double w = std::exp(-r * t * dt) * dt;
            const T du = w * utility(per.c, prob.utility);
            V += du;
            if constexpr (kRecord) {
                if (rec) {
                    PeriodRecord pr;
                    pr.period = t;
                    pr.year = t * dt;
                    pr.Y = per.Y;
                    pr.c = per.c;
                    pr.f = per.f;
                    pr.capability = per.capability;
                    pr.C = s.compute.C;
                    pr.CT = s.compute.CT;
                    pr.Q = s.compute.Q;
                    pr.H = s.compute.H;
                    pr.S = s.compute.S;
                    pr.K = s.K;
                    pr.L = s.L;
                    pr.D = per.D;
                    pr.B = per.B;
                    for (const auto& seg : per.inference.segments) pr.inferenceUsed += seg.a * seg.CI;
                    pr.composite = per.inference.composite;
                    pr.utility = du;
                    pr.shares = sh;
                    pr.infoState = info;
                    pr.block = blk;
                    tr.periods.push_back(pr);
                }
            }
            s = advance(s, per, prob);
        }
        if constexpr (kRecord) {
            if (rec) {
                // Output one period past the horizon, under the last shares, closes the growth column.
                const PeriodAllocation next = period_output_t(s, sh, sc.truth, p, prob.A);
                for (std::size_t t = 0; t < tr.periods.size(); ++t) {
                    const double y1 = t + 1 < tr.periods.size() ? tr.periods[t + 1].Y : next.Y;
                    tr.periods[t].growth = y1 / tr.periods[t].Y - 1.0;
                }
                rec->scenarios.push_back(std::move(tr));
            }
        }
        total += sc.prob * V;
    }
    if constexpr (kRecord) {
        if (rec) rec->V = total;
    }
    return total;
}

} // namespace

double objective(const Problem& prob, std::span<const double> x) {
    return rollout<double>(prob, x, nullptr);
}

TrajectorySet simulate(const Problem& prob, std::span<const double> x) {
    TrajectorySet out;
    rollout<double>(prob, x, &out);
    return out;
}

double objective_and_gradient(const Problem& prob, std::span<const double> x, std::span<double> grad) {
    if (grad.size() != x.size()) throw std::invalid_argument("gradient buffer has the wrong length");
    ad::Tape tape;
    ad::TapeScope scope(tape);
    std::vector<ad::Var> xs;
    xs.reserve(x.size());
    for (double v : x) xs.push_back(ad::Var::input(v));
    const ad::Var V = rollout<ad::Var>(prob, xs, nullptr);
    const std::vector<double> adj = tape.adjoints(V.index());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = adj[static_cast<std::size_t>(xs[i].index())];
    return V.value();
}

double objective(const TrajectorySet& t) {
    double v = 0.0;
    for (const auto& sc : t.scenarios) {
        double s = 0.0;
        for (const auto& pr : sc.periods) s += pr.utility;
        v += sc.prob * s;
    }
    return v;
}

TrajectorySet TrajectorySet::head(int n) const {
    TrajectorySet out;
    out.V = V;
    for (const auto& sc : scenarios) {
        ScenarioTrajectory s = sc;
        if (static_cast<int>(s.periods.size()) > n) s.periods.resize(static_cast<std::size_t>(n));
        out.scenarios.push_back(std::move(s));
    }
    return out;
}

namespace {

class CeresObjective final : public ceres::FirstOrderFunction {
public:
    explicit CeresObjective(const Problem& prob) : prob_(prob), n_(static_cast<int>(prob.layout.size())) {}

    bool Evaluate(const double* params, double* cost, double* gradient) const override {
        const std::span<const double> x(params, static_cast<std::size_t>(n_));
        double V;
        try {
            if (gradient) {
                std::span<double> g(gradient, static_cast<std::size_t>(n_));
                V = objective_and_gradient(prob_, x, g);
                for (double& gi : g) gi = -gi;
                for (double gi : g)
                    if (!std::isfinite(gi)) return false;
            } else {
                V = objective(prob_, x);
            }
        } catch (const std::domain_error&) {
            return false;
        }
        if (!std::isfinite(V)) return false;
        *cost = -V;
        return true;
    }

    int NumParameters() const override { return n_; }

private:
    const Problem& prob_;
    int n_;
};

class Progress final : public ceres::IterationCallback {
public:
    Progress(SolveDiagnostics& d, const ProgressCallback& cb, double tol, int offset, bool skipFirst)
        : d_(d), cb_(cb), tol_(tol), offset_(offset), skipFirst_(skipFirst) {}

    ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
        IterationRecord r{offset_ + s.iteration, -s.cost, s.gradient_max_norm, s.step_size};
        last_ = s.iteration;
        if (!(skipFirst_ && s.iteration == 0)) {
            d_.history.push_back(r);
            if (cb_ && !cb_(r)) {
                cancelled = true;
                return ceres::SOLVER_ABORT;
            }
        }
        if (s.gradient_max_norm < tol_ * std::abs(r.V)) {
            converged = true;
            return ceres::SOLVER_TERMINATE_SUCCESSFULLY;
        }
        return ceres::SOLVER_CONTINUE;
    }

    bool converged = false;
    bool cancelled = false;
    int last_ = 0;

private:
    SolveDiagnostics& d_;
    const ProgressCallback& cb_;
    double tol_;
    int offset_;
    bool skipFirst_;
};

double max_norm(const std::vector<double>& g) {
    double m = 0.0;
    for (double v : g) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

std::vector<std::vector<double>> start_points(const Problem& prob) {
    std::vector<std::vector<double>> out{warm_start(prob)};
    const Shares base = initial_shares(prob.p);
    for (double q : {0.02, 0.05, 0.15})
        for (double tr : {0.3, 0.5})
            for (double rd : {0.05, 0.2}) {
                Shares sh = base;
                sh.output[kCapitalInv] = 0.2;
                sh.output[kComputeInv] = q;
                sh.output[kHardwareRD] = rd;
                sh.output[kSoftwareRD] = rd;
                sh.output[kConsumption] = 1.0 - 0.2 - q - 2.0 * rd;
                sh.compute = {tr, 1.0 - tr};
                const DecisionPoint d = DecisionPoint::from_shares(sh);
                std::vector<double> x(prob.layout.size());
                for (std::size_t b = 0; b < prob.layout.blocks(); ++b) {
                    for (std::size_t k = 0; k < 5; ++k) x[b * kLogitsPerPoint + k] = d.outputLogits[k];
                    for (std::size_t k = 0; k < 2; ++k) x[b * kLogitsPerPoint + 5 + k] = d.computeLogits[k];
                }
                out.push_back(std::move(x));
            }
    return out;
}

OptimizeResult optimize(const Problem& prob, std::vector<double> x0, const SolverSettings& s,
                        const ProgressCallback& cb) {
    std::vector<std::vector<double>> starts{std::move(x0)};
    if (s.multiStart)
        for (auto& x : start_points(prob))
            if (x != starts.front()) starts.push_back(std::move(x));

    OptimizeResult best;
    double shown = -std::numeric_limits<double>::infinity();
    int offset = 0;
    bool cancelled = false;
    std::vector<IterationRecord> history;
    for (std::size_t k = 0; k < starts.size() && !cancelled; ++k) {
        ProgressCallback relay = [&](const IterationRecord& r) {
            if (r.V <= shown && !history.empty()) return true;
            shown = r.V;
            IterationRecord o = r;
            o.iteration += offset;
            history.push_back(o);
            if (cb && !cb(o)) {
                cancelled = true;
                return false;
            }
            return true;
        };
        OptimizeResult r = optimize_from(prob, std::move(starts[k]), s, relay);
        if (r.diag.nanAbort) {
            if (k == 0) return r;
            continue;
        }
        offset += r.diag.iterations + 1;
        if (k == 0 || r.diag.V > best.diag.V) {
            best = std::move(r);
            best.diag.bestStart = static_cast<int>(k);
        }
        if (cancelled || best.diag.termination == "cancelled") break;
    }
    best.diag.history = std::move(history);
    best.diag.starts = static_cast<int>(starts.size());
    if (cancelled) {
        best.diag.converged = false;
        best.diag.termination = "cancelled";
    }
    return best;
}

OptimizeResult optimize_from(const Problem& prob, std::vector<double> x0, const SolverSettings& s,
                             const ProgressCallback& cb) {
    OptimizeResult out;
    out.x = std::move(x0);
    SolveDiagnostics& d = out.diag;

    std::vector<double> g(out.x.size());
    double V = std::numeric_limits<double>::quiet_NaN();
    try {
        V = objective_and_gradient(prob, out.x, g);
    } catch (const std::domain_error& e) {
        d.termination = std::string("objective failed at the starting point: ") + e.what();
        d.nanAbort = true;
        return out;
    }
    if (!std::isfinite(V) || !std::isfinite(max_norm(g))) {
        d.nanAbort = true;
        d.termination = "objective is not finite at the starting point";
        d.V = V;
        return out;
    }

    int used = 0;
    for (int attempt = 0; attempt <= s.maxRestarts; ++attempt) {
        if (max_norm(g) < s.relGradTol * std::abs(V)) {
            d.converged = true;
            if (d.history.empty()) d.history.push_back({0, V, max_norm(g), 0.0});
            break;
        }
        if (used >= s.maxIterations) break;
        ceres::GradientProblemSolver::Options o;
        o.line_search_direction_type =
            s.method == SolverSettings::Method::Lbfgs ? ceres::LBFGS : ceres::STEEPEST_DESCENT;
        o.max_lbfgs_rank = s.lbfgsRank;
        o.max_num_iterations = s.maxIterations - used;
        o.function_tolerance = 0.0;
        o.gradient_tolerance = 0.0;
        o.parameter_tolerance = 0.0;
        o.logging_type = ceres::SILENT;
        o.minimizer_progress_to_stdout = false;
        Progress progress(d, cb, s.relGradTol, used, attempt > 0);
        o.callbacks.push_back(&progress);

        ceres::GradientProblem problem(new CeresObjective(prob));
        ceres::GradientProblemSolver::Summary summary;
        ceres::Solve(o, problem, out.x.data(), &summary);
        used += static_cast<int>(summary.iterations.empty() ? 0 : summary.iterations.back().iteration);
        d.termination = summary.message;

        V = objective_and_gradient(prob, out.x, g);
        if (progress.cancelled) {
            d.termination = "cancelled";
            break;
        }
        if (progress.converged) {
            d.converged = true;
            break;
        }
        if (summary.iterations.size() <= 1) {
            d.termination = "line search stalled: " + summary.message;
            break;
        }
    }
    d.iterations = used;
    d.V = V;
    d.gradNorm = max_norm(g);
    if (!d.converged && used >= s.maxIterations && d.termination != "cancelled")
        d.termination = "iteration cap reached";
    if (d.converged) d.termination = "gradient max-norm below tolerance";
    return out;
}

TrajectorySet Solution::plan() const {
    return trajectories.head(evaluation.p.plan_steps());
}

Solution solve(const ParameterSet& p, SolveMode mode, const SolverSettings& s, const ProgressCallback& cb,
               const std::vector<double>* x0) {
    Solution sol;
    sol.mode = mode;
    sol.planning = make_problem(p, mode);
    std::vector<double> start = x0 && x0->size() == sol.planning.layout.size() ? *x0 : warm_start(sol.planning);
    OptimizeResult r = optimize(sol.planning, std::move(start), s, cb);
    sol.evaluation = sol.planning;
    sol.evaluation.xi = 1.0;
    sol.schedule = {sol.planning.layout, r.x};
    sol.diag = r.diag;
    if (!sol.diag.nanAbort) sol.trajectories = simulate(sol.evaluation, r.x);
    return sol;
}

SanityReport sanity_check_simple_policy(const ParameterSet& p, const Solution& full, const SolverSettings& s,
                                        double relTol) {
    ProblemOptions opt;
    opt.policy = PolicyClass::PhaseSimple;
    opt.steps = full.planning.layout.steps;
    const Problem simple = make_problem(p, full.mode, opt);
    const OptimizeResult r = optimize(simple, warm_start(simple), s);
    SanityReport rep;
    rep.vFull = objective(full.planning, full.schedule.logits);
    rep.vAlternative = r.diag.V;
    rep.tolerance = relTol * std::abs(rep.vFull);
    rep.pass = rep.vFull >= rep.vAlternative - rep.tolerance;
    rep.message = rep.pass ? "full solution dominates the phase-simple policy"
                           : "the main solver may have converged to a suboptimal local optimum";
    return rep;
}

SanityReport sanity_check_spliced_utility(const ParameterSet& p, const Solution& full, const SolverSettings& s,
                                          double relTol) {
    ProblemOptions opt;
    opt.utility = UtilityKind::Spliced;
    opt.steps = full.planning.layout.steps;
    const Problem spliced = make_problem(p, full.mode, opt);
    const OptimizeResult r = optimize(spliced, warm_start(spliced), s);
    SanityReport rep;
    rep.vFull = objective(full.planning, full.schedule.logits);
    rep.vAlternative = objective(full.planning, r.x);
    rep.tolerance = relTol * std::abs(rep.vFull);
    rep.pass = rep.vAlternative <= rep.vFull + rep.tolerance;
    rep.message = rep.pass ? "spliced-utility schedule does not beat the full solution"
                           : "spliced-utility schedule beats the full solution under the original utility";
    return rep;
}

} // namespace gate
