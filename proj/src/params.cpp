#include "gate/params.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace gate {

namespace {

using P = ParameterSet;

// Documented ranges; entries without a range are
// fixed constants or implementation settings.
const std::array<FieldInfo, 40> kFields{{
    {"y0", "$/year", &P::Y0, 105e12, 115e12, false, "World output in the first year."},
    {"l0", "workers", &P::L0, 3.4e9, 3.8e9, false, "Size of the human workforce in year 0."},
    {"g_l", "1/year", &P::gL, -0.01, 0.02, false, "Population growth rate."},
    {"k0", "$", &P::K0, 200e12, 1e15, true, "Initial non-compute capital stock."},
    {"alpha", "", &P::alpha, 0.2, 0.6, false, "Output elasticity of capital."},
    {"mu", "", &P::mu, 0.0, 0.3, false, "Elasticity of output with respect to the fixed factor."},
    {"f0", "$", &P::F0, std::nullopt, std::nullopt, true, "Non-accumulable factor stock (TFP absorbs its level)."},
    {"a_k", "years", &P::aK, 0.5, 2.0, false, "Capital adjustment timescale."},
    {"delta_k", "1/year", &P::deltaK, 0.003, 0.2, false, "Capital depreciation rate."},
    {"rho", "", &P::rho, -5.0, -0.2, false, "CES substitution parameter across tasks (tasks are gross complements)."},
    {"beta", "1/year", &P::beta, 0.03, 0.07, false, "Consumption discount rate."},
    {"eta", "", &P::eta, 1.0, 6.0, false, "Relative risk aversion of the isoelastic utility."},
    {"h0", "FLOP/year/$", &P::H0, 1e17, 1e19, true, "Hardware efficiency in year 0."},
    {"h_max", "FLOP/year/$", &P::Hmax, 1e21, 1e25, true, "Ceiling on hardware efficiency."},
    {"i_h0", "$/year", &P::IH0, 1e10, 1e12, true, "Initial hardware R&D spending."},
    {"lambda_h", "", &P::lambdaH, 0.0625, 1.0, false, "Returns to scale in hardware R&D spending."},
    {"phi_h", "", &P::phiH, 0.01, 1.0, true, "Fishing-out exponent for hardware efficiency."},
    {"theta_h", "", &P::thetaH, 0.001, 1000.0, true, "Hardware R&D productivity."},
    {"s0", "eFLOP/FLOP", &P::S0, std::nullopt, std::nullopt, false, "Initial software efficiency (1 by definition)."},
    {"s_max", "eFLOP/FLOP", &P::Smax, 50.0, 1e8, true, "Ceiling on software efficiency."},
    {"i_s0", "$/year", &P::IS0, 1e9, 2.5e10, true, "Initial software R&D spending."},
    {"lambda_s", "", &P::lambdaS, 0.14, 1.0, false, "Returns to scale in software R&D spending."},
    {"phi_s", "", &P::phiS, 0.1, 1.0, true, "Fishing-out exponent for software efficiency."},
    {"theta_s", "", &P::thetaS, 0.001, 1000.0, true, "Software R&D productivity."},
    {"i_q0", "$/year", &P::IQ0, 5e10, 8e11, true, "Initial spending on compute hardware."},
    {"chi", "", &P::chi, 3.0, 5.0, false, "Curvature of the compute adjustment cost."},
    {"a_q", "years", &P::aQ, 1.0, 4.0, false, "Compute adjustment timescale."},
    {"delta_q", "1/year", &P::deltaQ, std::nullopt, std::nullopt, false, "Compute depreciation rate."},
    {"ct0", "eFLOP", &P::CT0, 2e25, 2e26, true, "Effective compute of the biggest training run in year 0."},
    {"c_l", "FLOP/year", &P::CL, 8.6e34, 5e41, true, "Heat-dissipation cap on usable compute."},
    {"ci0", "eFLOP/year", &P::CI0, 1e27, 1e29, true, "Compute devoted to running AI in year 0."},
    {"gamma0", "log10 FLOP/year", &P::gamma0, 13.0, 17.0, false, "Log10 runtime requirement of the easiest task."},
    {"gamma1", "OOMs", &P::gamma1, 7.0, 11.0, false, "Runtime requirement increase across the task index."},
    {"m", "", &P::m, 1.0, 4.0, false, "Slope of the training-inference tradeoff."},
    {"iota_max", "", &P::iotaMax, 1e3, 1e7, true, "Maximum inference multiplier."},
    {"tagi", "eFLOP", &P::Tagi, 1e33, 1e41, true, "Training compute required for full automation."},
    {"f_init", "", &P::fInit, 0.05, 0.2, false, "Share of tasks already automated in year 0."},
    {"flop_gap_fraction", "", &P::flopGapFraction, 0.4, 0.8, false, "FLOP gap as a fraction of the initial distance to full automation."},
    {"xi", "", &P::xi, 2.0, 20.0, false, "R&D wedge (externality add-on)."},
    {"dt", "years", &P::dt, std::nullopt, std::nullopt, false, "Simulation time step."},
}};

struct IntField {
    std::string_view name;
    int ParameterSet::*member;
};

const std::array<IntField, 4> kIntFields{{
    {"tau_plan", &P::tauPlan},
    {"tau_optim", &P::tauOptim},
    {"task_grid_workers", &P::taskGridWorkers},
    {"task_grid_labor", &P::taskGridLabor},
}};

std::span<const FieldInfo> double_fields() { return kFields; }

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace

int ParameterSet::optim_steps() const { return static_cast<int>(std::lround(tauOptim / dt)); }
int ParameterSet::plan_steps() const { return static_cast<int>(std::lround(tauPlan / dt)); }

double ParameterSet::delta_flop() const {
    const double capability0 = CT0 * std::pow(iotaMax, 1.0 / m);
    return flopGapFraction * (std::log10(Tagi) - std::log10(capability0));
}

ParameterSet default_preset() { return ParameterSet{}; }

ParameterSet desk_preset() {
    ParameterSet p;
    p.tauPlan = 20;
    p.tauOptim = 40;
    return p;
}

std::optional<ParameterSet> preset(std::string_view name) {
    if (name == "default") return default_preset();
    if (name == "desk") return desk_preset();
    return std::nullopt;
}

std::vector<std::string> preset_names() { return {"default", "desk"}; }

std::span<const FieldInfo> scalar_fields() { return double_fields(); }

const FieldInfo* find_field(std::string_view name) {
    for (const auto& f : double_fields())
        if (f.name == name) return &f;
    return nullptr;
}

std::vector<Violation> validate(const ParameterSet& p, ValidationMode mode) {
    std::vector<Violation> out;
    auto add = [&](std::string field, std::string msg) { out.push_back({std::move(field), std::move(msg)}); };

    for (const auto& f : double_fields()) {
        const double v = p.*(f.member);
        if (!std::isfinite(v)) add(std::string(f.name), std::string(f.name) + " must be finite");
    }
    if (!out.empty()) return out;

    // Structural invariants, checked in both modes.
    if (!(p.rho < 0)) add("rho", "rho must be < 0 (tasks are gross complements)");
    if (!(p.alpha > 0 && p.alpha < 1)) add("alpha", "alpha must lie in (0, 1)");
    if (!(p.mu >= 0)) add("mu", "mu must be >= 0");
    if (!(p.alpha + p.mu < 1)) add("alpha", "alpha + mu must be < 1");
    if (!(p.eta > 0)) add("eta", "eta must be > 0");
    if (!(p.beta > p.gL)) add("beta", "beta must exceed g_l");
    for (auto [name, v] : {std::pair{"y0", p.Y0}, {"l0", p.L0}, {"k0", p.K0}, {"f0", p.F0}, {"a_k", p.aK},
                           {"h0", p.H0}, {"s0", p.S0}, {"i_h0", p.IH0}, {"i_s0", p.IS0}, {"i_q0", p.IQ0},
                           {"a_q", p.aQ}, {"ct0", p.CT0}, {"c_l", p.CL}, {"ci0", p.CI0}, {"m", p.m},
                           {"tagi", p.Tagi}, {"theta_h", p.thetaH}, {"theta_s", p.thetaS}, {"dt", p.dt},
                           {"xi", p.xi}}) {
        if (!(v > 0)) add(name, std::string(name) + " must be > 0");
    }
    if (!(p.deltaK >= 0)) add("delta_k", "delta_k must be >= 0");
    if (!(p.deltaQ >= 0)) add("delta_q", "delta_q must be >= 0");
    if (!(p.lambdaH >= 0)) add("lambda_h", "lambda_h must be >= 0");
    if (!(p.lambdaS >= 0)) add("lambda_s", "lambda_s must be >= 0");
    if (!(p.chi > 1)) add("chi", "chi must be > 1");
    if (!(p.Hmax > p.H0)) add("h_max", "h_max must exceed h0");
    if (!(p.Smax > p.S0)) add("s_max", "s_max must exceed s0");
    if (!(p.iotaMax >= 1)) add("iota_max", "iota_max must be >= 1");
    if (!(p.fInit >= 0 && p.fInit < 1)) add("f_init", "f_init must lie in [0, 1)");
    if (!(p.flopGapFraction > 0 && p.flopGapFraction <= 1))
        add("flop_gap_fraction", "flop_gap_fraction must lie in (0, 1]");
    if (out.empty() && !(p.delta_flop() > 0))
        add("tagi", "tagi must exceed the initial capability ct0 * iota_max^(1/m)");
    if (!(p.dt * p.deltaQ < 1) || !(p.dt * p.deltaK < 1))
        add("dt", "dt must be below 1/delta_q and 1/delta_k so depreciation keeps stocks positive");

    if (p.tauPlan < 1) add("tau_plan", "tau_plan must be >= 1");
    if (p.tauOptim < p.tauPlan) add("tau_optim", "tau_optim must be >= tau_plan");
    if (p.taskGridWorkers < 1) add("task_grid_workers", "task_grid_workers must be >= 1");
    if (p.taskGridLabor < p.taskGridWorkers || p.taskGridWorkers < 1 ||
        p.taskGridLabor % std::max(p.taskGridWorkers, 1) != 0)
        add("task_grid_labor", "task_grid_labor must be a positive multiple of task_grid_workers");

    if (p.beliefSpec.empty()) {
        add("belief_spec", "belief_spec must contain at least one candidate");
    } else {
        double sum = 0;
        int full = 0;
        for (std::size_t i = 0; i < p.beliefSpec.size(); ++i) {
            const auto& b = p.beliefSpec[i];
            sum += b.prob;
            if (!(b.prob > 0 && b.prob <= 1))
                add("belief_spec", "belief probability " + std::to_string(i) + " must lie in (0, 1]");
            if (!(b.zeta > p.fInit && b.zeta <= 1))
                add("belief_spec", "zeta " + std::to_string(i) + " must lie in (f_init, 1]");
            if (b.zeta == 1.0) ++full;
            for (std::size_t j = 0; j < i; ++j)
                if (p.beliefSpec[j].zeta == b.zeta) add("belief_spec", "zeta values must be distinct");
        }
        if (std::abs(sum - 1.0) > 1e-9) add("belief_spec", "belief probabilities must sum to 1");
        if (full != 1) add("belief_spec", "exactly one candidate must have zeta = 1");
    }

    if (mode == ValidationMode::Strict) {
        for (const auto& f : double_fields()) {
            const double v = p.*(f.member);
            if ((f.lo && v < *f.lo) || (f.hi && v > *f.hi)) {
                add(std::string(f.name), std::string(f.name) + " = " + fmt_num(v) + " is outside [" +
                                             fmt_num(f.lo.value_or(-INFINITY)) + ", " +
                                             fmt_num(f.hi.value_or(INFINITY)) + "]");
            }
        }
        if (p.beliefSpec.size() > 20) add("belief_spec", "at most 20 automation functions are supported");
    }
    return out;
}

std::string to_string(LaborMode mode) {
    return mode == LaborMode::PerfectReallocation ? "perfect_reallocation" : "no_reallocation";
}

std::optional<LaborMode> labor_mode_from_string(std::string_view s) {
    if (s == "perfect_reallocation") return LaborMode::PerfectReallocation;
    if (s == "no_reallocation") return LaborMode::NoReallocation;
    return std::nullopt;
}

nlohmann::json to_json(const ParameterSet& p) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& f : double_fields()) doc[std::string(f.name)] = p.*(f.member);
    for (const auto& f : kIntFields) doc[std::string(f.name)] = p.*(f.member);
    auto beliefs = nlohmann::json::array();
    for (const auto& b : p.beliefSpec) beliefs.push_back({{"zeta", b.zeta}, {"prob", b.prob}});
    doc["belief_spec"] = std::move(beliefs);
    doc["labor_mode"] = to_string(p.laborMode);
    return doc;
}

ParameterSet from_json(const nlohmann::json& doc, std::vector<Violation>& problems, const ParameterSet& base) {
    ParameterSet p = base;
    if (!doc.is_object()) {
        problems.push_back({"", "configuration document must be a JSON object"});
        return p;
    }
    for (const auto& [key, value] : doc.items()) {
        if (const auto* f = find_field(key)) {
            if (!value.is_number()) {
                problems.push_back({key, key + " must be a number"});
                continue;
            }
            p.*(f->member) = value.get<double>();
            continue;
        }
        bool handled = false;
        for (const auto& f : kIntFields) {
            if (f.name != key) continue;
            handled = true;
            if (!value.is_number_integer()) {
                problems.push_back({key, key + " must be an integer"});
                break;
            }
            p.*(f.member) = value.get<int>();
        }
        if (handled) continue;
        if (key == "labor_mode") {
            auto mode = value.is_string() ? labor_mode_from_string(value.get<std::string>()) : std::nullopt;
            if (mode)
                p.laborMode = *mode;
            else
                problems.push_back({key, "labor_mode must be \"perfect_reallocation\" or \"no_reallocation\""});
        } else if (key == "belief_spec") {
            if (!value.is_array()) {
                problems.push_back({key, "belief_spec must be an array of {zeta, prob}"});
                continue;
            }
            std::vector<BeliefEntry> beliefs;
            for (const auto& e : value) {
                if (!e.is_object() || !e.contains("zeta") || !e.contains("prob") || !e["zeta"].is_number() ||
                    !e["prob"].is_number()) {
                    problems.push_back({key, "belief_spec entries must be {\"zeta\": number, \"prob\": number}"});
                    beliefs.clear();
                    break;
                }
                beliefs.push_back({e["zeta"].get<double>(), e["prob"].get<double>()});
            }
            if (!beliefs.empty()) p.beliefSpec = std::move(beliefs);
        } else {
            problems.push_back({key, "unknown key \"" + key + "\""});
        }
    }
    return p;
}

nlohmann::json schema_json() {
    const ParameterSet d = default_preset();
    auto fields = nlohmann::json::array();
    for (const auto& f : double_fields()) {
        nlohmann::json e{{"name", f.name},
                         {"units", f.units},
                         {"default", d.*(f.member)},
                         {"scale", f.logScale ? "log" : "linear"},
                         {"description", f.description},
                         {"type", "number"}};
        e["min"] = f.lo ? nlohmann::json(*f.lo) : nlohmann::json(nullptr);
        e["max"] = f.hi ? nlohmann::json(*f.hi) : nlohmann::json(nullptr);
        fields.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < kIntFields.size(); ++i) {
        const auto& f = kIntFields[i];
        fields.push_back({{"name", f.name},
                          {"units", i < 2 ? "years" : "nodes"},
                          {"default", d.*(f.member)},
                          {"type", "integer"},
                          {"scale", "linear"},
                          {"min", 1},
                          {"max", nullptr}});
    }
    fields.push_back({{"name", "labor_mode"},
                      {"type", "enum"},
                      {"values", {"perfect_reallocation", "no_reallocation"}},
                      {"default", to_string(d.laborMode)}});
    fields.push_back({{"name", "belief_spec"},
                      {"type", "belief_list"},
                      {"group", "uncertainty"},
                      {"default", to_json(d)["belief_spec"]},
                      {"max_entries", 20}});
    return {{"fields", std::move(fields)}, {"presets", preset_names()}};
}

} // namespace gate
