#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "gate/ad.hpp"
#include "gate/ai_development.hpp"
#include "gate/automation.hpp"
#include "gate/params.hpp"

namespace gate {

/// (sum_j w_j x_j^rho)^(1/rho). Zero-weight nodes are ignored; any zero input
/// on a positive-weight node collapses the composite to zero.
template <class T>
T ces_composite(std::span<const T> inputs, std::span<const T> weights, double rho) {
    using std::pow;
    if (inputs.size() != weights.size()) throw std::invalid_argument("ces_composite: size mismatch");
    T sum(0.0);
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        if (!(value_of(weights[j]) > 0.0)) continue;
        if (!(value_of(inputs[j]) > 0.0)) return T(0.0);
        if (std::isinf(value_of(inputs[j]))) continue;
        sum += weights[j] * pow(inputs[j], rho);
    }
    if (!(value_of(sum) > 0.0)) return T(std::numeric_limits<double>::infinity());
    return pow(sum, 1.0 / rho);
}

double ces_composite(std::span<const double> inputs, const TaskGrid& grid, double rho);

/// Y = A T^(1-alpha-mu) K^alpha F^mu.
template <class T>
T produce(double A, const T& composite, const T& K, double F, double alpha, double mu) {
    using std::pow;
    T y = A * pow(composite, 1.0 - alpha - mu) * pow(K, alpha);
    if (mu != 0.0) y = y * std::pow(F, mu);
    return y;
}

/// Human labor density on automated and non-automated tasks.
template <class T>
struct LaborAllocationT {
    T automated;
    T nonAutomated;
};
using LaborAllocation = LaborAllocationT<double>;

template <class T>
LaborAllocationT<T> allocate_labor(const T& L, const T& f, LaborMode mode) {
    if (mode == LaborMode::NoReallocation) return {L, L};
    if (value_of(f) >= 1.0) return {T(0.0), T(0.0)};
    return {T(0.0), L / (1.0 - f)};
}

template <class T>
struct WaterFill {
    std::vector<T> N;  // digital workers per task on each node
    T level;           // common T_j / R_j^(1/(rho-1)) on active nodes
    std::size_t active = 0;
};

/// Maximises the CES composite over nodes with measure a_j, runtime
/// requirement R_j and human input L_j, subject to sum_j a_j N_j R_j = B.
/// Active nodes satisfy L_j + N_j = level * R_j^(1/(rho-1)); the active set
/// is the prefix of nodes sorted by their activation threshold
/// L_j R_j^(-1/(rho-1)).
template <class T>
WaterFill<T> water_fill(const T& B, std::span<const T> a, std::span<const T> R, std::span<const T> L,
                        double rho) {
    using std::pow;
    const std::size_t n = a.size();
    if (R.size() != n || L.size() != n) throw std::invalid_argument("water_fill: size mismatch");
    const double e = 1.0 / (rho - 1.0);
    WaterFill<T> out;
    out.N.assign(n, T(0.0));
    out.level = T(0.0);

    std::vector<std::size_t> idx;
    std::vector<double> thr(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (!(value_of(a[j]) > 0.0)) continue;
        thr[j] = value_of(L[j]) * std::pow(value_of(R[j]), -e);
        idx.push_back(j);
    }
    if (idx.empty() || !(value_of(B) > 0.0)) return out;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return thr[x] < thr[y]; });

    // Pick the active prefix on values, then rebuild the level on the tape.
    double num = value_of(B), den = 0.0;
    std::size_t k = 0;
    for (; k < idx.size(); ++k) {
        const std::size_t j = idx[k];
        const double aj = value_of(a[j]), Rj = value_of(R[j]);
        num += aj * Rj * value_of(L[j]);
        den += aj * std::pow(Rj, 1.0 + e);
        const double level = num / den;
        if (k + 1 == idx.size() || level <= thr[idx[k + 1]]) break;
    }
    const std::size_t active = k + 1;

    T tnum = B, tden(0.0);
    std::vector<T> Re(n, T(0.0));
    for (std::size_t q = 0; q < active; ++q) {
        const std::size_t j = idx[q];
        Re[j] = pow(R[j], e);
        tnum += a[j] * R[j] * L[j];
        tden += a[j] * R[j] * Re[j];
    }
    out.level = tnum / tden;
    out.active = active;
    for (std::size_t q = 0; q < active; ++q) {
        const std::size_t j = idx[q];
        const T Nj = out.level * Re[j] - L[j];
        out.N[j] = value_of(Nj) > 0.0 ? Nj : T(0.0);
    }
    return out;
}

/// Runtime-compute allocation over automated task segments.
template <class T>
struct TaskSegmentT {
    double lo;     // segment start on the task index
    double hi;     // segment end
    T a;           // automated measure within the segment
    T index;       // task index at which R is evaluated
    T R;           // runtime requirement
    T N;           // digital workers per task
    T CI;          // runtime compute per task (N R)
};
using TaskSegment = TaskSegmentT<double>;

template <class T>
struct InferenceAllocationT {
    T f;
    std::vector<TaskSegmentT<T>> segments;
    T composite;
};
using InferenceAllocation = InferenceAllocationT<double>;

/// Segment boundaries: the worker grid plus fInit.
inline std::vector<double> segment_edges(int workers, double fInit) {
    std::vector<double> edges;
    for (int j = 0; j <= workers; ++j) edges.push_back(static_cast<double>(j) / workers);
    edges.push_back(fInit);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

/// Splits the inference budget B across automated tasks given training run
/// CT and labor densities, and evaluates the task composite. Each segment's
/// automated part is represented by its midpoint.
template <class T>
InferenceAllocationT<T> allocate_inference_t(const T& B, const T& CT, const AutomationFunction& af,
                                             const LaborAllocationT<T>& labor, const T& f,
                                             const ParameterSet& p) {
    const std::vector<double> edges = segment_edges(p.taskGridWorkers, af.fInit);
    InferenceAllocationT<T> out;
    out.f = f;
    std::vector<T> a, R, L;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double lo = edges[s], hi = edges[s + 1];
        const T amt = smin(smax(f - lo, T(0.0)), T(hi - lo));
        if (!(value_of(amt) > 0.0)) break;
        TaskSegmentT<T> seg{lo, hi, amt, lo + 0.5 * amt, T(0.0), T(0.0), T(0.0)};
        seg.R = runtime_requirement(seg.index, CT, af, p.gamma0, p.gamma1, p.m, p.iotaMax);
        out.segments.push_back(seg);
        a.push_back(seg.a);
        R.push_back(seg.R);
        L.push_back(labor.automated);
    }
    const WaterFill<T> wf = water_fill<T>(B, a, R, L, p.rho);
    std::vector<T> inputs, weights;
    for (std::size_t s = 0; s < out.segments.size(); ++s) {
        auto& seg = out.segments[s];
        seg.N = wf.N[s];
        seg.CI = seg.N * seg.R;
        inputs.push_back(labor.automated + seg.N);
        weights.push_back(seg.a);
    }
    inputs.push_back(labor.nonAutomated);
    weights.push_back(1.0 - f);
    out.composite = ces_composite<T>(inputs, weights, p.rho);
    return out;
}

/// Inference allocation at training run CT with f read off the capability.
InferenceAllocation allocate_inference(double B, double CT, const AutomationFunction& af,
                                       const LaborAllocation& labor, const ParameterSet& p);

/// Effective capital investment: inverse of I_K = I_k + aK I_k^2 / (2K).
template <class T>
T capital_effective_investment(const T& IK, const T& K, double aK) {
    using std::sqrt;
    if (value_of(IK) < 0.0 || !(value_of(K) > 0.0) || !(aK >= 0.0))
        throw std::domain_error("capital_effective_investment: invalid arguments");
    // (K/aK)(sqrt(1 + 2 aK IK/K) - 1) rewritten without cancellation.
    return 2.0 * IK / (sqrt(1.0 + 2.0 * aK * IK / K) + 1.0);
}

enum OutputShare { kConsumption = 0, kCapitalInv = 1, kComputeInv = 2, kHardwareRD = 3, kSoftwareRD = 4 };
enum ComputeShare { kTraining = 0, kInference = 1 };

template <class T>
struct SharesT {
    std::array<T, 5> output;
    std::array<T, 2> compute;
};
using Shares = SharesT<double>;

template <class T>
struct EconomyStateT {
    ComputeStateT<T> compute;
    T K;
    T L;
};
using EconomyState = EconomyStateT<double>;

template <class T>
struct PeriodAllocationT {
    T capability;
    T f;
    LaborAllocationT<T> labor;
    InferenceAllocationT<T> inference;
    T D;          // training compute rate, eFLOP/year
    T B;          // inference budget, eFLOP/year
    T Y;
    T c;          // consumption per capita
    std::array<T, 5> spend;  // consumption and the four investment flows
};
using PeriodAllocation = PeriodAllocationT<double>;

template <class T>
PeriodAllocationT<T> period_output_t(const EconomyStateT<T>& s, const SharesT<T>& sh,
                                     const AutomationFunction& af, const ParameterSet& p, double A) {
    PeriodAllocationT<T> out;
    const auto& cs = s.compute;
    out.capability = capability_with_inference(cs.CT, p.iotaMax, p.m);
    out.f = fraction_automatable(af, out.capability);
    out.D = sh.compute[kTraining] * cs.C;
    out.B = sh.compute[kInference] * cs.C;
    out.labor = allocate_labor(s.L, out.f, p.laborMode);
    out.inference = allocate_inference_t(out.B, cs.CT, af, out.labor, out.f, p);
    out.Y = produce(A, out.inference.composite, s.K, p.F0, p.alpha, p.mu);
    for (int k = 0; k < 5; ++k) out.spend[static_cast<std::size_t>(k)] = sh.output[static_cast<std::size_t>(k)] * out.Y;
    out.c = out.spend[kConsumption] / s.L;
    return out;
}

PeriodAllocation period_output(const EconomyState& s, const Shares& sh, const AutomationFunction& af,
                               const ParameterSet& p, double A);

EconomyState initial_state(const ParameterSet& p);

/// Shares matching the initial flows: investment spends over Y0, capital
/// replacement dK K0 / Y0, consumption as residual; compute split CT0 : CI0.
Shares initial_shares(const ParameterSet& p);

/// Constant TFP making period-0 output equal Y0 with inference budget CI0
/// and training run CT0.
double calibrate_tfp(const ParameterSet& p);

} // namespace gate
