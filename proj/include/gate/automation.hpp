#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gate/ad.hpp"
#include "gate/params.hpp"

namespace gate {

/// Piecewise log-linear map from capability (eFLOP) to the automatable task
/// fraction, optionally plateauing at zeta.
struct AutomationFunction {
    double fInit = 0.1;
    double Tagi = 3.1622776601683794e36;
    double deltaFlop = 4.5;
    double zeta = 1.0;

    /// Capability at which automation starts to rise above fInit.
    double onset() const { return Tagi / std::pow(10.0, deltaFlop); }
    /// Largest value the function attains.
    double sup() const { return std::min(zeta, 1.0); }

    bool operator==(const AutomationFunction&) const = default;
};

AutomationFunction automation_function(const ParameterSet& p, double zeta = 1.0);

template <class T>
T fraction_automatable(const AutomationFunction& af, const T& capability) {
    using std::log10;
    const double lo = std::log10(af.Tagi) - af.deltaFlop;
    if (!(value_of(capability) > 0.0)) return T(af.fInit);
    const T lc = log10(capability);
    if (value_of(lc) <= lo) return T(af.fInit);
    const T ramp = af.fInit + (1.0 - af.fInit) * (lc - lo) / af.deltaFlop;
    return smin(ramp, T(af.sup()));
}

/// Smallest capability reaching task index i: 0 below (and at) fInit, the
/// ramp inverse up to sup(), +infinity above it.
template <class T>
T inverse_automation(const AutomationFunction& af, const T& i) {
    using std::pow;
    const double iv = value_of(i);
    if (iv <= af.fInit) return T(0.0);
    if (iv > af.sup()) return T(std::numeric_limits<double>::infinity());
    const double lo = std::log10(af.Tagi) - af.deltaFlop;
    return pow(10.0, lo + af.deltaFlop * (i - af.fInit) / (1.0 - af.fInit));
}

/// C_{T+iota} = CT * iota^(1/m).
template <class T>
T capability_with_inference(const T& CT, double iota, double m) {
    return CT * std::pow(iota, 1.0 / m);
}

class InfeasibleTask : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Runtime compute per digital worker on task i (eFLOP/year).
template <class T>
T runtime_requirement(const T& i, const T& CT, const AutomationFunction& af, double gamma0, double gamma1,
                      double m, double iotaMax) {
    using std::pow;
    const T need = inverse_automation(af, i);
    const double ratio = value_of(need) / value_of(CT);
    if (!std::isfinite(ratio) || ratio > std::pow(iotaMax, 1.0 / m) * (1.0 + 1e-12))
        throw InfeasibleTask("task index beyond the automatable fraction");
    const T base = pow(10.0, gamma0 + gamma1 * i);
    if (ratio <= 1.0) return base;
    return pow(need / CT, m) * base;
}

template <class T>
T digital_workers(const T& CI, const T& R) {
    return CI / R;
}

/// Planner beliefs over a family of automation functions differing only in
/// their plateau. Candidates are kept sorted by zeta.
struct BeliefState {
    std::vector<AutomationFunction> candidates;
    std::vector<double> prior;
    std::vector<bool> surviving;

    /// Prior renormalised over surviving candidates; zero elsewhere.
    std::vector<double> probs() const;
    std::size_t survivor_count() const;
    bool operator==(const BeliefState&) const = default;
};

BeliefState initial_beliefs(const ParameterSet& p);

/// Eliminates candidates whose prediction at `capability` differs from the
/// observed fraction. Throws if nothing survives.
BeliefState update_beliefs(const BeliefState& b, double capability, double fObserved, double tol = 1e-12);

/// Worker-grid and labor-grid nodes at bin midpoints with uniform weights.
struct TaskGrid {
    std::vector<double> workerNodes;
    std::vector<double> laborNodes;
    std::vector<double> laborWeights;

    static TaskGrid make(int workers, int labor);
    static TaskGrid make(const ParameterSet& p) { return make(p.taskGridWorkers, p.taskGridLabor); }
};

} // namespace gate
