#pragma once

#include <cmath>
#include <stdexcept>

#include "gate/ad.hpp"
#include "gate/params.hpp"

namespace gate {

/// Heat-capped usable compute g(Q) = Q / (Q/CL + 1).
template <class T>
T usable_compute(const T& Q, double CL) {
    return Q / (Q / CL + 1.0);
}

/// Inverse of usable_compute: the physical stock whose usable part is x.
inline double physical_compute_for(double usable, double CL) {
    if (!(usable >= 0.0) || usable >= CL) throw std::domain_error("usable compute must lie in [0, CL)");
    return usable / (1.0 - usable / CL);
}

/// Spending needed to add I_q to the compute stock (forward adjustment cost).
inline double compute_investment_cost(double Iq, double Q, double H, double aQ, double chi) {
    const double x = aQ * Iq * H / Q;
    return Q / (chi * aQ * H) * std::expm1(chi * std::log1p(x));
}

/// Effective compute investment I_q bought by spending I_Q.
template <class T>
T compute_effective_investment(const T& IQ, const T& Q, const T& H, double aQ, double chi) {
    using std::expm1;
    using std::log1p;
    if (value_of(IQ) < 0.0 || !(value_of(Q) > 0.0) || !(value_of(H) > 0.0) || !(aQ > 0.0) || !(chi > 1.0))
        throw std::domain_error("compute_effective_investment: invalid arguments");
    const T x = chi * aQ * H * IQ / Q;
    return Q / (aQ * H) * expm1(log1p(x) / chi);
}

/// Spending needed for capital investment I_k: I_k + aK I_k^2 / (2K).
inline double capital_investment_cost(double Ik, double K, double aK) {
    return Ik + aK * Ik * Ik / (2.0 * K);
}

/// Unconstrained efficiency growth rate theta * level^-phi * (I/xi)^lambda.
template <class T>
T efficiency_growth_rate(const T& level, const T& I, double theta, double phi, double lambda,
                         double xi = 1.0) {
    using std::pow;
    return theta * pow(level, -phi) * pow(I / xi, lambda);
}

/// Ceiling factor Lambda(level) in [0, 1].
template <class T>
T ceiling_factor(const T& level, double init, double max) {
    using std::log;
    return (std::log(max) - log(level)) / (std::log(max) - std::log(init));
}

/// Constrained growth rate g * Lambda(level).
template <class T>
T constrained_growth_rate(const T& level, const T& I, double theta, double phi, double lambda,
                          double init, double max, double xi = 1.0) {
    return efficiency_growth_rate(level, I, theta, phi, lambda, xi) * ceiling_factor(level, init, max);
}

/// One step of d(ln level)/dt = g Lambda(level), integrated exactly in
/// log space with g held at its start-of-step value. The distance to the
/// ceiling shrinks by exp(-g dt / (ln max - ln init)), so the ceiling is
/// never reached.
template <class T>
T step_efficiency_unchecked(const T& level, const T& I, double theta, double phi, double lambda,
                            double init, double max, double dt, double xi = 1.0) {
    using std::exp;
    using std::expm1;
    using std::log;
    const double span = std::log(max) - std::log(init);
    const T g = efficiency_growth_rate(level, I, theta, phi, lambda, xi);
    const T gap = std::log(max) - log(level);
    return level * exp(-gap * expm1(-g * dt / span));
}

double step_efficiency(double level, double I, double theta, double phi, double lambda, double init,
                       double max, double dt, double xi = 1.0);

template <class T>
struct ComputeStateT {
    T Q;  // FLOP/year
    T H;  // FLOP/year/$
    T S;  // eFLOP/FLOP
    T C;  // eFLOP/year
    T CT; // eFLOP
};
using ComputeState = ComputeStateT<double>;

/// Period-0 compute state: C(0) = CI0 + CT0 and Q from the stock identity.
ComputeState initial_compute_state(const ParameterSet& p);

/// Advances the compute block by one step: efficiencies, physical stock,
/// stock identity, then the training run. D is the training compute spent
/// over the step (eFLOP). xi scales the perceived R&D input.
template <class T>
ComputeStateT<T> step_compute_state_t(const ComputeStateT<T>& s, const T& IQ, const T& IH, const T& IS,
                                      const T& D, const ParameterSet& p, double dt, double xi = 1.0) {
    if (value_of(IQ) < 0.0 || value_of(IH) < 0.0 || value_of(IS) < 0.0 || value_of(D) < 0.0)
        throw std::domain_error("step_compute_state: negative flow");
    ComputeStateT<T> n;
    n.H = step_efficiency_unchecked(s.H, IH, p.thetaH, p.phiH, p.lambdaH, p.H0, p.Hmax, dt, xi);
    n.S = step_efficiency_unchecked(s.S, IS, p.thetaS, p.phiS, p.lambdaS, p.S0, p.Smax, dt, xi);
    const T Iq = compute_effective_investment(IQ, s.Q, n.H, p.aQ, p.chi);
    n.Q = s.Q + (Iq * n.H - p.deltaQ * s.Q) * dt;
    n.C = usable_compute(n.Q, p.CL) * n.S;
    n.CT = s.CT + D;
    return n;
}

ComputeState step_compute_state(const ComputeState& s, double IQ, double IH, double IS, double D,
                                const ParameterSet& p, double dt, double xi = 1.0);

} // namespace gate
