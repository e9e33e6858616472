#include "gate/ai_development.hpp"

namespace gate {

double step_efficiency(double level, double I, double theta, double phi, double lambda, double init,
                       double max, double dt, double xi) {
    if (!(level < max)) throw std::domain_error("step_efficiency: level at or above its ceiling");
    if (!(level > 0.0) || I < 0.0 || !(dt > 0.0) || !(xi > 0.0))
        throw std::domain_error("step_efficiency: invalid arguments");
    return step_efficiency_unchecked(level, I, theta, phi, lambda, init, max, dt, xi);
}

ComputeState initial_compute_state(const ParameterSet& p) {
    ComputeState s;
    s.S = p.S0;
    s.H = p.H0;
    s.C = p.CI0 + p.CT0;
    s.Q = physical_compute_for(s.C / s.S, p.CL);
    s.CT = p.CT0;
    return s;
}

ComputeState step_compute_state(const ComputeState& s, double IQ, double IH, double IS, double D,
                                const ParameterSet& p, double dt, double xi) {
    return step_compute_state_t<double>(s, IQ, IH, IS, D, p, dt, xi);
}

} // namespace gate
