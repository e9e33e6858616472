#include "gate/economy.hpp"

namespace gate {

double ces_composite(std::span<const double> inputs, const TaskGrid& grid, double rho) {
    return ces_composite<double>(inputs, grid.laborWeights, rho);
}

InferenceAllocation allocate_inference(double B, double CT, const AutomationFunction& af,
                                       const LaborAllocation& labor, const ParameterSet& p) {
    if (B < 0.0) throw std::domain_error("allocate_inference: negative budget");
    const double f = fraction_automatable(af, capability_with_inference(CT, p.iotaMax, p.m));
    return allocate_inference_t<double>(B, CT, af, labor, f, p);
}

PeriodAllocation period_output(const EconomyState& s, const Shares& sh, const AutomationFunction& af,
                               const ParameterSet& p, double A) {
    return period_output_t<double>(s, sh, af, p, A);
}

EconomyState initial_state(const ParameterSet& p) {
    return {initial_compute_state(p), p.K0, p.L0};
}

Shares initial_shares(const ParameterSet& p) {
    Shares s;
    s.output[kCapitalInv] = p.deltaK * p.K0 / p.Y0;
    s.output[kComputeInv] = p.IQ0 / p.Y0;
    s.output[kHardwareRD] = p.IH0 / p.Y0;
    s.output[kSoftwareRD] = p.IS0 / p.Y0;
    s.output[kConsumption] = 1.0 - s.output[1] - s.output[2] - s.output[3] - s.output[4];
    if (!(s.output[kConsumption] > 0.0)) throw std::domain_error("initial flows exceed initial output");
    const double C0 = p.CI0 + p.CT0;
    s.compute[kTraining] = p.CT0 / C0;
    s.compute[kInference] = p.CI0 / C0;
    return s;
}

double calibrate_tfp(const ParameterSet& p) {
    const AutomationFunction af = automation_function(p);
    const double f = fraction_automatable(af, capability_with_inference(p.CT0, p.iotaMax, p.m));
    const LaborAllocation labor = allocate_labor(p.L0, f, p.laborMode);
    const InferenceAllocation inf = allocate_inference_t<double>(p.CI0, p.CT0, af, labor, f, p);
    const double base = produce(1.0, inf.composite, p.K0, p.F0, p.alpha, p.mu);
    if (!(base > 0.0) || !std::isfinite(base)) throw std::domain_error("calibrate_tfp: initial output is degenerate");
    return p.Y0 / base;
}

} // namespace gate
