#include "gate/automation.hpp"

#include <numeric>

namespace gate {

AutomationFunction automation_function(const ParameterSet& p, double zeta) {
    AutomationFunction af;
    af.fInit = p.fInit;
    af.Tagi = p.Tagi;
    af.deltaFlop = p.delta_flop();
    af.zeta = zeta;
    return af;
}

std::vector<double> BeliefState::probs() const {
    double total = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i)
        if (surviving[i]) total += prior[i];
    std::vector<double> out(prior.size(), 0.0);
    if (total <= 0.0) return out;
    for (std::size_t i = 0; i < prior.size(); ++i)
        if (surviving[i]) out[i] = prior[i] / total;
    return out;
}

std::size_t BeliefState::survivor_count() const {
    return static_cast<std::size_t>(std::count(surviving.begin(), surviving.end(), true));
}

BeliefState initial_beliefs(const ParameterSet& p) {
    std::vector<BeliefEntry> spec = p.beliefSpec;
    std::stable_sort(spec.begin(), spec.end(),
                     [](const BeliefEntry& a, const BeliefEntry& b) { return a.zeta < b.zeta; });
    BeliefState b;
    for (const auto& e : spec) {
        b.candidates.push_back(automation_function(p, e.zeta));
        b.prior.push_back(e.prob);
        b.surviving.push_back(true);
    }
    return b;
}

BeliefState update_beliefs(const BeliefState& b, double capability, double fObserved, double tol) {
    BeliefState out = b;
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
        if (!out.surviving[i]) continue;
        const double predicted = fraction_automatable(out.candidates[i], capability);
        if (std::abs(predicted - fObserved) > tol) out.surviving[i] = false;
    }
    if (out.survivor_count() == 0) throw std::runtime_error("update_beliefs: every candidate was eliminated");
    return out;
}

TaskGrid TaskGrid::make(int workers, int labor) {
    if (workers <= 0 || labor <= 0) throw std::invalid_argument("task grid sizes must be positive");
    TaskGrid g;
    for (int j = 0; j < workers; ++j) g.workerNodes.push_back((j + 0.5) / workers);
    for (int k = 0; k < labor; ++k) g.laborNodes.push_back((k + 0.5) / labor);
    g.laborWeights.assign(static_cast<std::size_t>(labor), 1.0 / labor);
    return g;
}

} // namespace gate
