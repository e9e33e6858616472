#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gate {

enum class LaborMode { PerfectReallocation, NoReallocation };

/// One candidate automation function in the planner's beliefs: plateau level
/// zeta and its prior probability.
struct BeliefEntry {
    double zeta = 1.0;
    double prob = 1.0;

    bool operator==(const BeliefEntry&) const = default;
};

/// All exogenous constants of the model. Units follow the field comments;
/// "currency" is real USD.
struct ParameterSet {
    // General economics
    double Y0 = 110e12;   // $/year, initial gross world product
    double L0 = 3.6e9;    // workers
    double gL = 0.0025;   // 1/year
    double K0 = 450e12;   // $
    double alpha = 0.35;
    double mu = 0.0;
    double F0 = 1e12;     // non-accumulable stock
    double aK = 1.0;      // years
    double deltaK = 0.065;
    double rho = -0.65;
    double beta = 0.05;
    double eta = 1.45;

    // Hardware R&D
    double H0 = 1e18;     // FLOP/year/$
    double Hmax = 1e23;
    double IH0 = 1e11;    // $/year
    double lambdaH = 0.14;
    double phiH = 0.0769;
    double thetaH = 0.192;

    // Software R&D
    double S0 = 1.0;      // eFLOP/FLOP
    double Smax = 1e4;
    double IS0 = 5e9;
    double lambdaS = 0.14;
    double phiS = 0.32;
    double thetaS = 0.0307;

    // Compute investment and stock
    double IQ0 = 2e11;    // $/year
    double chi = 4.0;
    double aQ = 2.0;      // years
    double deltaQ = 0.3;  // 1/year
    double CT0 = 5e25;    // eFLOP
    double CL = 2e38;     // FLOP/year

    // Runtime compute
    double CI0 = 1e28;    // eFLOP/year
    double gamma0 = 15.0; // log10 FLOP/year
    double gamma1 = 9.0;  // OOMs across the task index
    double m = 2.0;
    double iotaMax = 1e5;

    // Automation
    double Tagi = 3.1622776601683794e36; // 10^36.5 eFLOP
    double fInit = 0.1;
    double flopGapFraction = 0.55;

    // Add-ons
    double xi = 8.0;
    std::vector<BeliefEntry> beliefSpec{{1.0, 1.0}};
    LaborMode laborMode = LaborMode::PerfectReallocation;

    // Horizons and discretisation
    int tauPlan = 80;     // years
    int tauOptim = 160;   // years
    int taskGridWorkers = 20;
    int taskGridLabor = 100;
    double dt = 1.0;      // years

    bool operator==(const ParameterSet&) const = default;

    /// Number of simulated periods over the optimisation horizon.
    int optim_steps() const;
    /// Number of reported periods.
    int plan_steps() const;
    /// FLOP gap in orders of magnitude derived from flopGapFraction.
    double delta_flop() const;
};

enum class ValidationMode { Strict, Permissive };

struct Violation {
    std::string field;
    std::string message;
};

/// Default calibration.
ParameterSet default_preset();
/// Defaults with a 20-year plan and 40-year optimisation horizon.
ParameterSet desk_preset();
/// Named preset lookup ("default", "desk"); nullopt when unknown.
std::optional<ParameterSet> preset(std::string_view name);
std::vector<std::string> preset_names();

std::vector<Violation> validate(const ParameterSet& p, ValidationMode mode);

/// Scalar field metadata, used for validation, sweeps and the served schema.
struct FieldInfo {
    std::string_view name;   // snake_case document key
    std::string_view units;
    double ParameterSet::*member;
    std::optional<double> lo;
    std::optional<double> hi;
    bool logScale;
    std::string_view description;
};

std::span<const FieldInfo> scalar_fields();
const FieldInfo* find_field(std::string_view name);

/// Serialises every field. Doubles are written with full precision.
nlohmann::json to_json(const ParameterSet& p);

/// Applies a (possibly partial) document on top of `base`. Unknown keys and
/// type errors are appended to `problems` rather than thrown.
ParameterSet from_json(const nlohmann::json& doc, std::vector<Violation>& problems,
                       const ParameterSet& base = default_preset());

/// Schema document: one entry per field with units, range, default and scale.
nlohmann::json schema_json();

std::string to_string(LaborMode mode);
std::optional<LaborMode> labor_mode_from_string(std::string_view s);

} // namespace gate
