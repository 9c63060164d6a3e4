#pragma once

// Subthreshold-centric MOSFET compact model.
//
// Currents follow the classic leakage form
//   I = (W/L) Is 10^((VGS - VT + lambda VDS)/S) (1 - 10^(-eta VDS/S))
// with a body-effect threshold shift and a swing that scales with absolute
// temperature. All functions take canonical NMOS voltages; P-type devices are
// evaluated on mirrored voltages and return a negated current.

#include <string>

namespace ntsram {

enum class Polarity { N, P };

struct DeviceParams {
    Polarity polarity = Polarity::N;
    double vt0 = 0.3;       // zero-bias threshold magnitude [V]
    double is = 1e-7;       // specific current at W/L = 1 [A]
    double swing = 0.08;    // subthreshold swing at t_ref [V/dec]
    double lambda = 1.5;    // DIBL coefficient on VDS inside the exponent
    double eta = 1.0;       // drain coupling of the (1 - 10^(-eta VDS/S)) term
    double gamma = 0.4;     // body-effect coefficient [sqrt(V)]
    double phi_f = 0.35;    // Fermi potential magnitude [V]
    double w = 0.2e-6;      // [m]
    double l = 0.1e-6;      // [m]
    double t_ref = 300.0;   // [K]
    double is_temp_exponent = 0.0;  // Is(T) = Is (T/t_ref)^is_temp_exponent

    double aspect() const { return w / l; }

    bool operator==(const DeviceParams&) const = default;

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;
};

struct BiasPoint {
    double vgs = 0.0;
    double vds = 0.0;
    double vsb = 0.0;
    double temp = 300.0;
};

/// Current and its partial derivatives with respect to VGS, VDS and VSB.
struct CurrentEval {
    double id = 0.0;
    double d_vgs = 0.0;
    double d_vds = 0.0;
    double d_vsb = 0.0;
};

/// The parameter set quoted as "typical" for the analytic leakage
/// derivations: VT0 = 0.3 V, lambda = 1.5, S = 80 mV/dec.
DeviceParams nominal_card(Polarity polarity = Polarity::N);

/// Card used for full-circuit simulation of bitcells. Same VT0, S and Is as
/// nominal_card() but with a physical DIBL magnitude; lambda = 1.5 makes the
/// drain a stronger control terminal than the gate, which leaves
/// cross-coupled inverters with a loop gain below one.
DeviceParams circuit_card(Polarity polarity = Polarity::N);

double threshold_voltage(const DeviceParams& p, double vsb);

double swing_at_temperature(const DeviceParams& p, double temp);

/// Leakage-form current with the (1 - 10^(-eta VDS/S)) factor kept.
/// Antisymmetric in source/drain exchange.
double drain_current_full(const DeviceParams& p, const BiasPoint& b);

/// Leakage-form current without the drain-coupling factor. Only meaningful
/// for VDS >= 50 mV; throws std::domain_error below that.
double drain_current_simplified(const DeviceParams& p, const BiasPoint& b);

/// drain_current_simplified() without the validity guard. Used where the
/// formal algebra of the approximation is the object of study.
double drain_current_simplified_unchecked(const DeviceParams& p, const BiasPoint& b);

/// Smooth current valid in all regions, used by the circuit solver.
double drain_current_unified(const DeviceParams& p, const BiasPoint& b);

/// drain_current_unified() together with its analytic partial derivatives.
CurrentEval drain_current_unified_eval(const DeviceParams& p, const BiasPoint& b);

std::string to_string(Polarity p);

}  // namespace ntsram
