#pragma once

// Nodal circuit solver: DC operating point, DC sweep and backward-Euler
// transient over a Netlist of compact-model MOSFETs, independent voltage
// sources and linear capacitors.

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntsram/netlist.hpp"

namespace ntsram {

struct SolverOptions {
    double abstol = 1e-12;       // KCL residual [A]
    double reltol = 1e-3;
    double vntol = 1e-6;         // [V]
    double max_step = 0.25;      // per-node Newton step limit [V]
    int max_iterations = 150;
    double gmin_start = 1e-3;    // first shunt conductance of the continuation ramp [S]
    double gmin_floor = 1e-12;   // last nonzero shunt before the final gmin = 0 solve [S]
    std::optional<double> temp_kelvin;  // overrides the netlist .temp when set
};

/// DC levels that replace the value of named sources for one solve.
using SourceOverrides = std::map<std::string, double>;

struct OperatingPoint {
    std::map<std::string, double> voltages;
    /// MOS: current into the drain. Voltage source: current delivered into
    /// the circuit from the + terminal.
    std::map<std::string, double> currents;
    int iterations = 0;
    double residual = 0.0;   // max KCL residual at the accepted solution [A]
    std::string method;      // "newton", "gmin", "source", ...

    double v(const std::string& node) const;
    double i(const std::string& instance) const;
};

struct SweepResult {
    std::string source;
    std::vector<double> values;
    std::vector<std::string> observe;
    std::vector<std::vector<double>> samples;  // samples[k][j]: node observe[j] at values[k]
    std::vector<int> flips;                    // indices k where a bistable flip occurred

    std::vector<double> series(const std::string& node) const;
};

struct Waveform {
    std::vector<double> time;
    std::vector<std::string> observe;
    std::vector<std::vector<double>> voltages;        // voltages[j][k]: node observe[j] at time[k]
    std::map<std::string, std::vector<double>> source_currents;  // delivered, per source

    const std::vector<double>& series(const std::string& node) const;
    double final_value(const std::string& node) const { return series(node).back(); }
};

enum class SolverErrorKind { NonConvergence, Singular, MissingCapacitance, InvalidArgument };

class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrorKind kind, const std::string& what, double best_residual = 0.0,
                double time = -1.0)
        : std::runtime_error(what), kind_(kind), best_residual_(best_residual), time_(time) {}

    SolverErrorKind kind() const { return kind_; }
    double best_residual() const { return best_residual_; }
    /// Simulation time of a transient failure; negative for DC.
    double time() const { return time_; }

private:
    SolverErrorKind kind_;
    double best_residual_;
    double time_;
};

/// `.ic` entries act as a nodeset: the circuit is solved with those nodes
/// pinned and then released from that state, which selects the branch of a
/// bistable circuit.
OperatingPoint dc_operating_point(const Netlist& n, const SourceOverrides& overrides = {},
                                  const SolverOptions& opts = {});

/// Sweep a source from `from` to `to` in `steps` points (direction follows
/// the order of the two values). Each point starts from the previous solution.
SweepResult dc_sweep(const Netlist& n, const std::string& source, double from, double to,
                     int steps, const std::vector<std::string>& observe,
                     const SolverOptions& opts = {});

/// Backward Euler with a fixed step, refined locally to land on PWL
/// breakpoints. The t = 0 point is the DC solution with `.ic` nodes pinned;
/// the pins are released for t > 0. Empty `observe` records every node.
Waveform transient(const Netlist& n, double tstop, double dt,
                   const std::vector<std::string>& observe = {}, const SolverOptions& opts = {});

/// Temperature used for a netlist: opts override, else .temp, else 300 K.
double simulation_temperature(const Netlist& n, const SolverOptions& opts);

void write_csv(std::ostream& os, const SweepResult& sweep);
void write_csv(std::ostream& os, const Waveform& wave);

}  // namespace ntsram
