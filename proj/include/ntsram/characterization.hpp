#pragma once

// Single-cell and column metrics: noise margins, read-path Ion/Ioff,
// stacked-leakage closed forms and their numeric oracle, leakage and
// operation power, dynamic pass/fail checks and bitline decay.

#include <string>
#include <vector>

#include "json.hpp"

#include "ntsram/cells.hpp"
#include "ntsram/netlist.hpp"
#include "ntsram/solver.hpp"

namespace ntsram {

/// A netlist together with the names of its cell ports. Generated netlists
/// drive every port through a source named "V<port>" and the supply through
/// "VVDD"; all source levels are either 0 or VDD.
struct Dut {
    Netlist netlist;
    CellPorts ports;
    CellKind kind = CellKind::Conv6T;
    std::string label;
};

Dut make_dut(const CellDescriptor& desc);
Dut make_column_dut(const CellDescriptor& desc, int n, const std::vector<bool>& pattern, RailArch arch,
                    double bitline_cap, const ColumnOptions& opts = {});

/// Wrap a user netlist. Ports are recognized by their canonical node names
/// (WL, BL, BLB, WWL, WBL, RWL or RWLB, RBL, Q, QB, Qc, VDDC, GNDC, SN); the
/// supply must be driven by "VVDD" and each port by "V<port>".
Dut make_netlist_dut(Netlist n, std::string label);

/// Supply level of a netlist (the DC value of VVDD).
double supply_of(const Netlist& n);

/// Rescale every source level and initial condition from the current supply
/// to `vdd`.
void retarget_supply(Netlist& n, double vdd);

// ---------------------------------------------------------------- noise margins

enum class SnmMode { Hold, Read, Write };
std::string to_string(SnmMode mode);

struct Curve {
    std::vector<double> x;  // Q
    std::vector<double> y;  // QB
};

struct SnmResult {
    SnmMode mode = SnmMode::Hold;
    double lobe1 = 0.0;  // lobe on the Q-high side [V]
    double lobe2 = 0.0;  // lobe on the Q-low side [V]
    double snm = 0.0;
    bool collapsed = false;
    Curve vtc_qb_of_q;  // QB response to a forced Q
    Curve vtc_q_of_qb;  // Q response to a forced QB
};

struct SnmOptions {
    double step = 1e-3;  // sweep resolution [V]
    SolverOptions solver;
};

/// Largest-square static noise margin of the butterfly formed by the two
/// open-loop transfer curves. Hold and read configure the word-lines; any
/// other source settings of `dut` (for example floated rails) are kept.
SnmResult snm(const Dut& dut, SnmMode mode, double vdd, const SnmOptions& opts = {});

/// Lobe analysis of a butterfly given as two curves in the (Q, QB) plane.
/// Exposed for testing.
SnmResult butterfly_margins(const Curve& qb_of_q, const Curve& q_of_qb, SnmMode mode);

struct WnmResult {
    double write0 = 0.0;  // margin writing Q = 0 [V]
    double write1 = 0.0;
    double wnm = 0.0;     // min of the two; <= 0 means the write leaves the cell bistable
};

/// Write noise margin: write word-line asserted, write bitline(s) forcing the
/// opposite value and virtual rails floated. Positive when the written cell
/// is monostable. `assert_wordline = false` evaluates the same configuration
/// with the access devices off.
WnmResult wnm(const Dut& dut, double vdd, const SnmOptions& opts = {}, bool assert_wordline = true);

/// Signed write margin of one write-mode butterfly; `target_q_high` names
/// the value being written. Exposed for testing.
double write_margin(const Curve& qb_of_q, const Curve& q_of_qb, bool target_q_high, double vdd);

// ---------------------------------------------------------------- read path

struct ReadPathMetrics {
    double ion = 0.0;
    double ioff = 0.0;
    double ratio = 0.0;
    double vdd = 0.0;
    double temp = 300.0;
};

/// Ion: selected cell storing the discharge-enabling value, bitline at VDD.
/// Ioff: worst bitline current of an unselected cell over the stored values.
ReadPathMetrics ion_ioff(const Dut& dut, double vdd, double temp_kelvin, const SolverOptions& opts = {});

// ---------------------------------------------------------------- stacked leakage

/// Gate states from top (drain at VDD) to bottom (source at ground); true = ON.
std::vector<bool> stacked_gate_pattern(int n_stack, int n_on);

/// Closed-form worst-case stack current (W/L)·Is·10^((-VT + c·VDD)/S) for
/// (n_stack, n_on) in {(2,1), (3,1), (3,2)}.
double stacked_leakage_closed_form(int n_stack, int n_on, const DeviceParams& p, double vdd);

/// Coefficient c of VDD in the closed-form exponent.
double stacked_leakage_coefficient(int n_stack, int n_on, double lambda);

struct StackSolution {
    double current = 0.0;
    std::vector<double> node_voltages;  // intermediate nodes, top to bottom
    std::vector<bool> gates_on;
    /// True when every device has VDS >= 50 mV, the region where the
    /// drain-factor-free current law holds.
    bool in_validity_region = true;
};

/// Current-continuity solution of the stack under the drain-factor-free
/// current law (VSB = 0, room temperature).
StackSolution stacked_leakage_numeric(int n_stack, int n_on, const DeviceParams& p, double vdd);
StackSolution stacked_leakage_numeric(const std::vector<bool>& gates_on, const DeviceParams& p, double vdd);

// ---------------------------------------------------------------- power

struct LeakageResult {
    double stored0 = 0.0;  // [W]
    double stored1 = 0.0;
    double worst = 0.0;
};

/// Static power sum V·I over all sources at the hold operating point.
LeakageResult leakage_power(const Dut& dut, double vdd, double temp_kelvin, const SolverOptions& opts = {});

enum class Operation { Write0, Write1, Read, Access, Hold, Retention };
std::string to_string(Operation op);
Operation parse_operation(const std::string& text);

struct OpTiming {
    double cycle = 100e-9;
    double dt = 0.5e-9;
};

struct OpCheckResult {
    Operation op = Operation::Hold;
    bool pass = false;
    double margin = 0.0;       // signed distance to the nearest criterion [V]
    double q_end = 0.0;
    double qb_end = 0.0;
    double development = 0.0;  // read: bitline separation at cycle end [V]
    double power = 0.0;        // average supplied power over the cycle [W]
};

/// Netlist with the one-cycle stimulus for `op` applied to the selected cell.
Netlist operation_netlist(const Dut& dut, Operation op, double vdd, const OpTiming& timing);

/// Simulate one cycle and evaluate the dynamic criteria at its end: writes
/// need the target node >= 0.9·VDD and the complement <= 0.1·VDD, reads keep
/// the state in those bands, access needs 50 mV bitline development, hold and
/// retention keep the state. Retention is evaluated at the DC limit.
OpCheckResult dynamic_op_check(const Dut& dut, Operation op, double vdd, const OpTiming& timing = {},
                               const SolverOptions& opts = {});

/// Average power over one operation cycle. Write0/Write1 as named; use
/// operation_power_write() for the two-polarity average.
double operation_power(const Dut& dut, Operation op, double vdd, const OpTiming& timing = {},
                       const SolverOptions& opts = {});
double operation_power_write(const Dut& dut, double vdd, const OpTiming& timing = {},
                             const SolverOptions& opts = {});

/// Average of max(V·I, 0) summed over sources, across a waveform.
double average_supplied_power(const Netlist& n, const Waveform& w);

// ---------------------------------------------------------------- bitline decay

struct DecayResult {
    Waveform wave;
    std::string bitline;
    double droop = 0.0;  // VDD - V(bitline) at window end [V]
};

/// Release the precharged read bitline of a column whose selected cell holds
/// the should-not-discharge value, assert the read word-line at t = 0 and
/// record the bitline over `window`.
DecayResult bitline_decay(const Dut& column, double vdd, double window, double dt = 0.5e-9,
                          const SolverOptions& opts = {});

/// Name of the bitline that the selected cell must not discharge.
std::string hold_high_bitline(const CellPorts& ports);

// ---------------------------------------------------------------- records

nlohmann::json to_json(const SnmResult& r, bool with_curves = false);
nlohmann::json to_json(const WnmResult& r);
nlohmann::json to_json(const ReadPathMetrics& r);
nlohmann::json to_json(const LeakageResult& r);
nlohmann::json to_json(const OpCheckResult& r);

/// {metric, cell, vdd, temp, value(s), settings}
nlohmann::json metric_record(const std::string& metric, const std::string& cell, double vdd, double temp,
                             nlohmann::json values, nlohmann::json settings = nlohmann::json::object());

}  // namespace ntsram
