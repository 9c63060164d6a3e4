#pragma once

// Built-in bitcell topologies, read-path fixtures and column composition.
//
// Every generated netlist uses the model names "nch"/"pch", canonical port
// node names (see CellPorts) and a hold-configuration stimulus: supply and
// bitlines at VDD, word-lines inactive, storage nodes initialized with .ic.

#include <map>
#include <string>
#include <vector>

#include "ntsram/netlist.hpp"

namespace ntsram {

enum class CellKind {
    Conv6T,
    IA6T,
    WRE9T,
    WRE8T,
    ST2,
    WEN,
    ReadPathWRE9T,
    ReadPathVerlika,
    ReadPathChang,
    HailongColumn,
};

std::string to_string(CellKind kind);
/// Accepts the lowercase CLI spellings ("conv6t", "wre9t", "readpath_chang", ...).
CellKind parse_cell_kind(const std::string& text);

struct TransistorSize {
    double w = 0.2e-6;
    double l = 0.1e-6;
    bool operator==(const TransistorSize&) const = default;
};

inline constexpr const char* kNmosModel = "nch";
inline constexpr const char* kPmosModel = "pch";

struct CellDescriptor {
    CellKind kind = CellKind::Conv6T;
    std::map<std::string, TransistorSize> sizing;  // per transistor name (without "M" prefix handling)
    DeviceParams nmos;
    DeviceParams pmos;
    double vdd = 0.5;
    double node_cap = 1e-15;     // per internal node [F]
    double rail_cap = 0.5e-15;   // per virtual rail [F]
    double bitline_cap = 32e-15; // total per bitline of a single-cell netlist [F]
    double switch_aspect = 4.0;  // W/L of the virtual-rail header/footer switches
    bool stored_one = true;      // Q = VDD in the hold configuration

    /// Default sizing and the circuit-simulation model cards for `kind`.
    static CellDescriptor make(CellKind kind, double vdd = 0.5);
};

/// Canonical node names of a cell. Empty strings mark absent ports.
struct CellPorts {
    std::string wl, bl, blb;      // differential access
    std::string wwl, wbl;         // single-ended write
    std::string rwl, rbl;         // buffered read
    std::string q, qb, qc;        // storage and read-path internal nodes
    std::string vddc, gndc;       // virtual rails (empty when tied to VDD/0)
    std::string sn;               // read-path fixtures: driven storage node
    bool read_on_q_low = true;    // bitline discharges when Q = 0
};

CellPorts ports_of(CellKind kind);

/// Number of in-cell transistors (rail switches excluded).
int transistor_count(CellKind kind);

bool is_read_path_fixture(CellKind kind);
bool has_virtual_rails(CellKind kind);

/// Cell netlist in hold configuration. Throws std::invalid_argument on an
/// unsupported kind or an incomplete sizing table.
Netlist build_cell(const CellDescriptor& desc);

/// Structural checks: device count and, for WRE9T-type read paths, series
/// NMOS path length between RBL and ground and a P-type device at Qc.
/// Throws NetlistError on violation.
void check_structure(const Netlist& n, CellKind kind);

/// Length of the shortest RBL-to-ground path through N-type channels.
int series_nmos_path_length(const Netlist& n, const std::string& from, const std::string& to);

enum class RailArch { A, B, C, None };

std::string to_string(RailArch arch);
RailArch parse_rail_arch(const std::string& text);

struct ColumnOptions {
    int selected = 0;
    bool float_ground_rail = true;  // false: only the power rail is switched
    bool left_inverter_rail = false; // true: the QB-side inverter stays on VDD/ground
};

/// n cells sharing bitlines. Cell i lives under prefix "c<i>." and stores
/// pattern[i] on Q. The selected cell's word-lines and rail switches are
/// driven by sources named like the single-cell ones (VWL, VSWH, ...); the
/// other cells use "<port>U" nodes held inactive. Each bitline carries
/// n * bitline_cap. Rail switches: arch A/B one pair for the column, C one
/// pair per row, None ties the cell rails to VDD and ground.
Netlist compose_column(const CellDescriptor& cell, int n, const std::vector<bool>& pattern,
                       RailArch arch, double bitline_cap, const ColumnOptions& opts = {});

/// Node name of port `port` inside column cell `i`.
std::string column_node(int i, const std::string& port);

/// Ports of the selected cell of a composed column: shared lines keep their
/// names, storage nodes are prefixed.
CellPorts column_ports(CellKind kind, int selected);

}  // namespace ntsram
