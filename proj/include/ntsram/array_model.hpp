#pragma once

// Column and block composition: cells-per-bitline feasibility, shared-rail
// hazards (sneaky current, half-select), the read-then-write-back row write,
// and the block-level area/power/delay comparison.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ntsram/cells.hpp"
#include "ntsram/characterization.hpp"
#include "ntsram/variation.hpp"

namespace ntsram {

// ---------------------------------------------------------------- cells per bitline

struct BitlineCapacity {
    std::int64_t n = 0;    // power-of-two option actually used; 0 when infeasible
    std::int64_t raw = 0;  // largest n with ion >= k (n - 1) ioff
    double slack = 0.0;    // ion / (k (n - 1) ioff) at n; infinite for n = 1
    std::string diagnostic;
};

/// Largest column height whose selected-cell current still exceeds k times
/// the summed leakage of the other cells, clamped down to a power of two.
BitlineCapacity max_cells_per_bitline(double ion_ioff_ratio, double k = 1.0);
BitlineCapacity max_cells_per_bitline(const ReadPathMetrics& metrics, double k = 1.0);

// ---------------------------------------------------------------- sneaky current

enum class SneakyCase { Case1, Case2 };
std::string to_string(SneakyCase c);

/// Column used for the shared-rail write-power scenario. Case 1 stores 0 on
/// the right node of every unselected cell, which opens a path from the
/// floated shared rail through their pull-ups; case 2 stores the complement.
struct SneakyFixture {
    CellDescriptor cell;
    int cells = 65;
    double bitline_cap = 0.05e-15;  // per cell [F]
    ColumnOptions options;
    /// Upper bound on the time step. The selected cell snaps within a single
    /// 0.5 ns step, and the charge drawn from the shared rail during the snap
    /// then depends on the step grid (up to 2x at 0.5 ns, within 5% below 0.05 ns).
    double max_dt = 0.05e-9;
};

SneakyFixture default_sneaky_fixture();

/// Average power of a write-0 into row 0 of the fixture column.
double sneaky_current_power(RailArch arch, SneakyCase c, double vdd, const SneakyFixture& fixture = default_sneaky_fixture(),
                            const OpTiming& timing = {}, const SolverOptions& opts = {});

// ---------------------------------------------------------------- half select

struct HalfSelectResult {
    RailArch arch = RailArch::B;
    double vdd = 0.0;
    int column_cells = 0;
    McDistribution half_selected;  // hold SNM, WL = 0, shared rail floated
    McDistribution not_selected;   // hold SNM, WL = 0, powered
};

/// Hold SNM of an unselected cell whose shared rail is floated by a write
/// elsewhere in the column, against the same cell with its rail powered.
/// The floated rail is an ideal open; the cell observed is row 1 of a
/// `column_cells` column storing an alternating pattern.
HalfSelectResult half_select_analysis(RailArch arch, CellKind kind, double vdd, const VariationSpec& spec,
                                      const McOptions& mc, int column_cells = 4);

nlohmann::json to_json(const HalfSelectResult& r);

// ---------------------------------------------------------------- write-back

/// One row of cells in separate columns: word-lines and the virtual-rail
/// switches are shared, bitlines are per column. Cell j lives under "c<j>.";
/// its bitlines are "c<j>.WBL", "c<j>.RBL" driven by "Vc<j>.WBL", ...
Netlist compose_row(const CellDescriptor& cell, const std::vector<bool>& pattern);

struct WritebackOptions {
    bool scheme_enabled = true;
    double bystander_level = 0.0;  // bystander write-bitline level when the scheme is off [V]
    OpTiming timing;
    SolverOptions solver;
};

struct WritebackResult {
    std::vector<bool> before;
    std::vector<bool> readback;
    std::vector<bool> after;
    int addr = 0;
    bool data = false;
    bool pass = false;
    std::vector<int> disturbed;  // bystander columns whose bit changed
    std::vector<std::string> transcript;
};

/// Read the whole row, drive every untargeted write bitline with its read-back
/// value, then write `data` into column `addr` with the row rails floated.
/// The final state comes from a DC solve in hold configuration.
WritebackResult write_with_writeback(const CellDescriptor& cell, const std::vector<bool>& row, int addr, bool data,
                                     double vdd, const WritebackOptions& opts = {});

nlohmann::json to_json(const WritebackResult& r);

struct WritebackCampaign {
    int trials = 0;
    int passes = 0;
    int bystander_flips = 0;  // summed over trials
    std::vector<WritebackResult> results;
};

/// `trials` random (row pattern, address, data) writes into a `width`-column
/// row. Trial draws come from a 64-bit Mersenne twister seeded with `seed`.
WritebackCampaign writeback_campaign(const CellDescriptor& cell, double vdd, int trials, int width,
                                     std::uint64_t seed, const WritebackOptions& opts = {});

nlohmann::json to_json(const WritebackCampaign& c);

// ---------------------------------------------------------------- block model

/// Layout area of a single cell [um^2].
double cell_area_um2(CellKind kind);

struct BlockConfig {
    CellKind kind = CellKind::WRE9T;
    std::int64_t total_bits = 256 * 1024;
    std::int64_t cells_per_bitline = 1024;
    double cell_area = 3.72;         // [um^2]
    double col_periphery = 0.0;      // per column [um^2]
    double row_periphery = 0.0;      // per row [um^2]
    double bitline_cap_per_cell = 0.5e-15;  // [F]
    int active_columns = 1;          // columns switching per access
    double vdd = 0.5;
    double temp_kelvin = 300.0;
    double cycle = 100e-9;

    std::int64_t columns() const { return total_bits / cells_per_bitline; }
    std::int64_t rows() const { return cells_per_bitline; }
    void validate() const;  // throws std::invalid_argument
};

/// Defaults for `kind`: layout cell area and a per-column periphery fitted
/// so that the two reference 256 kb blocks (1.18 and 0.86 mm^2) come out at
/// those areas.
BlockConfig default_block_config(CellKind kind, std::int64_t cells_per_bitline);

/// Column height of the reference 256 kb organizations: 1024 for
/// single-ended-write cells, 64 for differential ones.
std::int64_t reference_cells_per_bitline(CellKind kind);

/// Block area [mm^2].
double block_area(const BlockConfig& cfg);

struct AreaOverhead {
    double cell = 0.0;   // (areaA - areaB) / areaB
    double block = 0.0;
};

AreaOverhead area_overhead(const BlockConfig& a, const BlockConfig& b);

struct BlockMetrics {
    double read_power = 0.0;   // [W] per read operation cycle
    double write_power = 0.0;  // [W] per write operation cycle (mean of both polarities)
    double read_delay = 0.0;   // [s] word-line assertion to 50 mV development
    double write_delay = 0.0;  // [s] word-line assertion to Q = QB
    double area = 0.0;         // [mm^2]
    double cell_leakage = 0.0; // [W]
};

/// Simulates one active column as a single cell on an n-cell bitline and
/// scales to the block: active columns switch, every other cell leaks.
BlockMetrics evaluate_block(const BlockConfig& cfg, const SolverOptions& opts = {});

/// Relative reduction 1 - a / b.
double reduction(double a, double b);

struct BlockComparisonRow {
    std::string metric;
    double a = 0.0;
    double b = 0.0;
    double change = 0.0;     // (a - b) / b
    double log_ratio = 0.0;  // log10(a / b); antisymmetric under a <-> b
};

struct BlockReport {
    BlockConfig a;
    BlockConfig b;
    BlockMetrics metrics_a;
    BlockMetrics metrics_b;
    std::vector<BlockComparisonRow> rows;
};

BlockReport compare_blocks(const BlockConfig& a, const BlockMetrics& ma, const BlockConfig& b, const BlockMetrics& mb);
BlockReport block_report(const BlockConfig& a, const BlockConfig& b, const SolverOptions& opts = {});

nlohmann::json to_json(const BlockConfig& c);
nlohmann::json to_json(const BlockMetrics& m);
nlohmann::json to_json(const BlockReport& r);
std::string to_markdown(const BlockReport& r);
std::string to_csv(const BlockReport& r);

// ---------------------------------------------------------------- column scenarios

/// Declarative column description, one `key = value` per line, '#' comments:
/// cell, n, arch, pattern (string of 0/1, repeated to length n), selected,
/// vdd, temp (kelvin), bitline_cap (per cell, farads).
struct ColumnScenario {
    CellKind kind = CellKind::WRE9T;
    int n = 8;
    RailArch arch = RailArch::C;
    std::vector<bool> pattern;
    int selected = 0;
    double vdd = 0.5;
    double temp_kelvin = 300.0;
    double bitline_cap = 0.5e-15;
};

ColumnScenario parse_column_scenario(const std::string& text);
ColumnScenario load_column_scenario(const std::string& path);
Dut make_scenario_dut(const ColumnScenario& s);

}  // namespace ntsram
