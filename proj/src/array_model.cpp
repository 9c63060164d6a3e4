#include "ntsram/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ntsram {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string bits_string(const std::vector<bool>& bits) {
    std::string s;
    for (bool b : bits) s += b ? '1' : '0';
    return s;
}

}  // namespace

// ---------------------------------------------------------------- cells per bitline

BitlineCapacity max_cells_per_bitline(double ratio, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("sense margin k must be > 0");
    BitlineCapacity c;
    if (std::isnan(ratio) || ratio <= k) {
        std::ostringstream os;
        os << "Ion/Ioff = " << ratio << " does not exceed the sense margin k = " << k
           << "; not even two cells can share a bitline";
        c.diagnostic = os.str();
        return c;
    }
    constexpr double kCap = 4.0e18;
    const double bound = std::min(std::floor(ratio / k) + 1.0, kCap);
    c.raw = static_cast<std::int64_t>(bound);
    c.n = 1;
    while (c.n <= c.raw / 2) c.n *= 2;
    c.slack = c.n == 1 ? std::numeric_limits<double>::infinity() : ratio / (k * static_cast<double>(c.n - 1));
    return c;
}

BitlineCapacity max_cells_per_bitline(const ReadPathMetrics& metrics, double k) {
    return max_cells_per_bitline(metrics.ratio, k);
}

// ---------------------------------------------------------------- sneaky current

std::string to_string(SneakyCase c) { return c == SneakyCase::Case1 ? "CASE1" : "CASE2"; }

SneakyFixture default_sneaky_fixture() {
    SneakyFixture f;
    f.cell = CellDescriptor::make(CellKind::Conv6T);
    // Strong inverters make the shared-rail path visible: a weak latch is
    // overwritten through its access devices before the rail moves.
    constexpr double kL = 0.1e-6;
    constexpr double kInverterAspect = 48.0;
    for (const char* name : {"PL", "PR", "NL", "NR"}) f.cell.sizing[name] = {kInverterAspect * kL, kL};
    f.cell.rail_cap = 0.2e-15;
    f.options.float_ground_rail = false;
    f.options.left_inverter_rail = true;
    return f;
}

double sneaky_current_power(RailArch arch, SneakyCase c, double vdd, const SneakyFixture& fixture,
                            const OpTiming& timing, const SolverOptions& opts) {
    if (arch == RailArch::None) throw std::invalid_argument("sneaky-current scenario needs switched rails");
    if (fixture.cells < 1) throw std::invalid_argument("sneaky-current column needs at least one cell");
    // Row 0 is written to 0 from 1. Case 1: unselected Q = 1, right node 0.
    std::vector<bool> pattern(static_cast<std::size_t>(fixture.cells), c == SneakyCase::Case1);
    pattern[0] = true;
    ColumnOptions o = fixture.options;
    o.selected = 0;
    CellDescriptor cell = fixture.cell;
    cell.vdd = vdd;
    const Dut col = make_column_dut(cell, fixture.cells, pattern, arch, fixture.bitline_cap, o);
    const OpTiming t{timing.cycle, std::min(timing.dt, fixture.max_dt)};
    return operation_power(col, Operation::Write0, vdd, t, opts);
}

// ---------------------------------------------------------------- half select

HalfSelectResult half_select_analysis(RailArch arch, CellKind kind, double vdd, const VariationSpec& spec,
                                      const McOptions& mc, int column_cells) {
    if (arch != RailArch::A && arch != RailArch::B) {
        throw std::invalid_argument("half-select analysis needs a shared rail (arch A or B)");
    }
    if (column_cells < 2) throw std::invalid_argument("half-select column needs at least two cells");
    CellDescriptor cell = CellDescriptor::make(kind, vdd);

    std::vector<bool> pattern(static_cast<std::size_t>(column_cells));
    for (int i = 0; i < column_cells; ++i) pattern[static_cast<std::size_t>(i)] = i % 2 == 1;
    Dut column = make_column_dut(cell, column_cells, pattern, arch, cell.bitline_cap / column_cells);
    // The write in row 0 turns the shared switches off; model them as open.
    column.netlist.remove("MSWH");
    if (column.netlist.find("MSWL")) column.netlist.remove("MSWL");
    column.ports.q = column_node(1, ports_of(kind).q);
    column.ports.qb = column_node(1, ports_of(kind).qb);

    SnmOptions so;
    so.step = 2e-3;
    auto hold_snm = [&](const Dut& d) { return snm(d, SnmMode::Hold, vdd, so).snm; };

    HalfSelectResult r;
    r.arch = arch;
    r.vdd = vdd;
    r.column_cells = column_cells;
    r.half_selected = mc_run(column, spec, mc, hold_snm);
    r.not_selected = mc_run(make_dut(cell), spec, mc, hold_snm);
    return r;
}

nlohmann::json to_json(const HalfSelectResult& r) {
    return {{"arch", to_string(r.arch)},
            {"vdd", r.vdd},
            {"column_cells", r.column_cells},
            {"half_selected", to_json(r.half_selected)},
            {"not_selected", to_json(r.not_selected)}};
}

// ---------------------------------------------------------------- write-back

namespace {

std::set<std::string> row_shared_nodes(const CellPorts& p) {
    std::set<std::string> s{kGround, "VDD", "VDDC", "GNDC", "SWH", "SWL", "WWLB", "RWLB"};
    for (const auto& wl : {p.wl, p.wwl, p.rwl}) {
        if (!wl.empty()) s.insert(wl);
    }
    return s;
}

// Carry the final voltage of every node not tied to a source into the
// initial conditions of `n`.
void carry_state(Netlist& n, const Waveform& w) {
    std::set<std::string> driven;
    for (const auto& inst : n.instances) {
        if (inst.kind == InstanceKind::VoltageSource) driven.insert(inst.nodes.begin(), inst.nodes.end());
    }
    n.initial_conditions.clear();
    for (std::size_t j = 0; j < w.observe.size(); ++j) {
        if (!driven.contains(w.observe[j])) n.initial_conditions[w.observe[j]] = w.voltages[j].back();
    }
}

}  // namespace

Netlist compose_row(const CellDescriptor& cell, const std::vector<bool>& pattern) {
    if (pattern.empty()) throw std::invalid_argument("compose_row: empty row");
    const CellPorts p = ports_of(cell.kind);
    if (p.wbl.empty() || p.rbl.empty()) {
        throw std::invalid_argument("compose_row: " + to_string(cell.kind) + " has no single-ended write and read bitlines");
    }
    const Netlist one = build_cell(cell);
    const auto shared = row_shared_nodes(p);
    const int m = static_cast<int>(pattern.size());

    Netlist row;
    row.models = one.models;
    row.params = one.params;
    row.temp_celsius = one.temp_celsius;
    for (int j = 0; j < m; ++j) {
        auto rename = [&](const std::string& node) { return shared.contains(node) ? node : column_node(j, node); };
        for (const auto& inst : one.instances) {
            const bool replicated =
                std::any_of(inst.nodes.begin(), inst.nodes.end(), [&](const std::string& nd) { return !shared.contains(nd); });
            if (!replicated && j > 0) continue;
            Instance copy = inst;
            if (replicated) {
                for (auto& nd : copy.nodes) nd = rename(nd);
                const char lead = inst.name.front();
                copy.name = std::string(1, lead) + column_node(j, inst.name.substr(1));
            } else if (inst.kind == InstanceKind::Capacitor) {
                copy.capacitance *= m;  // a row rail spans every cell of the row
            }
            row.instances.push_back(std::move(copy));
        }
        row.initial_conditions[column_node(j, p.q)] = pattern[static_cast<std::size_t>(j)] ? cell.vdd : 0.0;
        row.initial_conditions[column_node(j, p.qb)] = pattern[static_cast<std::size_t>(j)] ? 0.0 : cell.vdd;
    }
    row.validate();
    return row;
}

WritebackResult write_with_writeback(const CellDescriptor& cell_in, const std::vector<bool>& row_bits, int addr,
                                     bool data, double vdd, const WritebackOptions& opts) {
    const int m = static_cast<int>(row_bits.size());
    if (addr < 0 || addr >= m) throw std::invalid_argument("write-back: address out of range");
    CellDescriptor cell = cell_in;
    cell.vdd = vdd;
    const CellPorts p = ports_of(cell.kind);
    const double T = opts.timing.cycle;
    const double tr = 0.01 * T;
    auto pulse = [&](double v0, double v1, double ta, double tb) {
        return SourceValue::piecewise({{0.0, v0}, {ta, v0}, {ta + tr, v1}, {tb, v1}, {tb + tr, v0}});
    };
    const bool rwl_low = p.rwl == "RWLB";

    WritebackResult r;
    r.before = row_bits;
    r.addr = addr;
    r.data = data;
    r.transcript.push_back("row " + bits_string(row_bits) + ", write " + std::string(data ? "1" : "0") +
                           " to column " + std::to_string(addr));

    // Phase 1: read every cell of the row onto its precharged read bitline.
    Netlist read = compose_row(cell, row_bits);
    for (int j = 0; j < m; ++j) {
        const std::string rbl = column_node(j, p.rbl);
        read.remove("V" + rbl);
        read.initial_conditions[rbl] = vdd;
    }
    read.set_source("V" + p.rwl, rwl_low ? pulse(vdd, 0.0, 0.1 * T, 0.6 * T) : pulse(0.0, vdd, 0.1 * T, 0.6 * T));
    const Waveform rw = transient(read, T, opts.timing.dt, {}, opts.solver);

    // Sense just before the word-line falls: once it does, the read stack
    // reconnects the bitline to the precharged internal node.
    std::size_t sense = 0;
    while (sense + 1 < rw.time.size() && rw.time[sense + 1] <= 0.6 * T) ++sense;
    r.readback.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const bool rbl_high = rw.series(column_node(j, p.rbl))[sense] > 0.5 * vdd;
        // The bitline falls when the read stack conducts.
        r.readback[static_cast<std::size_t>(j)] = p.read_on_q_low ? rbl_high : !rbl_high;
    }
    r.transcript.push_back("read-back " + bits_string(r.readback));

    // Phase 2: write. Bystander write bitlines carry the read-back value, or a
    // constant when the scheme is disabled.
    Netlist write = compose_row(cell, row_bits);
    carry_state(write, rw);
    std::string drive;
    for (int j = 0; j < m; ++j) {
        double level = 0.0;
        if (j == addr) {
            level = data ? vdd : 0.0;
        } else if (opts.scheme_enabled) {
            level = r.readback[static_cast<std::size_t>(j)] ? vdd : 0.0;
        } else {
            level = opts.bystander_level;
        }
        write.set_source("V" + column_node(j, p.wbl), SourceValue::constant(level));
        std::ostringstream os;
        os << std::setprecision(3) << level;
        drive += (j ? " " : "") + os.str();
    }
    write.set_source("V" + p.wwl, pulse(0.0, vdd, 0.1 * T, 0.6 * T));
    if (write.find("VWWLB")) write.set_source("VWWLB", pulse(vdd, 0.0, 0.1 * T, 0.6 * T));
    if (write.find("VSWH")) write.set_source("VSWH", pulse(0.0, vdd, 0.08 * T, 0.62 * T));
    if (write.find("VSWL")) write.set_source("VSWL", pulse(vdd, 0.0, 0.08 * T, 0.62 * T));
    r.transcript.push_back(std::string("write bitlines [V]: ") + drive +
                           (opts.scheme_enabled ? "" : " (write-back disabled)"));
    const Waveform ww = transient(write, T, opts.timing.dt, {}, opts.solver);

    // Phase 3: settle in hold configuration.
    Netlist hold = compose_row(cell, row_bits);
    carry_state(hold, ww);
    const OperatingPoint op = dc_operating_point(hold, {}, opts.solver);
    r.after.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        r.after[static_cast<std::size_t>(j)] = op.v(column_node(j, p.q)) > 0.5 * vdd;
    }
    r.transcript.push_back("final " + bits_string(r.after));

    r.pass = r.after[static_cast<std::size_t>(addr)] == data;
    if (!r.pass) r.transcript.push_back("target column " + std::to_string(addr) + " not written");
    for (int j = 0; j < m; ++j) {
        if (j == addr) continue;
        if (r.readback[static_cast<std::size_t>(j)] != row_bits[static_cast<std::size_t>(j)]) {
            r.transcript.push_back("read-back error in column " + std::to_string(j));
        }
        if (r.after[static_cast<std::size_t>(j)] != row_bits[static_cast<std::size_t>(j)]) {
            r.disturbed.push_back(j);
            r.transcript.push_back("disturb failure: column " + std::to_string(j) + " flipped");
            r.pass = false;
        }
    }
    return r;
}

nlohmann::json to_json(const WritebackResult& r) {
    return {{"before", bits_string(r.before)},
            {"readback", bits_string(r.readback)},
            {"after", bits_string(r.after)},
            {"addr", r.addr},
            {"data", r.data ? 1 : 0},
            {"pass", r.pass},
            {"disturbed", r.disturbed},
            {"transcript", r.transcript}};
}

WritebackCampaign writeback_campaign(const CellDescriptor& cell, double vdd, int trials, int width,
                                     std::uint64_t seed, const WritebackOptions& opts) {
    if (trials < 0 || width < 1 || width > 64) throw std::invalid_argument("write-back campaign: bad trials or width");
    std::mt19937_64 rng(seed);
    WritebackCampaign c;
    c.trials = trials;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t bits = rng();
        const int addr = static_cast<int>(rng() % static_cast<std::uint64_t>(width));
        const bool data = (rng() & 1U) != 0;
        std::vector<bool> row(static_cast<std::size_t>(width));
        for (int j = 0; j < width; ++j) row[static_cast<std::size_t>(j)] = ((bits >> j) & 1U) != 0;
        WritebackResult r = write_with_writeback(cell, row, addr, data, vdd, opts);
        c.passes += r.pass ? 1 : 0;
        c.bystander_flips += static_cast<int>(r.disturbed.size());
        c.results.push_back(std::move(r));
    }
    return c;
}

nlohmann::json to_json(const WritebackCampaign& c) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& r : c.results) trials.push_back(to_json(r));
    return {{"trials", c.trials}, {"passes", c.passes}, {"bystander_flips", c.bystander_flips}, {"results", trials}};
}

// ---------------------------------------------------------------- block model

double cell_area_um2(CellKind kind) {
    switch (kind) {
        case CellKind::WRE9T: return 3.72;
        case CellKind::WRE8T: return 2.89;
        case CellKind::Conv6T: return 2.03;
        case CellKind::ST2: return 3.99;
        case CellKind::WEN: return 3.45;
        case CellKind::IA6T: return 3.72;
        default: break;
    }
    throw std::invalid_argument("no layout area for " + to_string(kind));
}

void BlockConfig::validate() const {
    if (cells_per_bitline < 1) throw std::invalid_argument("block: cells per bitline must be >= 1");
    if (total_bits < 1 || total_bits % cells_per_bitline != 0) {
        throw std::invalid_argument("block: total bits must be a positive multiple of cells per bitline");
    }
    if (!(cell_area > 0.0)) throw std::invalid_argument("block: cell area must be > 0");
    if (col_periphery < 0.0 || row_periphery < 0.0) throw std::invalid_argument("block: periphery areas must be >= 0");
    if (!(bitline_cap_per_cell > 0.0)) throw std::invalid_argument("block: bitline capacitance must be > 0");
    if (active_columns < 1 || active_columns > columns()) throw std::invalid_argument("block: invalid active columns");
    if (!(vdd > 0.0) || !(temp_kelvin > 0.0) || !(cycle > 0.0)) {
        throw std::invalid_argument("block: VDD, temperature and cycle must be > 0");
    }
}

BlockConfig default_block_config(CellKind kind, std::int64_t cells_per_bitline) {
    // Per-column periphery solving area = bits * cell + columns * periphery
    // for the two published 256 kb blocks: 1.18 mm^2 with 3.72 um^2 cells at
    // 1024 per column, 0.86 mm^2 with 2.03 um^2 cells at 64 per column.
    constexpr double kBits = 256.0 * 1024.0;
    constexpr double kSingleEndedPeriphery = (1.18e6 - kBits * 3.72) / (kBits / 1024.0);
    constexpr double kDifferentialPeriphery = (0.86e6 - kBits * 2.03) / (kBits / 64.0);

    BlockConfig c;
    c.kind = kind;
    c.cells_per_bitline = cells_per_bitline;
    c.cell_area = cell_area_um2(kind);
    const CellPorts p = ports_of(kind);
    c.col_periphery = p.wbl.empty() ? kDifferentialPeriphery : kSingleEndedPeriphery;
    return c;
}

std::int64_t reference_cells_per_bitline(CellKind kind) { return ports_of(kind).wbl.empty() ? 64 : 1024; }

double block_area(const BlockConfig& cfg) {
    cfg.validate();
    const double um2 = static_cast<double>(cfg.total_bits) * cfg.cell_area +
                       static_cast<double>(cfg.columns()) * cfg.col_periphery +
                       static_cast<double>(cfg.rows()) * cfg.row_periphery;
    return um2 * 1e-6;
}

AreaOverhead area_overhead(const BlockConfig& a, const BlockConfig& b) {
    AreaOverhead o;
    o.cell = (a.cell_area - b.cell_area) / b.cell_area;
    o.block = (block_area(a) - block_area(b)) / block_area(b);
    return o;
}

namespace {

double bitline_development(const Waveform& w, const CellPorts& p, std::size_t k, double vdd) {
    if (!p.rbl.empty()) return vdd - w.series(p.rbl)[k];
    return std::fabs(w.series(p.blb)[k] - w.series(p.bl)[k]);
}

// First time after `from` at which f(k) >= 0, interpolated between samples.
template <typename F>
double first_crossing(const Waveform& w, double from, F f) {
    for (std::size_t k = 1; k < w.time.size(); ++k) {
        if (w.time[k] < from) continue;
        const double a = f(k - 1);
        const double b = f(k);
        if (b >= 0.0) {
            if (a >= 0.0) return std::max(from, w.time[k - 1]);
            return std::max(from, w.time[k - 1] + (w.time[k] - w.time[k - 1]) * (-a) / (b - a));
        }
    }
    return kNaN;
}

// Delay from word-line mid-edge to the criterion of `op`. The stimulus is
// stretched (up to 100 cycles) until the criterion is met.
double operation_delay(const Dut& dut, Operation op, double vdd, double cycle, const SolverOptions& opts) {
    const CellPorts& p = dut.ports;
    for (double window = cycle; window <= 100.0 * cycle * 1.0001; window *= 10.0) {
        const OpTiming t{window, window / 2000.0};
        const Netlist n = operation_netlist(dut, op, vdd, t);
        std::vector<std::string> observe{p.q, p.qb};
        if (!p.rbl.empty()) observe.push_back(p.rbl);
        else {
            observe.push_back(p.bl);
            observe.push_back(p.blb);
        }
        const Waveform w = transient(n, window, t.dt, observe, opts);
        const double t_assert = 0.1 * window + 0.005 * window;
        double hit = kNaN;
        if (op == Operation::Read) {
            hit = first_crossing(w, t_assert, [&](std::size_t k) { return bitline_development(w, p, k, vdd) - 0.05; });
        } else {
            const double sign = op == Operation::Write1 ? 1.0 : -1.0;
            const auto& q = w.series(p.q);
            const auto& qb = w.series(p.qb);
            hit = first_crossing(w, t_assert, [&](std::size_t k) { return sign * (q[k] - qb[k]); });
        }
        if (!std::isnan(hit)) return hit - t_assert;
    }
    return kNaN;
}

}  // namespace

BlockMetrics evaluate_block(const BlockConfig& cfg, const SolverOptions& opts_in) {
    cfg.validate();
    SolverOptions opts = opts_in;
    opts.temp_kelvin = cfg.temp_kelvin;
    CellDescriptor cell = CellDescriptor::make(cfg.kind, cfg.vdd);
    cell.bitline_cap = static_cast<double>(cfg.cells_per_bitline) * cfg.bitline_cap_per_cell;
    const Dut dut = make_dut(cell);
    const OpTiming timing{cfg.cycle, cfg.cycle / 200.0};

    BlockMetrics m;
    m.area = block_area(cfg);
    m.cell_leakage = leakage_power(dut, cfg.vdd, cfg.temp_kelvin, opts).worst;
    const double idle_cells = static_cast<double>(cfg.total_bits - cfg.active_columns);
    const double idle = idle_cells * m.cell_leakage;
    m.read_power = cfg.active_columns * operation_power(dut, Operation::Read, cfg.vdd, timing, opts) + idle;
    m.write_power = cfg.active_columns * operation_power_write(dut, cfg.vdd, timing, opts) + idle;
    m.read_delay = operation_delay(dut, Operation::Read, cfg.vdd, cfg.cycle, opts);
    m.write_delay = 0.5 * (operation_delay(dut, Operation::Write0, cfg.vdd, cfg.cycle, opts) +
                           operation_delay(dut, Operation::Write1, cfg.vdd, cfg.cycle, opts));
    return m;
}

double reduction(double a, double b) { return 1.0 - a / b; }

BlockReport compare_blocks(const BlockConfig& a, const BlockMetrics& ma, const BlockConfig& b, const BlockMetrics& mb) {
    BlockReport r{a, b, ma, mb, {}};
    auto row = [&](const std::string& name, double x, double y) {
        r.rows.push_back({name, x, y, (x - y) / y, std::log10(x / y)});
    };
    row("read_power", ma.read_power, mb.read_power);
    row("write_power", ma.write_power, mb.write_power);
    row("read_delay", ma.read_delay, mb.read_delay);
    row("write_delay", ma.write_delay, mb.write_delay);
    row("area", ma.area, mb.area);
    return r;
}

BlockReport block_report(const BlockConfig& a, const BlockConfig& b, const SolverOptions& opts) {
    return compare_blocks(a, evaluate_block(a, opts), b, evaluate_block(b, opts));
}

nlohmann::json to_json(const BlockConfig& c) {
    return {{"cell", to_string(c.kind)},
            {"total_bits", c.total_bits},
            {"cells_per_bitline", c.cells_per_bitline},
            {"columns", c.columns()},
            {"cell_area_um2", c.cell_area},
            {"col_periphery_um2", c.col_periphery},
            {"row_periphery_um2", c.row_periphery},
            {"bitline_cap_per_cell", c.bitline_cap_per_cell},
            {"active_columns", c.active_columns},
            {"vdd", c.vdd},
            {"temp", c.temp_kelvin},
            {"cycle", c.cycle}};
}

nlohmann::json to_json(const BlockMetrics& m) {
    return {{"read_power", m.read_power},   {"write_power", m.write_power}, {"read_delay", m.read_delay},
            {"write_delay", m.write_delay}, {"area_mm2", m.area},           {"cell_leakage", m.cell_leakage}};
}

nlohmann::json to_json(const BlockReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : r.rows) {
        rows.push_back({{"metric", x.metric}, {"a", x.a}, {"b", x.b}, {"change", x.change}, {"log_ratio", x.log_ratio}});
    }
    return {{"a", to_json(r.a)},
            {"b", to_json(r.b)},
            {"metrics_a", to_json(r.metrics_a)},
            {"metrics_b", to_json(r.metrics_b)},
            {"rows", rows}};
}

namespace {

struct Scaled {
    std::string label;
    double factor;
};

Scaled display_unit(const std::string& metric) {
    if (metric.ends_with("power")) return {"uW", 1e6};
    if (metric.ends_with("delay")) return {"ns", 1e9};
    return {"mm^2", 1.0};
}

std::string fmt(double v, int prec = 4) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

}  // namespace

std::string to_markdown(const BlockReport& r) {
    std::ostringstream os;
    os << "| Metric | " << to_string(r.a.kind) << "@" << fmt(r.a.vdd * 1e3) << "mV | " << to_string(r.b.kind) << "@"
       << fmt(r.b.vdd * 1e3) << "mV | Change |\n";
    os << "|---|---|---|---|\n";
    for (const auto& x : r.rows) {
        const Scaled u = display_unit(x.metric);
        os << "| " << x.metric << " (" << u.label << ") | " << fmt(x.a * u.factor) << " | " << fmt(x.b * u.factor)
           << " | " << fmt(100.0 * x.change, 3) << "% |\n";
    }
    return os.str();
}

std::string to_csv(const BlockReport& r) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "metric,a,b,change,log_ratio\n";
    for (const auto& x : r.rows) os << x.metric << ',' << x.a << ',' << x.b << ',' << x.change << ',' << x.log_ratio << '\n';
    return os.str();
}

// ---------------------------------------------------------------- column scenarios

ColumnScenario parse_column_scenario(const std::string& text) {
    ColumnScenario s;
    std::string pattern = "0";
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("column scenario line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "cell") s.kind = parse_cell_kind(value);
            else if (key == "n") s.n = std::stoi(value);
            else if (key == "arch") s.arch = parse_rail_arch(value);
            else if (key == "pattern") pattern = value;
            else if (key == "selected") s.selected = std::stoi(value);
            else if (key == "vdd") s.vdd = std::stod(value);
            else if (key == "temp") s.temp_kelvin = std::stod(value);
            else if (key == "bitline_cap") s.bitline_cap = std::stod(value);
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::logic_error& e) {
            throw std::invalid_argument("column scenario line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (s.n < 1) throw std::invalid_argument("column scenario: n must be >= 1");
    if (s.selected < 0 || s.selected >= s.n) throw std::invalid_argument("column scenario: selected out of range");
    if (pattern.empty() || pattern.find_first_not_of("01") != std::string::npos) {
        throw std::invalid_argument("column scenario: pattern must be a string of 0 and 1");
    }
    s.pattern.resize(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) s.pattern[static_cast<std::size_t>(i)] = pattern[i % pattern.size()] == '1';
    return s;
}

ColumnScenario load_column_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open column scenario '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_column_scenario(ss.str());
}

Dut make_scenario_dut(const ColumnScenario& s) {
    ColumnOptions o;
    o.selected = s.selected;
    Dut d = make_column_dut(CellDescriptor::make(s.kind, s.vdd), s.n, s.pattern, s.arch, s.bitline_cap, o);
    d.netlist.temp_celsius = s.temp_kelvin - 273.15;
    return d;
}

}  // namespace ntsram
