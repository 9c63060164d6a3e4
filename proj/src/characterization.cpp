#include "ntsram/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

namespace ntsram {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSweepNode = 0.0;  // placeholder to keep the sweep source at 0 V initially
const char* const kSweepSource = "VSNMIN";
const char* const kSweepNet = "SNM_IN";

bool has_source(const Netlist& n, const std::string& name) {
    const Instance* i = n.find(name);
    return i && i->kind == InstanceKind::VoltageSource;
}

void set_dc(Netlist& n, const std::string& port, double v) {
    if (port.empty()) return;
    const std::string name = "V" + port;
    if (has_source(n, name)) n.set_source(name, SourceValue::constant(v));
}

void set_wave(Netlist& n, const std::string& port, SourceValue v) {
    if (port.empty()) return;
    const std::string name = "V" + port;
    if (has_source(n, name)) n.set_source(name, std::move(v));
}

// Word-line port and its asserted level.
struct LineLevel {
    std::string port;
    double on;
    double off;
};

std::vector<LineLevel> read_wordlines(const CellPorts& p, double vdd) {
    std::vector<LineLevel> out;
    if (!p.wl.empty()) out.push_back({p.wl, vdd, 0.0});
    if (!p.rwl.empty()) {
        const bool active_low = p.rwl == "RWLB";
        out.push_back({p.rwl, active_low ? 0.0 : vdd, active_low ? vdd : 0.0});
    }
    return out;
}

std::vector<LineLevel> write_wordlines(const Netlist& n, const CellPorts& p, double vdd) {
    std::vector<LineLevel> out;
    if (!p.wl.empty()) out.push_back({p.wl, vdd, 0.0});
    if (!p.wwl.empty()) out.push_back({p.wwl, vdd, 0.0});
    if (has_source(n, "VWWLB")) out.push_back({"WWLB", 0.0, vdd});
    return out;
}

std::vector<std::string> read_bitlines(const CellPorts& p) {
    if (!p.rbl.empty()) return {p.rbl};
    return {p.bl, p.blb};
}

// Bitline that discharges when the selected cell stores the
// discharge-enabling value.
std::string discharging_bitline(const CellPorts& p) { return p.rbl.empty() ? p.bl : p.rbl; }

void set_stored(Netlist& n, const CellPorts& p, bool q_high, double vdd) {
    if (!p.q.empty()) {
        n.initial_conditions[p.q] = q_high ? vdd : 0.0;
        n.initial_conditions[p.qb] = q_high ? 0.0 : vdd;
    }
}

// Stored value that lets the read path discharge its bitline.
bool discharge_value(const CellPorts& p) { return !p.read_on_q_low; }

void float_rails(Netlist& n, double vdd) {
    if (has_source(n, "VSWH")) n.set_source("VSWH", SourceValue::constant(vdd));
    if (has_source(n, "VSWL")) n.set_source("VSWL", SourceValue::constant(0.0));
}

SourceValue pulse(double v0, double v1, double ta, double tb, double tr) {
    return SourceValue::piecewise({{0.0, v0}, {ta, v0}, {ta + tr, v1}, {tb, v1}, {tb + tr, v0}});
}

void release_precharged(Netlist& n, const std::string& port, double vdd) {
    n.remove("V" + port);
    n.initial_conditions[port] = vdd;
}

// Move the gates fed by `forced` onto the sweep net, but only for devices
// channel-connected to `observed`; feedback inside the forcing inverter
// (Schmitt-trigger devices) keeps its own node.
int break_loop(Netlist& n, const std::string& forced, const std::string& observed) {
    std::set<std::string> driven{kGround};
    for (const auto& inst : n.instances) {
        if (inst.kind == InstanceKind::VoltageSource) driven.insert(inst.nodes.begin(), inst.nodes.end());
    }
    std::set<std::string> reached{observed};
    std::vector<std::string> frontier{observed};
    std::set<const Instance*> group;
    while (!frontier.empty()) {
        const std::string node = frontier.back();
        frontier.pop_back();
        for (const auto& inst : n.instances) {
            if (inst.kind != InstanceKind::Mos) continue;
            const std::string& d = inst.nodes[0];
            const std::string& s = inst.nodes[2];
            if (d != node && s != node) continue;
            group.insert(&inst);
            const std::string& other = d == node ? s : d;
            if (!driven.contains(other) && reached.insert(other).second) frontier.push_back(other);
        }
    }
    int moved = 0;
    for (auto& inst : n.instances) {
        if (inst.kind == InstanceKind::Mos && group.contains(&inst) && inst.nodes[1] == forced) {
            inst.nodes[1] = kSweepNet;
            ++moved;
        }
    }
    return moved;
}

Curve sweep_curve(const Netlist& base, const std::string& forced, const std::string& observed, double vdd,
                  const SnmOptions& opts, bool forced_is_x) {
    Netlist n = base;
    n.initial_conditions.clear();
    n.add_source(kSweepSource, kSweepNet, kGround, SourceValue::constant(kSweepNode));
    if (break_loop(n, forced, observed) == 0) {
        throw std::invalid_argument("no gate is driven by node '" + forced + "'");
    }
    const int steps = std::max(2, static_cast<int>(std::lround(vdd / opts.step)) + 1);
    const SweepResult s = dc_sweep(n, kSweepSource, 0.0, vdd, steps, {observed}, opts.solver);
    Curve c;
    const auto resp = s.series(observed);
    if (forced_is_x) {
        c.x = s.values;
        c.y = resp;
    } else {
        c.x = resp;
        c.y = s.values;
    }
    return c;
}

// A curve expressed in rotated coordinates u = (x - y)/sqrt2, w = (x + y)/sqrt2,
// sorted by u.
struct Rotated {
    std::vector<double> u;
    std::vector<double> w;

    double at(double uu) const {
        if (uu <= u.front()) return w.front();
        if (uu >= u.back()) return w.back();
        auto it = std::upper_bound(u.begin(), u.end(), uu);
        const std::size_t k = static_cast<std::size_t>(it - u.begin());
        const double f = (uu - u[k - 1]) / (u[k] - u[k - 1]);
        return w[k - 1] + f * (w[k] - w[k - 1]);
    }
};

Rotated rotate(const Curve& c) {
    constexpr double kMonotoneTol = 0.01;  // [V] tolerated backward step along u
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        pts.emplace_back((c.x[i] - c.y[i]) / kSqrt2, (c.x[i] + c.y[i]) / kSqrt2);
    }
    if (pts.size() >= 2 && pts.back().first < pts.front().first) std::reverse(pts.begin(), pts.end());
    Rotated r;
    for (const auto& [u, w] : pts) {
        if (!r.u.empty() && u <= r.u.back()) {
            if (r.u.back() - u > kMonotoneTol) {
                throw std::runtime_error("transfer curve is non-monotone beyond tolerance");
            }
            continue;
        }
        r.u.push_back(u);
        r.w.push_back(w);
    }
    if (r.u.size() < 2) throw std::runtime_error("degenerate transfer curve");
    return r;
}

// D(u) = wA(u) - wB(u) on the union of both sample grids inside the overlap.
struct Separation {
    std::vector<double> u;
    std::vector<double> d;
};

Separation separation(const Curve& qb_of_q, const Curve& q_of_qb) {
    const Rotated a = rotate(qb_of_q);
    const Rotated b = rotate(q_of_qb);
    const double lo = std::max(a.u.front(), b.u.front());
    const double hi = std::min(a.u.back(), b.u.back());
    Separation s;
    if (!(hi > lo)) return s;
    std::vector<double> grid;
    for (const auto* r : {&a, &b}) {
        for (double u : r->u) {
            if (u >= lo && u <= hi) grid.push_back(u);
        }
    }
    grid.push_back(lo);
    grid.push_back(hi);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double u : grid) {
        s.u.push_back(u);
        s.d.push_back(a.at(u) - b.at(u));
    }
    return s;
}

std::vector<std::size_t> sign_changes(const std::vector<double>& d) {
    constexpr double kZeroBand = 1e-7;
    std::vector<std::size_t> out;
    int last = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int s = d[i] > kZeroBand ? 1 : (d[i] < -kZeroBand ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) out.push_back(i);
        last = s;
    }
    return out;
}

double power_of_sources(const Netlist& n, const OperatingPoint& op) {
    double p = 0.0;
    for (const auto& inst : n.instances) {
        if (inst.kind != InstanceKind::VoltageSource) continue;
        p += inst.source.dc * op.i(inst.name);
    }
    return p;
}

double state_margin(double q, double qb, bool q_high, double vdd) {
    const double hi = q_high ? q : qb;
    const double lo = q_high ? qb : q;
    return std::min(hi - 0.9 * vdd, 0.1 * vdd - lo);
}

}  // namespace

Dut make_dut(const CellDescriptor& desc) {
    Dut d;
    d.netlist = build_cell(desc);
    d.ports = ports_of(desc.kind);
    d.kind = desc.kind;
    d.label = to_string(desc.kind);
    return d;
}

Dut make_column_dut(const CellDescriptor& desc, int n, const std::vector<bool>& pattern, RailArch arch,
                    double bitline_cap, const ColumnOptions& opts) {
    Dut d;
    d.netlist = compose_column(desc, n, pattern, arch, bitline_cap, opts);
    d.ports = column_ports(desc.kind, opts.selected);
    d.kind = desc.kind;
    d.label = to_string(desc.kind) + "x" + std::to_string(n) + "/" + to_string(arch);
    return d;
}

Dut make_netlist_dut(Netlist n, std::string label) {
    auto has = [&](const char* node) { return n.has_node(node); };
    Dut d;
    CellPorts& p = d.ports;
    const std::pair<std::string*, const char*> names[] = {
        {&p.wl, "WL"},   {&p.bl, "BL"}, {&p.blb, "BLB"}, {&p.wwl, "WWL"},   {&p.wbl, "WBL"},   {&p.rbl, "RBL"},
        {&p.q, "Q"},     {&p.qb, "QB"}, {&p.qc, "Qc"},   {&p.vddc, "VDDC"}, {&p.gndc, "GNDC"}, {&p.sn, "SN"},
    };
    for (const auto& [field, node] : names) {
        if (has(node)) *field = node;
    }
    if (has("RWL")) p.rwl = "RWL";
    else if (has("RWLB")) p.rwl = "RWLB";
    if (!n.find("VVDD")) throw std::invalid_argument("netlist has no supply source VVDD");
    if ((p.q.empty() || p.qb.empty()) && p.rbl.empty()) {
        throw std::invalid_argument("netlist has neither Q/QB storage nodes nor a read bitline RBL");
    }
    if (!p.sn.empty() && p.q.empty()) p.read_on_q_low = false;
    d.netlist = std::move(n);
    d.label = std::move(label);
    return d;
}

double supply_of(const Netlist& n) {
    const Instance* s = n.find("VVDD");
    if (!s || s->kind != InstanceKind::VoltageSource) {
        throw std::invalid_argument("netlist has no supply source VVDD");
    }
    return s->source.dc;
}

void retarget_supply(Netlist& n, double vdd) {
    const double old = supply_of(n);
    if (old == vdd) return;
    if (!(old > 0.0)) throw std::invalid_argument("cannot rescale from a zero supply");
    const double f = vdd / old;
    for (auto& inst : n.instances) {
        if (inst.kind != InstanceKind::VoltageSource) continue;
        inst.source.dc *= f;
        for (auto& [t, v] : inst.source.pwl) v *= f;
    }
    for (auto& [node, v] : n.initial_conditions) v *= f;
}

std::string to_string(SnmMode mode) {
    switch (mode) {
        case SnmMode::Hold: return "HOLD";
        case SnmMode::Read: return "READ";
        case SnmMode::Write: return "WRITE";
    }
    return "?";
}

SnmResult butterfly_margins(const Curve& qb_of_q, const Curve& q_of_qb, SnmMode mode) {
    SnmResult r;
    r.mode = mode;
    r.vtc_qb_of_q = qb_of_q;
    r.vtc_q_of_qb = q_of_qb;
    const Separation s = separation(qb_of_q, q_of_qb);
    if (s.u.empty()) {
        r.collapsed = true;
        return r;
    }
    // The Q-low lobe lies at negative u where curve A is above curve B
    // (D > 0); the Q-high lobe mirrors it. They meet at the crossing
    // closest to the symmetry line.
    const auto cross = sign_changes(s.d);
    double split = 0.0;
    if (!cross.empty()) {
        split = s.u[cross.front()];
        for (std::size_t c : cross) {
            if (std::fabs(s.u[c]) < std::fabs(split)) split = s.u[c];
        }
    }
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        if (s.u[i] < split) r.lobe2 = std::max(r.lobe2, s.d[i] / kSqrt2);
        else r.lobe1 = std::max(r.lobe1, -s.d[i] / kSqrt2);
    }
    r.collapsed = cross.empty() || std::min(r.lobe1, r.lobe2) <= 1e-6;
    r.snm = std::min(r.lobe1, r.lobe2);
    return r;
}

SnmResult snm(const Dut& dut, SnmMode mode, double vdd, const SnmOptions& opts) {
    if (mode == SnmMode::Write) throw std::invalid_argument("use wnm() for write margins");
    Netlist n = dut.netlist;
    retarget_supply(n, vdd);
    for (const auto& wl : read_wordlines(dut.ports, vdd)) set_dc(n, wl.port, mode == SnmMode::Read ? wl.on : wl.off);
    for (const auto& bl : read_bitlines(dut.ports)) set_dc(n, bl, vdd);
    const Curve a = sweep_curve(n, dut.ports.q, dut.ports.qb, vdd, opts, true);
    const Curve b = sweep_curve(n, dut.ports.qb, dut.ports.q, vdd, opts, false);
    return butterfly_margins(a, b, mode);
}

double write_margin(const Curve& qb_of_q, const Curve& q_of_qb, bool target_q_high, double vdd) {
    const Separation s = separation(qb_of_q, q_of_qb);
    if (s.u.empty()) return 0.0;
    // Writing Q low must open the Q-high half (u >= 0): D > 0 there when the
    // old state is gone. Writing Q high mirrors this.
    const double sigma = target_q_high ? -1.0 : 1.0;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const bool in_half = target_q_high ? s.u[i] <= 0.0 : s.u[i] >= 0.0;
        if (in_half) m = std::min(m, sigma * s.d[i]);
    }
    if (!std::isfinite(m)) {
        m = sigma * (target_q_high ? s.d.front() : s.d.back());
    }
    (void)vdd;
    return m / kSqrt2;
}

WnmResult wnm(const Dut& dut, double vdd, const SnmOptions& opts, bool assert_wordline) {
    WnmResult r;
    for (bool target_high : {false, true}) {
        Netlist n = dut.netlist;
        retarget_supply(n, vdd);
        for (const auto& wl : write_wordlines(n, dut.ports, vdd)) {
            set_dc(n, wl.port, assert_wordline ? wl.on : wl.off);
        }
        if (!dut.ports.wbl.empty()) {
            set_dc(n, dut.ports.wbl, target_high ? vdd : 0.0);
        } else {
            set_dc(n, dut.ports.bl, target_high ? vdd : 0.0);
            set_dc(n, dut.ports.blb, target_high ? 0.0 : vdd);
        }
        if (assert_wordline) float_rails(n, vdd);
        const Curve a = sweep_curve(n, dut.ports.q, dut.ports.qb, vdd, opts, true);
        const Curve b = sweep_curve(n, dut.ports.qb, dut.ports.q, vdd, opts, false);
        (target_high ? r.write1 : r.write0) = write_margin(a, b, target_high, vdd);
    }
    r.wnm = std::min(r.write0, r.write1);
    return r;
}

ReadPathMetrics ion_ioff(const Dut& dut, double vdd, double temp_kelvin, const SolverOptions& opts) {
    SolverOptions so = opts;
    so.temp_kelvin = temp_kelvin;
    const CellPorts& p = dut.ports;
    const std::string bl = discharging_bitline(p);
    const bool enable = discharge_value(p);

    auto current = [&](bool selected, bool stored_q_high) {
        Netlist n = dut.netlist;
        retarget_supply(n, vdd);
        for (const auto& wl : read_wordlines(p, vdd)) set_dc(n, wl.port, selected ? wl.on : wl.off);
        for (const auto& b : read_bitlines(p)) set_dc(n, b, vdd);
        if (!p.sn.empty()) {
            set_dc(n, p.sn, stored_q_high ? vdd : 0.0);
        } else {
            set_stored(n, p, stored_q_high, vdd);
        }
        return dc_operating_point(n, {}, so).i("V" + bl);
    };

    ReadPathMetrics m;
    m.vdd = vdd;
    m.temp = temp_kelvin;
    m.ion = current(true, enable);
    m.ioff = std::max(current(false, true), current(false, false));
    // A fully isolated path can settle at exactly zero; floor it at the
    // smallest normal double so the ratio stays finite and ordered.
    m.ioff = std::max(m.ioff, std::numeric_limits<double>::min());
    m.ratio = m.ion / m.ioff;
    return m;
}

std::vector<bool> stacked_gate_pattern(int n_stack, int n_on) {
    if (n_stack < 2 || n_on < 0 || n_on >= n_stack) {
        throw std::invalid_argument("stack needs n_stack >= 2 and 0 <= n_on < n_stack");
    }
    if (n_stack == 3 && n_on == 2) return {true, true, false};
    std::vector<bool> g(static_cast<std::size_t>(n_stack), false);
    for (int k = 0; k < n_on; ++k) g[static_cast<std::size_t>(n_stack - 1 - k)] = true;
    return g;
}

double stacked_leakage_coefficient(int n_stack, int n_on, double l) {
    if (n_stack == 2 && n_on == 1) return (l * l + l + 1.0) / (2.0 * l + 1.0);
    if (n_stack == 3 && n_on == 1) return (l * l * l + l * l + 2.0 * l + 1.0) / (3.0 * l * l + 3.0 * l + 1.0);
    if (n_stack == 3 && n_on == 2) return (l * l * l + 2.0 * l * l + l) / (3.0 * l * l + 3.0 * l + 1.0);
    throw std::invalid_argument("no closed form for a " + std::to_string(n_stack) + "-stack with " +
                                std::to_string(n_on) + " ON devices");
}

double stacked_leakage_closed_form(int n_stack, int n_on, const DeviceParams& p, double vdd) {
    const double c = stacked_leakage_coefficient(n_stack, n_on, p.lambda);
    return p.aspect() * p.is * std::pow(10.0, (-p.vt0 + c * vdd) / p.swing);
}

StackSolution stacked_leakage_numeric(int n_stack, int n_on, const DeviceParams& p, double vdd) {
    return stacked_leakage_numeric(stacked_gate_pattern(n_stack, n_on), p, vdd);
}

StackSolution stacked_leakage_numeric(const std::vector<bool>& gates_on, const DeviceParams& p, double vdd) {
    if (gates_on.size() < 2) throw std::invalid_argument("stack needs at least two devices");
    const double temp = p.t_ref;

    auto log_current = [&](double vg, double vd, double vs) {
        const double i = drain_current_simplified_unchecked(p, BiasPoint{vg - vs, vd - vs, 0.0, temp});
        return std::log10(i);
    };
    // Source voltage of a device carrying 10^logi from drain vd.
    auto source_for = [&](double vg, double vd, double logi) {
        double lo = vd - 20.0;
        double hi = vd + 20.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (log_current(vg, vd, mid) > logi) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto walk = [&](double logi, std::vector<double>* nodes) {
        double v = vdd;
        for (std::size_t k = 0; k < gates_on.size(); ++k) {
            v = source_for(gates_on[k] ? vdd : 0.0, v, logi);
            if (nodes && k + 1 < gates_on.size()) nodes->push_back(v);
        }
        return v;  // bottom node; must come out at ground
    };

    double lo = -80.0;
    double hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (walk(mid, nullptr) > 0.0) lo = mid;
        else hi = mid;
    }
    StackSolution s;
    s.gates_on = gates_on;
    const double logi = 0.5 * (lo + hi);
    s.current = std::pow(10.0, logi);
    walk(logi, &s.node_voltages);
    double above = vdd;
    for (std::size_t k = 0; k < gates_on.size(); ++k) {
        const double below = k < s.node_voltages.size() ? s.node_voltages[k] : 0.0;
        if (above - below < 0.05) s.in_validity_region = false;
        above = below;
    }
    return s;
}

LeakageResult leakage_power(const Dut& dut, double vdd, double temp_kelvin, const SolverOptions& opts) {
    SolverOptions so = opts;
    so.temp_kelvin = temp_kelvin;
    LeakageResult r;
    if (vdd == 0.0) return r;
    for (bool q_high : {false, true}) {
        Netlist n = dut.netlist;
        retarget_supply(n, vdd);
        if (!dut.ports.sn.empty()) {
            set_dc(n, dut.ports.sn, q_high ? vdd : 0.0);
        } else {
            set_stored(n, dut.ports, q_high, vdd);
        }
        const double p = power_of_sources(n, dc_operating_point(n, {}, so));
        (q_high ? r.stored1 : r.stored0) = p;
    }
    r.worst = std::max(r.stored0, r.stored1);
    return r;
}

std::string to_string(Operation op) {
    switch (op) {
        case Operation::Write0: return "WRITE0";
        case Operation::Write1: return "WRITE1";
        case Operation::Read: return "READ";
        case Operation::Access: return "ACCESS";
        case Operation::Hold: return "HOLD";
        case Operation::Retention: return "RETENTION";
    }
    return "?";
}

Operation parse_operation(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (Operation op : {Operation::Write0, Operation::Write1, Operation::Read, Operation::Access, Operation::Hold,
                         Operation::Retention}) {
        if (to_string(op) == t) return op;
    }
    throw std::invalid_argument("unknown operation '" + text + "'");
}

Netlist operation_netlist(const Dut& dut, Operation op, double vdd, const OpTiming& timing) {
    Netlist n = dut.netlist;
    retarget_supply(n, vdd);
    const CellPorts& p = dut.ports;
    const double T = timing.cycle;
    const double tr = 0.01 * T;
    const double t_drive = 0.05 * T;
    const double t_on = 0.1 * T;
    const double t_off = 0.6 * T;
    const double t_restore = 0.7 * T;

    switch (op) {
        case Operation::Write0:
        case Operation::Write1: {
            const bool d = op == Operation::Write1;
            set_stored(n, p, !d, vdd);
            const SourceValue drive_low = pulse(vdd, 0.0, t_drive, t_restore, tr);
            if (!p.wbl.empty()) {
                if (!d) set_wave(n, p.wbl, drive_low);
            } else {
                set_wave(n, d ? p.blb : p.bl, drive_low);
            }
            for (const auto& wl : write_wordlines(n, p, vdd)) {
                set_wave(n, wl.port, pulse(wl.off, wl.on, t_on, t_off, tr));
            }
            if (has_source(n, "VSWH")) n.set_source("VSWH", pulse(0.0, vdd, t_on - 0.02 * T, t_off + 0.02 * T, tr));
            if (has_source(n, "VSWL")) n.set_source("VSWL", pulse(vdd, 0.0, t_on - 0.02 * T, t_off + 0.02 * T, tr));
            break;
        }
        case Operation::Read:
        case Operation::Access: {
            set_stored(n, p, discharge_value(p), vdd);
            for (const auto& bl : read_bitlines(p)) release_precharged(n, bl, vdd);
            for (const auto& wl : read_wordlines(p, vdd)) set_wave(n, wl.port, pulse(wl.off, wl.on, t_on, t_off, tr));
            break;
        }
        case Operation::Hold:
        case Operation::Retention:
            set_stored(n, p, true, vdd);
            break;
    }
    return n;
}

double average_supplied_power(const Netlist& n, const Waveform& w) {
    if (w.time.size() < 2) return 0.0;
    double energy = 0.0;
    for (const auto& inst : n.instances) {
        if (inst.kind != InstanceKind::VoltageSource) continue;
        const auto& cur = w.source_currents.at(inst.name);
        auto pw = [&](std::size_t k) { return std::max(inst.source.at(w.time[k]) * cur[k], 0.0); };
        for (std::size_t k = 1; k < w.time.size(); ++k) {
            // Backward Euler currents are constant over each step.
            energy += pw(k) * (w.time[k] - w.time[k - 1]);
        }
    }
    return energy / (w.time.back() - w.time.front());
}

OpCheckResult dynamic_op_check(const Dut& dut, Operation op, double vdd, const OpTiming& timing,
                               const SolverOptions& opts) {
    OpCheckResult r;
    r.op = op;
    const CellPorts& p = dut.ports;
    if (p.q.empty()) throw std::invalid_argument("dynamic checks need a cell with storage nodes");
    Netlist n = operation_netlist(dut, op, vdd, timing);

    if (op == Operation::Retention) {
        double margin = std::numeric_limits<double>::infinity();
        for (bool q_high : {true, false}) {
            set_stored(n, p, q_high, vdd);
            const OperatingPoint o = dc_operating_point(n, {}, opts);
            const double m = state_margin(o.v(p.q), o.v(p.qb), q_high, vdd);
            if (m < margin) {
                margin = m;
                r.q_end = o.v(p.q);
                r.qb_end = o.v(p.qb);
            }
        }
        r.margin = margin;
        r.pass = margin >= 0.0;
        return r;
    }

    std::vector<std::string> observe{p.q, p.qb};
    for (const auto& bl : read_bitlines(p)) {
        if (!bl.empty()) observe.push_back(bl);
    }
    const Waveform w = transient(n, timing.cycle, timing.dt, observe, opts);
    r.q_end = w.final_value(p.q);
    r.qb_end = w.final_value(p.qb);
    r.power = average_supplied_power(n, w);

    switch (op) {
        case Operation::Write0:
        case Operation::Write1:
            r.margin = state_margin(r.q_end, r.qb_end, op == Operation::Write1, vdd);
            break;
        case Operation::Read:
        case Operation::Access: {
            const bool stored = discharge_value(p);
            if (!p.rbl.empty()) {
                r.development = vdd - w.final_value(p.rbl);
            } else {
                r.development = w.final_value(p.blb) - w.final_value(p.bl);
            }
            r.margin = op == Operation::Read ? state_margin(r.q_end, r.qb_end, stored, vdd)
                                             : r.development - 0.05;
            break;
        }
        case Operation::Hold:
            r.margin = state_margin(r.q_end, r.qb_end, true, vdd);
            break;
        case Operation::Retention:
            break;
    }
    r.pass = r.margin >= 0.0;
    return r;
}

double operation_power(const Dut& dut, Operation op, double vdd, const OpTiming& timing, const SolverOptions& opts) {
    const Netlist n = operation_netlist(dut, op, vdd, timing);
    const Waveform w = transient(n, timing.cycle, timing.dt, {}, opts);
    return average_supplied_power(n, w);
}

double operation_power_write(const Dut& dut, double vdd, const OpTiming& timing, const SolverOptions& opts) {
    return 0.5 * (operation_power(dut, Operation::Write0, vdd, timing, opts) +
                  operation_power(dut, Operation::Write1, vdd, timing, opts));
}

std::string hold_high_bitline(const CellPorts& ports) { return ports.rbl.empty() ? ports.bl : ports.rbl; }

DecayResult bitline_decay(const Dut& column, double vdd, double window, double dt, const SolverOptions& opts) {
    Netlist n = column.netlist;
    retarget_supply(n, vdd);
    const CellPorts& p = column.ports;
    set_stored(n, p, p.read_on_q_low, vdd);
    for (const auto& bl : read_bitlines(p)) release_precharged(n, bl, vdd);
    for (const auto& wl : read_wordlines(p, vdd)) set_dc(n, wl.port, wl.on);
    DecayResult r;
    r.bitline = hold_high_bitline(p);
    r.wave = transient(n, window, dt, {r.bitline, p.q, p.qb}, opts);
    r.droop = vdd - r.wave.final_value(r.bitline);
    return r;
}

nlohmann::json to_json(const SnmResult& r, bool with_curves) {
    nlohmann::json j{{"mode", to_string(r.mode)},
                     {"lobe1", r.lobe1},
                     {"lobe2", r.lobe2},
                     {"snm", r.snm},
                     {"collapsed", r.collapsed}};
    if (with_curves) {
        j["vtc_qb_of_q"] = {{"q", r.vtc_qb_of_q.x}, {"qb", r.vtc_qb_of_q.y}};
        j["vtc_q_of_qb"] = {{"q", r.vtc_q_of_qb.x}, {"qb", r.vtc_q_of_qb.y}};
    }
    return j;
}

nlohmann::json to_json(const WnmResult& r) {
    return {{"write0", r.write0}, {"write1", r.write1}, {"wnm", r.wnm}};
}

nlohmann::json to_json(const ReadPathMetrics& r) {
    return {{"ion", r.ion}, {"ioff", r.ioff}, {"ratio", r.ratio}, {"vdd", r.vdd}, {"temp", r.temp}};
}

nlohmann::json to_json(const LeakageResult& r) {
    return {{"stored0", r.stored0}, {"stored1", r.stored1}, {"worst", r.worst}};
}

nlohmann::json to_json(const OpCheckResult& r) {
    return {{"op", to_string(r.op)},     {"pass", r.pass},         {"margin", r.margin},
            {"q_end", r.q_end},          {"qb_end", r.qb_end},     {"development", r.development},
            {"power", r.power}};
}

nlohmann::json metric_record(const std::string& metric, const std::string& cell, double vdd, double temp,
                             nlohmann::json values, nlohmann::json settings) {
    nlohmann::json j;
    j["metric"] = metric;
    j["cell"] = cell;
    j["vdd"] = vdd;
    j["temp"] = temp;
    j["values"] = std::move(values);
    j["settings"] = std::move(settings);
    return j;
}

}  // namespace ntsram
