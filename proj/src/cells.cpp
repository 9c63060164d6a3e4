#include "ntsram/cells.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>
#include <stdexcept>

namespace ntsram {

namespace {

constexpr double kMinL = 0.1e-6;

// Area ratio of the iso-area 6T to the conventional 6T.
constexpr double kIsoAreaScale = 3.72 / 2.03;

struct MosTemplate {
    std::string name;  // instance name without the leading 'M'
    std::string d, g, s, b;
    Polarity pol;
    double aspect;     // default W/L
};

// Nodes that are never per-cell internal nodes.
const std::set<std::string> kExternal = {"0",    "VDD",  "WL",   "BL",  "BLB", "WWL", "WBL", "RWL",
                                         "RBL",  "WWLB", "RWLB", "SN",  "SLP", "VDDC", "GNDC"};

const std::set<std::string> kWordLines = {"WL", "WWL", "RWL", "WWLB", "RWLB"};
const std::set<std::string> kActiveLow = {"WWLB", "RWLB"};
const std::set<std::string> kBitLines = {"BL", "BLB", "WBL", "RBL"};

constexpr Polarity N = Polarity::N;
constexpr Polarity P = Polarity::P;

std::vector<MosTemplate> six_t(double scale) {
    return {
        {"PL", "Q", "QB", "VDDC", "VDD", P, 1.0 * scale},
        {"NL", "Q", "QB", "GNDC", "0", N, 3.0 * scale},
        {"PR", "QB", "Q", "VDDC", "VDD", P, 1.0 * scale},
        {"NR", "QB", "Q", "GNDC", "0", N, 3.0 * scale},
        {"AL", "BL", "WL", "Q", "0", N, 2.0 * scale},
        {"AR", "BLB", "WL", "QB", "0", N, 2.0 * scale},
    };
}

std::vector<MosTemplate> cell_template(CellKind kind) {
    switch (kind) {
        case CellKind::Conv6T: return six_t(1.0);
        case CellKind::IA6T: return six_t(kIsoAreaScale);
        case CellKind::WRE9T:
            // Only the Q-side inverter sits on the switched rails, so a write
            // through WBL meets a powerless feedback path. The QB inverter is
            // skewed low so the single-ended write of a one flips it early.
            // In a row with shared rails, bystanders storing 0 hold the
            // floated ground near 0 V; device 2 stays weak against the access
            // device so the write of a one still wins.
            return {
                {"1", "Q", "QB", "VDDC", "VDD", P, 2.0},
                {"2", "Q", "QB", "GNDC", "0", N, 0.5},
                {"3", "QB", "Q", "VDD", "VDD", P, 0.5},
                {"4", "QB", "Q", "0", "0", N, 4.0},
                {"5", "WBL", "WWL", "Q", "0", N, 8.0},
                {"6", "RBL", "QB", "Qc", "0", N, 2.0},
                {"7", "Qc", "RWL", "X", "0", N, 2.0},
                {"8", "X", "QB", "0", "0", N, 2.0},
                {"9", "Qc", "RWL", "VDD", "VDD", P, 2.0},
            };
        case CellKind::WRE8T:
            // Left inverter on per-cell switched rails; read through one
            // buffer device onto an active-low read word-line.
            return {
                {"1", "Q", "QB", "VL", "VDD", P, 2.0},
                {"2", "Q", "QB", "GL", "0", N, 2.0},
                {"3", "QB", "Q", "VDD", "VDD", P, 2.0},
                {"4", "QB", "Q", "0", "0", N, 2.0},
                {"H", "VL", "WWL", "VDD", "VDD", P, 2.0},
                {"F", "GL", "WWLB", "0", "0", N, 2.0},
                {"5", "WBL", "WWL", "Q", "0", N, 4.0},
                {"R", "RBL", "QB", "RWLB", "0", N, 2.0},
            };
        case CellKind::ST2:
            // Schmitt-trigger inverters: split pull-down with a feedback device.
            return {
                {"PL", "Q", "QB", "VDD", "VDD", P, 2.0},
                {"NL1", "Q", "QB", "XL", "0", N, 2.0},
                {"NL2", "XL", "QB", "0", "0", N, 2.0},
                {"FL", "VDD", "Q", "XL", "0", N, 2.0},
                {"PR", "QB", "Q", "VDD", "VDD", P, 2.0},
                {"NR1", "QB", "Q", "XR", "0", N, 2.0},
                {"NR2", "XR", "Q", "0", "0", N, 2.0},
                {"FR", "VDD", "QB", "XR", "0", N, 2.0},
                {"AL", "BL", "WL", "Q", "0", N, 2.0},
                {"AR", "BLB", "WL", "QB", "0", N, 2.0},
            };
        case CellKind::WEN:
            return {
                {"W", "PX", "WWL", "VDD", "VDD", P, 2.0},
                {"1", "Q", "QB", "PX", "VDD", P, 2.0},
                {"2", "Q", "QB", "0", "0", N, 2.0},
                {"3", "QB", "Q", "VDD", "VDD", P, 2.0},
                {"4", "QB", "Q", "0", "0", N, 2.0},
                {"5", "WBL", "WWL", "Q", "0", N, 4.0},
                {"R1", "RBL", "RWL", "RX", "0", N, 2.0},
                {"R2", "RX", "QB", "0", "0", N, 2.0},
            };
        case CellKind::ReadPathWRE9T:
            return {
                {"6", "RBL", "SN", "Qc", "0", N, 2.0},
                {"7", "Qc", "RWL", "X", "0", N, 2.0},
                {"8", "X", "SN", "0", "0", N, 2.0},
                {"9", "Qc", "RWL", "VDD", "VDD", P, 2.0},
            };
        case CellKind::ReadPathVerlika:
            return {
                {"R1", "RBL", "RWL", "N1", "0", N, 2.0},
                {"R2", "N1", "SN", "N2", "0", N, 2.0},
                {"R3", "N2", "RWL", "0", "0", N, 2.0},
            };
        case CellKind::ReadPathChang:
            return {
                {"R1", "RBL", "RWL", "N1", "0", N, 2.0},
                {"R2", "N1", "SN", "0", "0", N, 2.0},
            };
        case CellKind::HailongColumn:
            // In-cell read pair plus the array-shared footer.
            return {
                {"R1", "RBL", "RWL", "N1", "0", N, 2.0},
                {"R2", "N1", "SN", "VGS", "0", N, 2.0},
                {"F", "VGS", "SLP", "0", "0", N, 2.0},
            };
    }
    throw std::invalid_argument("unsupported cell kind");
}

std::vector<std::string> internal_nodes(const std::vector<MosTemplate>& t) {
    std::vector<std::string> out;
    for (const auto& m : t) {
        for (const auto* node : {&m.d, &m.g, &m.s, &m.b}) {
            if (!kExternal.contains(*node) && std::find(out.begin(), out.end(), *node) == out.end()) {
                out.push_back(*node);
            }
        }
    }
    return out;
}

std::vector<std::string> external_ports(const std::vector<MosTemplate>& t) {
    std::vector<std::string> out;
    for (const auto& m : t) {
        for (const auto* node : {&m.d, &m.g, &m.s, &m.b}) {
            if (kExternal.contains(*node) && *node != "0" && *node != "VDD" && *node != "VDDC" &&
                *node != "GNDC" && std::find(out.begin(), out.end(), *node) == out.end()) {
                out.push_back(*node);
            }
        }
    }
    return out;
}

bool uses_rails(const std::vector<MosTemplate>& t) {
    return std::any_of(t.begin(), t.end(), [](const MosTemplate& m) {
        return m.s == "VDDC" || m.s == "GNDC" || m.d == "VDDC" || m.d == "GNDC";
    });
}

double inactive_level(const std::string& port, double vdd) {
    if (kWordLines.contains(port)) return kActiveLow.contains(port) ? vdd : 0.0;
    return vdd;  // bitlines idle precharged, fixture storage node and footer enable high
}

void add_models(Netlist& n, const CellDescriptor& d) {
    DeviceParams np = d.nmos;
    np.polarity = Polarity::N;
    DeviceParams pp = d.pmos;
    pp.polarity = Polarity::P;
    n.models[kNmosModel] = np;
    n.models[kPmosModel] = pp;
}

void add_device(Netlist& n, const std::string& name, const std::string& d, const std::string& g,
                const std::string& s, const std::string& b, Polarity pol, const TransistorSize& sz) {
    n.add_mos(name, d, g, s, b, pol == Polarity::N ? kNmosModel : kPmosModel, sz.w, sz.l);
}

const TransistorSize& size_of(const CellDescriptor& d, const std::string& name) {
    auto it = d.sizing.find(name);
    if (it == d.sizing.end()) {
        throw std::invalid_argument("incomplete sizing for " + to_string(d.kind) + ": no entry for transistor '" +
                                    name + "'");
    }
    if (!(it->second.w > 0.0) || !(it->second.l > 0.0)) {
        throw std::invalid_argument("non-positive sizing for transistor '" + name + "'");
    }
    return it->second;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string to_string(CellKind kind) {
    switch (kind) {
        case CellKind::Conv6T: return "CONV6T";
        case CellKind::IA6T: return "IA6T";
        case CellKind::WRE9T: return "WRE9T";
        case CellKind::WRE8T: return "WRE8T";
        case CellKind::ST2: return "ST2";
        case CellKind::WEN: return "WEN";
        case CellKind::ReadPathWRE9T: return "READPATH_WRE9T";
        case CellKind::ReadPathVerlika: return "READPATH_VERLIKA";
        case CellKind::ReadPathChang: return "READPATH_CHANG";
        case CellKind::HailongColumn: return "HAILONG_COLUMN";
    }
    return "UNKNOWN";
}

CellKind parse_cell_kind(const std::string& text) {
    const std::string t = lower(text);
    for (CellKind k : {CellKind::Conv6T, CellKind::IA6T, CellKind::WRE9T, CellKind::WRE8T, CellKind::ST2,
                       CellKind::WEN, CellKind::ReadPathWRE9T, CellKind::ReadPathVerlika,
                       CellKind::ReadPathChang, CellKind::HailongColumn}) {
        if (lower(to_string(k)) == t) return k;
    }
    if (t == "6t") return CellKind::Conv6T;
    if (t == "9t") return CellKind::WRE9T;
    throw std::invalid_argument("unknown cell kind '" + text + "'");
}

CellDescriptor CellDescriptor::make(CellKind kind, double vdd) {
    CellDescriptor d;
    d.kind = kind;
    d.vdd = vdd;
    d.nmos = circuit_card(Polarity::N);
    d.pmos = circuit_card(Polarity::P);
    // Ratios below one lengthen the channel at minimum width.
    for (const auto& m : cell_template(kind)) {
        d.sizing[m.name] = m.aspect >= 1.0 ? TransistorSize{m.aspect * kMinL, kMinL} : TransistorSize{kMinL, kMinL / m.aspect};
    }
    return d;
}

CellPorts ports_of(CellKind kind) {
    CellPorts p;
    switch (kind) {
        case CellKind::Conv6T:
        case CellKind::IA6T:
        case CellKind::ST2:
            p.wl = "WL";
            p.bl = "BL";
            p.blb = "BLB";
            p.q = "Q";
            p.qb = "QB";
            break;
        case CellKind::WRE9T:
            p.wwl = "WWL";
            p.wbl = "WBL";
            p.rwl = "RWL";
            p.rbl = "RBL";
            p.q = "Q";
            p.qb = "QB";
            p.qc = "Qc";
            p.vddc = "VDDC";
            p.gndc = "GNDC";
            break;
        case CellKind::WRE8T:
            p.wwl = "WWL";
            p.wbl = "WBL";
            p.rwl = "RWLB";
            p.rbl = "RBL";
            p.q = "Q";
            p.qb = "QB";
            break;
        case CellKind::WEN:
            p.wwl = "WWL";
            p.wbl = "WBL";
            p.rwl = "RWL";
            p.rbl = "RBL";
            p.q = "Q";
            p.qb = "QB";
            break;
        case CellKind::ReadPathWRE9T:
            p.rwl = "RWL";
            p.rbl = "RBL";
            p.qc = "Qc";
            p.sn = "SN";
            p.read_on_q_low = false;
            break;
        case CellKind::ReadPathVerlika:
        case CellKind::ReadPathChang:
        case CellKind::HailongColumn:
            p.rwl = "RWL";
            p.rbl = "RBL";
            p.sn = "SN";
            p.read_on_q_low = false;
            break;
    }
    return p;
}

int transistor_count(CellKind kind) {
    switch (kind) {
        case CellKind::Conv6T:
        case CellKind::IA6T: return 6;
        case CellKind::WRE9T: return 9;
        case CellKind::WRE8T: return 8;
        case CellKind::ST2: return 10;
        case CellKind::WEN: return 8;
        // Fixtures count their N-type read-stack devices.
        case CellKind::ReadPathWRE9T:
        case CellKind::ReadPathVerlika: return 3;
        case CellKind::ReadPathChang: return 2;
        case CellKind::HailongColumn: return 3;
    }
    return 0;
}

bool is_read_path_fixture(CellKind kind) {
    return kind == CellKind::ReadPathWRE9T || kind == CellKind::ReadPathVerlika ||
           kind == CellKind::ReadPathChang || kind == CellKind::HailongColumn;
}

bool has_virtual_rails(CellKind kind) { return kind == CellKind::WRE9T; }

Netlist build_cell(const CellDescriptor& desc) {
    const auto tmpl = cell_template(desc.kind);
    Netlist n;
    add_models(n, desc);
    const bool switched = has_virtual_rails(desc.kind);

    auto bind = [&](const std::string& node) -> std::string {
        if (!switched) {
            if (node == "VDDC") return "VDD";
            if (node == "GNDC") return "0";
        }
        return node;
    };
    for (const auto& m : tmpl) {
        add_device(n, "M" + m.name, bind(m.d), bind(m.g), bind(m.s), bind(m.b), m.pol, size_of(desc, m.name));
    }
    const TransistorSize sw{desc.switch_aspect * kMinL, kMinL};
    if (switched) {
        add_device(n, "MSWH", "VDDC", "SWH", "VDD", "VDD", Polarity::P, sw);
        add_device(n, "MSWL", "GNDC", "SWL", "0", "0", Polarity::N, sw);
    }

    n.add_source("VVDD", "VDD", kGround, SourceValue::constant(desc.vdd));
    for (const auto& port : external_ports(tmpl)) {
        n.add_source("V" + port, port, kGround, SourceValue::constant(inactive_level(port, desc.vdd)));
        if (kBitLines.contains(port) && desc.bitline_cap > 0.0) {
            n.add_capacitor("C" + port, port, kGround, desc.bitline_cap);
        }
    }
    if (switched) {
        n.add_source("VSWH", "SWH", kGround, SourceValue::constant(0.0));
        n.add_source("VSWL", "SWL", kGround, SourceValue::constant(desc.vdd));
        n.add_capacitor("CVDDC", "VDDC", kGround, desc.rail_cap);
        n.add_capacitor("CGNDC", "GNDC", kGround, desc.rail_cap);
    }
    for (const auto& node : internal_nodes(tmpl)) {
        n.add_capacitor("C" + node, node, kGround, desc.node_cap);
    }
    const CellPorts ports = ports_of(desc.kind);
    if (!ports.q.empty()) {
        n.initial_conditions[ports.q] = desc.stored_one ? desc.vdd : 0.0;
        n.initial_conditions[ports.qb] = desc.stored_one ? 0.0 : desc.vdd;
    }
    n.validate();
    return n;
}

int series_nmos_path_length(const Netlist& n, const std::string& from, const std::string& to) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& i : n.instances) {
        if (i.kind != InstanceKind::Mos) continue;
        if (n.models.at(i.model).polarity != Polarity::N) continue;
        adj[i.nodes[0]].push_back(i.nodes[2]);
        adj[i.nodes[2]].push_back(i.nodes[0]);
    }
    std::map<std::string, int> dist{{from, 0}};
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
        const std::string cur = queue.front();
        queue.pop_front();
        if (cur == to) return dist[cur];
        for (const auto& nb : adj[cur]) {
            if (!dist.contains(nb)) {
                dist[nb] = dist[cur] + 1;
                queue.push_back(nb);
            }
        }
    }
    return -1;
}

void check_structure(const Netlist& n, CellKind kind) {
    const bool fixture = is_read_path_fixture(kind);
    int count = 0;
    for (const auto& i : n.instances) {
        if (i.kind != InstanceKind::Mos || i.name.rfind("MSW", 0) == 0) continue;
        if (fixture && n.models.at(i.model).polarity != Polarity::N) continue;
        ++count;
    }
    if (count != transistor_count(kind)) {
        throw NetlistError(to_string(kind) + ": expected " + std::to_string(transistor_count(kind)) +
                           " transistors, found " + std::to_string(count));
    }
    const CellPorts p = ports_of(kind);
    if (kind == CellKind::WRE9T || kind == CellKind::ReadPathWRE9T) {
        if (series_nmos_path_length(n, p.rbl, kGround) != 3) {
            throw NetlistError(to_string(kind) + ": read path must have three series NMOS devices");
        }
        bool pmos_at_qc = false;
        for (const auto& i : n.instances) {
            if (i.kind == InstanceKind::Mos && n.models.at(i.model).polarity == Polarity::P &&
                (i.nodes[0] == p.qc || i.nodes[2] == p.qc) && (i.nodes[0] == "VDD" || i.nodes[2] == "VDD")) {
                pmos_at_qc = true;
            }
        }
        if (!pmos_at_qc) throw NetlistError(to_string(kind) + ": missing PMOS from supply to Qc");
    }
    if (kind == CellKind::ReadPathChang && series_nmos_path_length(n, p.rbl, kGround) != 2) {
        throw NetlistError("READPATH_CHANG: read path must have two series devices");
    }
    if (kind == CellKind::ReadPathVerlika) {
        if (series_nmos_path_length(n, p.rbl, kGround) != 3) {
            throw NetlistError("READPATH_VERLIKA: read path must have three series devices");
        }
        for (const auto& i : n.instances) {
            if (i.kind == InstanceKind::Mos && n.models.at(i.model).polarity == Polarity::P) {
                throw NetlistError("READPATH_VERLIKA: unexpected pull-up device " + i.name);
            }
        }
    }
}

std::string to_string(RailArch arch) {
    switch (arch) {
        case RailArch::A: return "A";
        case RailArch::B: return "B";
        case RailArch::C: return "C";
        case RailArch::None: return "none";
    }
    return "?";
}

RailArch parse_rail_arch(const std::string& text) {
    const std::string t = lower(text);
    if (t == "a") return RailArch::A;
    if (t == "b") return RailArch::B;
    if (t == "c") return RailArch::C;
    if (t == "none") return RailArch::None;
    throw std::invalid_argument("unknown rail architecture '" + text + "'");
}

std::string column_node(int i, const std::string& port) { return "c" + std::to_string(i) + "." + port; }

CellPorts column_ports(CellKind kind, int selected) {
    CellPorts p = ports_of(kind);
    for (std::string* node : {&p.q, &p.qb, &p.qc}) {
        if (!node->empty()) *node = column_node(selected, *node);
    }
    return p;
}

Netlist compose_column(const CellDescriptor& cell, int count, const std::vector<bool>& pattern, RailArch arch,
                       double bitline_cap, const ColumnOptions& opts) {
    if (count < 1) throw std::invalid_argument("compose_column: n must be >= 1");
    if (static_cast<int>(pattern.size()) != count) {
        throw std::invalid_argument("compose_column: pattern length must equal n");
    }
    if (opts.selected < 0 || opts.selected >= count) {
        throw std::invalid_argument("compose_column: selected row out of range");
    }
    if (!(bitline_cap > 0.0)) throw std::invalid_argument("compose_column: bitline capacitance must be > 0");
    const auto tmpl = cell_template(cell.kind);
    if (is_read_path_fixture(cell.kind)) {
        throw std::invalid_argument("compose_column: unsupported kind " + to_string(cell.kind));
    }
    if (!uses_rails(tmpl) && arch != RailArch::None) {
        throw std::invalid_argument("compose_column: " + to_string(cell.kind) + " has no virtual rails; arch " +
                                    to_string(arch) + " unsupported");
    }

    Netlist n;
    add_models(n, cell);
    const TransistorSize sw{cell.switch_aspect * kMinL, kMinL};
    const bool shared_rail = arch == RailArch::A || arch == RailArch::B;

    auto rail_node = [&](int i, const std::string& rail) -> std::string {
        if (arch == RailArch::None) return rail == "VDDC" ? "VDD" : "0";
        if (rail == "GNDC" && !opts.float_ground_rail) return "0";
        return shared_rail ? rail : column_node(i, rail);
    };

    std::set<std::string> wordlines_used;
    for (int i = 0; i < count; ++i) {
        const bool sel = i == opts.selected;
        auto bind = [&](const std::string& node) -> std::string {
            if (node == "0" || node == "VDD") return node;
            if (node == "VDDC" || node == "GNDC") return rail_node(i, node);
            if (kBitLines.contains(node)) return node;
            if (kWordLines.contains(node)) {
                wordlines_used.insert(node);
                return sel ? node : node + "U";
            }
            return column_node(i, node);
        };
        const CellPorts ports = ports_of(cell.kind);
        for (const auto& m : tmpl) {
            std::string src = bind(m.s);
            if (opts.left_inverter_rail && m.d == ports.qb && (m.s == "VDDC" || m.s == "GNDC")) {
                src = m.s == "VDDC" ? "VDD" : "0";
            }
            add_device(n, "M" + column_node(i, m.name), bind(m.d), bind(m.g), src, bind(m.b), m.pol,
                       size_of(cell, m.name));
        }
        for (const auto& node : internal_nodes(tmpl)) {
            n.add_capacitor("C" + column_node(i, node), column_node(i, node), kGround, cell.node_cap);
        }
        n.initial_conditions[column_node(i, ports.q)] = pattern[i] ? cell.vdd : 0.0;
        n.initial_conditions[column_node(i, ports.qb)] = pattern[i] ? 0.0 : cell.vdd;
        if (arch == RailArch::C) {
            const std::string h = sel ? "SWH" : "SWHU";
            const std::string l = sel ? "SWL" : "SWLU";
            add_device(n, "MSWH" + std::to_string(i), rail_node(i, "VDDC"), h, "VDD", "VDD", Polarity::P, sw);
            n.add_capacitor("C" + rail_node(i, "VDDC"), rail_node(i, "VDDC"), kGround, cell.rail_cap);
            if (opts.float_ground_rail) {
                add_device(n, "MSWL" + std::to_string(i), rail_node(i, "GNDC"), l, "0", "0", Polarity::N, sw);
                n.add_capacitor("C" + rail_node(i, "GNDC"), rail_node(i, "GNDC"), kGround, cell.rail_cap);
            }
        }
    }
    if (shared_rail) {
        // A column rail runs the height of the column like a bitline.
        const double cap = cell.rail_cap + count * bitline_cap;
        add_device(n, "MSWH", "VDDC", "SWH", "VDD", "VDD", Polarity::P, sw);
        n.add_capacitor("CVDDC", "VDDC", kGround, cap);
        if (opts.float_ground_rail) {
            add_device(n, "MSWL", "GNDC", "SWL", "0", "0", Polarity::N, sw);
            n.add_capacitor("CGNDC", "GNDC", kGround, cap);
        }
    }

    n.add_source("VVDD", "VDD", kGround, SourceValue::constant(cell.vdd));
    for (const auto& port : external_ports(tmpl)) {
        const double level = inactive_level(port, cell.vdd);
        n.add_source("V" + port, port, kGround, SourceValue::constant(level));
        if (kBitLines.contains(port)) {
            n.add_capacitor("C" + port, port, kGround, count * bitline_cap);
        } else if (kWordLines.contains(port) && count > 1) {
            n.add_source("V" + port + "U", port + "U", kGround, SourceValue::constant(level));
        }
    }
    if (arch != RailArch::None) {
        n.add_source("VSWH", "SWH", kGround, SourceValue::constant(0.0));
        if (opts.float_ground_rail) n.add_source("VSWL", "SWL", kGround, SourceValue::constant(cell.vdd));
        if (arch == RailArch::C && count > 1) {
            n.add_source("VSWHU", "SWHU", kGround, SourceValue::constant(0.0));
            if (opts.float_ground_rail) n.add_source("VSWLU", "SWLU", kGround, SourceValue::constant(cell.vdd));
        }
    }
    n.validate();
    return n;
}

}  // namespace ntsram
