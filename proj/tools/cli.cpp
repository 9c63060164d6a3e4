#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

#include "ntsram/array_model.hpp"
#include "ntsram/characterization.hpp"
#include "ntsram/variation.hpp"

namespace ntsram::cli {

using nlohmann::json;

// ---------------------------------------------------------------- tables

json Table::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) rows_json.push_back(r);
    return {{"columns", columns}, {"rows", rows_json}};
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number()) return format_number(v.get<double>());
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

std::string to_csv(const Table& t, const std::vector<std::string>& preamble) {
    std::ostringstream os;
    for (const auto& line : preamble) os << "# " << line << '\n';
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << csv_cell(r[j]);
        os << '\n';
    }
    return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ---------------------------------------------------------------- run configuration

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Options {
    std::string command;
    std::string cell;
    std::string netlist;
    double vdd = 0.5;
    double temp = 300.0;
    std::string spec = "default";
    int n = 1000;
    std::uint64_t seed = 1;
    int threads = 0;
    double cycle = 100e-9;
    std::string out;
    std::string format = "json";
    double k_margin = 1.0;
    std::string arch;
    std::int64_t cells_per_bl = 0;

    // snm / mc
    std::string mode = "read";
    double step = 1e-3;
    // sweep
    std::string source;
    double from = kUnset;
    double to = kUnset;
    int steps = 101;
    std::vector<std::string> observe;
    // mc
    std::string metric = "snm";
    // vddmin
    double p_target = 1e-2;
    double grid = 0.005;
    double v_low = 0.1;
    double v_high = 1.2;
    // decay / column
    double window = 120e-9;
    double dt = 0.5e-9;
    double bitline_cap = 0.5e-15;
    std::string analysis = "ops";
    std::string scenario;
    std::string pattern = "0";
    int selected = 0;
    int trials = 50;
    int row_width = 8;
    bool no_writeback = false;
    double bystander_level = 0.0;
    // block / compare
    std::string a = "wre9t";
    std::string b = "conv6t";
    std::string block = "256k";
    double vdd_a = kUnset;
    double vdd_b = kUnset;
    std::int64_t cpb_a = 0;
    std::int64_t cpb_b = 0;
    std::int64_t max_cpb = 1024;
    bool derive_cpb = false;
};

struct Report {
    json config;
    json models = json::object();
    json results = json::object();
    Table summary;
    std::vector<std::pair<std::string, Table>> curves;
    bool analysis_failed = false;  // results are complete but report a failure
};

json card_json(const DeviceParams& p) {
    return {{"polarity", to_string(p.polarity)}, {"vt0", p.vt0},     {"is", p.is},
            {"swing", p.swing},                  {"lambda", p.lambda}, {"eta", p.eta},
            {"gamma", p.gamma},                  {"phi_f", p.phi_f}, {"w", p.w},
            {"l", p.l},                          {"t_ref", p.t_ref}, {"is_temp_exponent", p.is_temp_exponent}};
}

json models_json(const Netlist& n) {
    json j = json::object();
    for (const auto& [name, p] : n.models) j[name] = card_json(p);
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

double or_default(double v, double fallback) { return std::isnan(v) ? fallback : v; }

SolverOptions solver_options(const Options& o) {
    SolverOptions s;
    s.temp_kelvin = o.temp;
    return s;
}

CellKind cell_kind(const Options& o) {
    if (!o.netlist.empty()) throw UsageError(o.command + " needs a built-in cell (--cell), not --netlist");
    return parse_cell_kind(o.cell.empty() ? "wre9t" : o.cell);
}

Dut subject(const Options& o) {
    if (!o.netlist.empty()) {
        Netlist n = parse_netlist(read_file(o.netlist));
        n.validate();
        return make_netlist_dut(std::move(n), o.netlist);
    }
    if (o.cell.empty()) throw UsageError(o.command + " needs --cell or --netlist");
    return make_dut(CellDescriptor::make(parse_cell_kind(o.cell), o.vdd));
}

RailArch arch_or(const Options& o, RailArch fallback) { return o.arch.empty() ? fallback : parse_rail_arch(o.arch); }

std::int64_t parse_bits(const std::string& text) {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    const std::string suffix = text.substr(pos);
    if (suffix.empty()) return v;
    if (suffix == "k" || suffix == "K") return v * 1024;
    if (suffix == "M") return v * 1024 * 1024;
    throw UsageError("bad block size '" + text + "' (expected e.g. 256k)");
}

json config_json(const Options& o) {
    json j{{"command", o.command}, {"vdd", o.vdd},   {"temp", o.temp},         {"spec", o.spec},
           {"n", o.n},             {"seed", o.seed}, {"cycle", o.cycle},       {"format", o.format},
           {"k_margin", o.k_margin}, {"arch", o.arch}, {"cells_per_bl", o.cells_per_bl}};
    if (!o.netlist.empty()) j["netlist"] = o.netlist;
    else j["cell"] = o.cell;
    const std::string& c = o.command;
    if (c == "snm" || c == "mc") {
        j["mode"] = o.mode;
        j["step"] = o.step;
    }
    if (c == "sweep") {
        j["source"] = o.source;
        j["from"] = o.from;
        j["to"] = o.to;
        j["steps"] = o.steps;
        j["observe"] = o.observe;
    }
    if (c == "mc") j["metric"] = o.metric;
    if (c == "vddmin") {
        j["p_target"] = o.p_target;
        j["grid"] = o.grid;
        j["v_low"] = o.v_low;
        j["v_high"] = o.v_high;
    }
    if (c == "decay" || c == "column") {
        j["window"] = o.window;
        j["dt"] = o.dt;
        j["bitline_cap"] = o.bitline_cap;
    }
    if (c == "column") {
        j["analysis"] = o.analysis;
        j["scenario"] = o.scenario;
        j["pattern"] = o.pattern;
        j["selected"] = o.selected;
        j["trials"] = o.trials;
        j["row_width"] = o.row_width;
        j["writeback"] = !o.no_writeback;
        j["bystander_level"] = o.bystander_level;
    }
    if (c == "compare" || c == "block") {
        j["a"] = o.a;
        j["b"] = o.b;
        j["block"] = o.block;
        j["vdd_a"] = o.vdd_a;
        j["vdd_b"] = o.vdd_b;
        j["cells_per_bl_a"] = o.cpb_a;
        j["cells_per_bl_b"] = o.cpb_b;
        j["max_cells_per_bl"] = o.max_cpb;
        j["derive_cells_per_bl"] = o.derive_cpb;
    }
    return j;
}

Table single_row(const json& obj, const std::vector<std::string>& keys) {
    Table t;
    t.columns = keys;
    std::vector<json> row;
    for (const auto& k : keys) row.push_back(obj.contains(k) ? obj.at(k) : json());
    t.rows.push_back(row);
    return t;
}

// ---------------------------------------------------------------- commands

void cmd_op(const Options& o, Report& r) {
    const Dut dut = subject(o);
    Netlist n = dut.netlist;
    retarget_supply(n, o.vdd);
    const OperatingPoint op = dc_operating_point(n, {}, solver_options(o));
    r.models = models_json(n);
    r.results = {{"voltages", op.voltages},
                 {"currents", op.currents},
                 {"iterations", op.iterations},
                 {"method", op.method},
                 {"residual", op.residual}};
    r.summary.columns = {"node", "voltage"};
    for (const auto& [node, v] : op.voltages) r.summary.rows.push_back({node, v});
    Table currents{{"instance", "current"}, {}};
    for (const auto& [name, i] : op.currents) currents.rows.push_back({name, i});
    r.curves.emplace_back("currents", std::move(currents));
}

void cmd_sweep(const Options& o, Report& r) {
    if (o.source.empty()) throw UsageError("sweep needs --source");
    if (o.steps < 2) throw UsageError("--steps must be >= 2");
    const Dut dut = subject(o);
    Netlist n = dut.netlist;
    retarget_supply(n, o.vdd);
    std::vector<std::string> observe = o.observe;
    if (observe.empty()) {
        if (!dut.ports.q.empty()) observe = {dut.ports.q, dut.ports.qb};
        else observe = n.nodes();
    }
    const double from = or_default(o.from, 0.0);
    const double to = or_default(o.to, o.vdd);
    const SweepResult s = dc_sweep(n, o.source, from, to, o.steps, observe, solver_options(o));
    r.models = models_json(n);
    r.results = {{"source", s.source}, {"points", s.values.size()}, {"flips", s.flips}};
    r.summary.columns = {s.source};
    for (const auto& node : s.observe) r.summary.columns.push_back(node);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        std::vector<json> row{s.values[k]};
        for (double v : s.samples[k]) row.push_back(v);
        r.summary.rows.push_back(std::move(row));
    }
    r.curves.emplace_back("sweep", r.summary);
}

SnmMode parse_snm_mode(const std::string& s) {
    if (s == "hold") return SnmMode::Hold;
    if (s == "read") return SnmMode::Read;
    if (s == "write") return SnmMode::Write;
    throw UsageError("unknown SNM mode '" + s + "' (hold, read, write)");
}

void cmd_snm(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const SnmResult s = snm(dut, parse_snm_mode(o.mode), o.vdd, {o.step, solver_options(o)});
    r.models = models_json(dut.netlist);
    r.results = to_json(s);
    r.summary = single_row(r.results, {"mode", "lobe1", "lobe2", "snm", "collapsed"});
    Table b{{"curve", "q", "qb"}, {}};
    for (std::size_t k = 0; k < s.vtc_qb_of_q.x.size(); ++k) {
        b.rows.push_back({"qb_of_q", s.vtc_qb_of_q.x[k], s.vtc_qb_of_q.y[k]});
    }
    for (std::size_t k = 0; k < s.vtc_q_of_qb.x.size(); ++k) {
        b.rows.push_back({"q_of_qb", s.vtc_q_of_qb.x[k], s.vtc_q_of_qb.y[k]});
    }
    r.curves.emplace_back("butterfly", std::move(b));
}

void cmd_wnm(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const WnmResult w = wnm(dut, o.vdd, {o.step, solver_options(o)});
    r.models = models_json(dut.netlist);
    r.results = to_json(w);
    r.summary = single_row(r.results, {"write0", "write1", "wnm"});
}

json capacity_json(const BitlineCapacity& c) {
    return {{"cells_per_bitline", c.n}, {"raw", c.raw}, {"slack", c.slack}, {"diagnostic", c.diagnostic}};
}

void cmd_ionioff(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const ReadPathMetrics m = ion_ioff(dut, o.vdd, o.temp, solver_options(o));
    const BitlineCapacity c = max_cells_per_bitline(m, o.k_margin);
    r.models = models_json(dut.netlist);
    r.results = to_json(m);
    r.results["capacity"] = capacity_json(c);
    r.summary = single_row(r.results, {"ion", "ioff", "ratio", "vdd", "temp"});
    r.summary.columns.push_back("cells_per_bitline");
    r.summary.rows[0].push_back(c.n);
}

void cmd_leakage(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const LeakageResult l = leakage_power(dut, o.vdd, o.temp, solver_options(o));
    r.models = models_json(dut.netlist);
    r.results = to_json(l);
    r.summary = single_row(r.results, {"stored0", "stored1", "worst"});
}

void cmd_power(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const SolverOptions so = solver_options(o);
    const OpTiming timing{o.cycle, o.cycle / 200.0};
    r.models = models_json(dut.netlist);
    r.summary.columns = {"operation", "power"};
    const bool can_write = !dut.ports.wbl.empty() || !dut.ports.bl.empty();
    const bool can_read = !dut.ports.rbl.empty() || !dut.ports.bl.empty();
    if (can_write) {
        const double w0 = operation_power(dut, Operation::Write0, o.vdd, timing, so);
        const double w1 = operation_power(dut, Operation::Write1, o.vdd, timing, so);
        r.summary.rows.push_back({"write0", w0});
        r.summary.rows.push_back({"write1", w1});
        r.summary.rows.push_back({"write", 0.5 * (w0 + w1)});
    }
    if (can_read) r.summary.rows.push_back({"read", operation_power(dut, Operation::Read, o.vdd, timing, so)});
    r.summary.rows.push_back({"leakage", leakage_power(dut, o.vdd, o.temp, so).worst});
    for (const auto& row : r.summary.rows) r.results[row[0].get<std::string>()] = row[1];
}

void cmd_decay(const Options& o, Report& r) {
    const CellKind kind = cell_kind(o);
    const int n = static_cast<int>(o.cells_per_bl > 0 ? o.cells_per_bl : 64);
    const RailArch arch = arch_or(o, has_virtual_rails(kind) ? RailArch::C : RailArch::None);
    const CellDescriptor desc = CellDescriptor::make(kind, o.vdd);
    // Unselected cells store the value that leaks onto the bitline.
    const std::vector<bool> pattern(static_cast<std::size_t>(n), !ports_of(kind).read_on_q_low);
    const Dut column = make_column_dut(desc, n, pattern, arch, o.bitline_cap);
    const DecayResult d = bitline_decay(column, o.vdd, o.window, o.dt, solver_options(o));
    r.models = models_json(column.netlist);
    r.results = {{"bitline", d.bitline}, {"droop", d.droop}, {"window", o.window}, {"cells", n}, {"arch", to_string(arch)}};
    r.summary = single_row(r.results, {"bitline", "droop", "window", "cells", "arch"});
    Table w{{"time"}, {}};
    for (const auto& node : d.wave.observe) w.columns.push_back(node);
    for (std::size_t k = 0; k < d.wave.time.size(); ++k) {
        std::vector<json> row{d.wave.time[k]};
        for (const auto& v : d.wave.voltages) row.push_back(v[k]);
        w.rows.push_back(std::move(row));
    }
    r.curves.emplace_back("waveform", std::move(w));
}

McOptions mc_options(const Options& o) {
    McOptions m;
    m.n = o.n;
    m.seed = o.seed;
    m.threads = o.threads;
    return m;
}

void cmd_mc(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const VariationSpec spec = load_variation_spec(o.spec);
    MetricSpec metric;
    metric.kind = parse_metric(o.metric);
    metric.snm_mode = parse_snm_mode(o.mode);
    metric.snm.step = o.step;
    metric.snm.solver = solver_options(o);
    const McDistribution d = mc_distribution(dut, metric, o.vdd, o.temp, spec, mc_options(o));
    r.config["variation"] = to_json(spec);
    r.models = models_json(dut.netlist);
    r.results = to_json(d, true);
    r.summary.columns = {"mean", "sigma", "min", "max", "censored"};
    r.summary.rows.push_back({d.mean, d.sigma, d.min, d.max, d.censored.size()});
    Table s{{"trial", "value"}, {}};
    for (std::size_t i = 0; i < d.samples.size(); ++i) s.rows.push_back({i, d.samples[i]});
    r.curves.emplace_back("samples", std::move(s));
}

void cmd_vddmin(const Options& o, Report& r) {
    const Dut dut = subject(o);
    const VariationSpec spec = load_variation_spec(o.spec);
    VddminOptions v;
    v.p_target = o.p_target;
    v.grid = o.grid;
    v.v_low = o.v_low;
    v.v_high = o.v_high;
    v.failure.n = o.n;
    v.failure.seed = o.seed;
    v.failure.threads = o.threads;
    v.failure.temp_kelvin = o.temp;
    v.failure.timing = {o.cycle, o.cycle / 200.0};
    const VddminResult res = vddmin_search(dut, spec, v);
    r.config["variation"] = to_json(spec);
    r.models = models_json(dut.netlist);
    r.results = to_json(res);
    r.summary.columns = {"operation", "reachable", "vmin", "p", "ci_low", "ci_high", "mode", "alternate_p", "monotone"};
    for (const auto& row : res.rows) {
        r.summary.rows.push_back({to_string(row.op), row.reachable, row.vmin, row.estimate.p, row.estimate.ci_low,
                                  row.estimate.ci_high, to_string(row.estimate.mode), row.alternate.p, row.monotone});
    }
    r.summary.rows.push_back({"overall", res.reachable, res.overall, json(), json(), json(), to_string(res.mode),
                              json(), json()});
    r.analysis_failed = !res.reachable;
}

void column_ops(const Options& o, Report& r) {
    ColumnScenario s;
    if (!o.scenario.empty()) {
        s = load_column_scenario(o.scenario);
    } else {
        s.kind = cell_kind(o);
        s.n = static_cast<int>(o.cells_per_bl > 0 ? o.cells_per_bl : 8);
        s.arch = arch_or(o, has_virtual_rails(s.kind) ? RailArch::C : RailArch::None);
        s.selected = o.selected;
        s.vdd = o.vdd;
        s.temp_kelvin = o.temp;
        s.bitline_cap = o.bitline_cap;
        std::string text = "cell = " + to_string(s.kind) + "\nn = " + std::to_string(s.n) + "\narch = " +
                           to_string(s.arch) + "\npattern = " + o.pattern + "\nselected = " + std::to_string(s.selected);
        s.pattern = parse_column_scenario(text).pattern;
    }
    const Dut d = make_scenario_dut(s);
    const SolverOptions so = solver_options(o);
    const OpTiming timing{o.cycle, o.cycle / 200.0};
    r.models = models_json(d.netlist);
    std::string pattern;
    for (bool b : s.pattern) pattern += b ? '1' : '0';
    r.results = {{"cell", to_string(s.kind)}, {"n", s.n},        {"arch", to_string(s.arch)},
                 {"pattern", pattern},        {"selected", s.selected}, {"vdd", s.vdd}};
    r.summary.columns = {"operation", "pass", "margin", "power", "q_end", "qb_end", "development"};
    json ops = json::array();
    bool all_pass = true;
    for (Operation op : {Operation::Write0, Operation::Write1, Operation::Read, Operation::Access}) {
        const OpCheckResult c = dynamic_op_check(d, op, s.vdd, timing, so);
        all_pass = all_pass && c.pass;
        ops.push_back(to_json(c));
        r.summary.rows.push_back({to_string(op), c.pass, c.margin, c.power, c.q_end, c.qb_end, c.development});
    }
    r.results["operations"] = ops;
    r.results["pass"] = all_pass;
}

void column_sneaky(const Options& o, Report& r) {
    SneakyFixture f = default_sneaky_fixture();
    if (o.cells_per_bl > 0) f.cells = static_cast<int>(o.cells_per_bl);
    const RailArch arch = arch_or(o, RailArch::B);
    const OpTiming timing{o.cycle, o.cycle / 200.0};
    const double c1 = sneaky_current_power(arch, SneakyCase::Case1, o.vdd, f, timing, solver_options(o));
    const double c2 = sneaky_current_power(arch, SneakyCase::Case2, o.vdd, f, timing, solver_options(o));
    r.models = models_json(build_cell(f.cell));
    r.results = {{"arch", to_string(arch)}, {"cells", f.cells}, {"case1", c1}, {"case2", c2}, {"ratio", c1 / c2}};
    r.summary = single_row(r.results, {"arch", "cells", "case1", "case2", "ratio"});
}

void column_half_select(const Options& o, Report& r) {
    const CellKind kind = cell_kind(o);
    const RailArch arch = arch_or(o, RailArch::B);
    const VariationSpec spec = load_variation_spec(o.spec);
    const int cells = static_cast<int>(o.cells_per_bl > 0 ? o.cells_per_bl : 4);
    const HalfSelectResult h = half_select_analysis(arch, kind, o.vdd, spec, mc_options(o), cells);
    r.config["variation"] = to_json(spec);
    r.models = models_json(build_cell(CellDescriptor::make(kind, o.vdd)));
    r.results = to_json(h);
    r.summary.columns = {"cell_state", "mean", "sigma", "min", "max"};
    for (const auto& [name, d] : {std::pair{"half_selected", &h.half_selected}, std::pair{"not_selected", &h.not_selected}}) {
        r.summary.rows.push_back({name, d->mean, d->sigma, d->min, d->max});
    }
}

void column_writeback(const Options& o, Report& r) {
    const CellKind kind = cell_kind(o);
    const CellDescriptor desc = CellDescriptor::make(kind, o.vdd);
    WritebackOptions w;
    w.scheme_enabled = !o.no_writeback;
    w.bystander_level = o.bystander_level;
    w.timing = {o.cycle, o.cycle / 200.0};
    w.solver = solver_options(o);
    const WritebackCampaign c = writeback_campaign(desc, o.vdd, o.trials, o.row_width, o.seed, w);
    r.models = models_json(build_cell(desc));
    r.results = to_json(c);
    r.summary.columns = {"trial", "before", "addr", "data", "after", "pass", "flips"};
    for (std::size_t t = 0; t < c.results.size(); ++t) {
        const json j = to_json(c.results[t]);
        r.summary.rows.push_back({t, j["before"], j["addr"], j["data"], j["after"], j["pass"], c.results[t].disturbed.size()});
    }
}

void cmd_column(const Options& o, Report& r) {
    if (o.analysis == "ops") column_ops(o, r);
    else if (o.analysis == "sneaky") column_sneaky(o, r);
    else if (o.analysis == "half-select") column_half_select(o, r);
    else if (o.analysis == "writeback") column_writeback(o, r);
    else throw UsageError("unknown column analysis '" + o.analysis + "' (ops, sneaky, half-select, writeback)");
}

// Column height from the worst-case read-path ratio, capped at `max_cpb` and
// at the block size.
std::int64_t auto_cells_per_bl(CellKind kind, double vdd, const Options& o, std::int64_t total_bits) {
    const Dut dut = make_dut(CellDescriptor::make(kind, vdd));
    const ReadPathMetrics m = ion_ioff(dut, vdd, o.temp, solver_options(o));
    const BitlineCapacity c = max_cells_per_bitline(m, o.k_margin);
    if (c.n == 0) throw std::runtime_error(to_string(kind) + ": " + c.diagnostic);
    return std::min({c.n, o.max_cpb, total_bits});
}

BlockConfig block_config(CellKind kind, double vdd, std::int64_t cpb, const Options& o, std::int64_t bits) {
    if (cpb <= 0) {
        cpb = o.derive_cpb ? auto_cells_per_bl(kind, vdd, o, bits) : std::min(reference_cells_per_bitline(kind), bits);
    }
    BlockConfig cfg = default_block_config(kind, cpb);
    cfg.total_bits = bits;
    cfg.vdd = vdd;
    cfg.temp_kelvin = o.temp;
    cfg.cycle = o.cycle;
    cfg.validate();
    return cfg;
}

void cmd_block(const Options& o, Report& r) {
    const CellKind kind = cell_kind(o);
    const std::int64_t bits = parse_bits(o.block);
    const BlockConfig cfg = block_config(kind, o.vdd, o.cells_per_bl, o, bits);
    const BlockMetrics m = evaluate_block(cfg, solver_options(o));
    r.models = models_json(build_cell(CellDescriptor::make(kind, o.vdd)));
    r.results = {{"config", to_json(cfg)}, {"metrics", to_json(m)}};
    r.summary = single_row(to_json(m), {"read_power", "write_power", "read_delay", "write_delay", "area_mm2", "cell_leakage"});
}

void cmd_compare(const Options& o, Report& r) {
    if (!o.netlist.empty()) throw UsageError("compare works on built-in cells only");
    const std::int64_t bits = parse_bits(o.block);
    const CellKind ka = parse_cell_kind(o.a);
    const CellKind kb = parse_cell_kind(o.b);
    const BlockConfig a = block_config(ka, or_default(o.vdd_a, o.vdd), o.cpb_a, o, bits);
    const BlockConfig b = block_config(kb, or_default(o.vdd_b, o.vdd), o.cpb_b, o, bits);
    const BlockReport rep = block_report(a, b, solver_options(o));
    const AreaOverhead ov = area_overhead(a, b);
    r.models = models_json(build_cell(CellDescriptor::make(ka, a.vdd)));
    r.results = to_json(rep);
    r.results["overhead"] = {{"cell_area", ov.cell}, {"block_area", ov.block}};
    r.results["reduction"] = {{"read_power", reduction(rep.metrics_a.read_power, rep.metrics_b.read_power)},
                              {"write_power", reduction(rep.metrics_a.write_power, rep.metrics_b.write_power)}};
    r.results["markdown"] = to_markdown(rep);
    r.summary.columns = {"metric", "a", "b", "change", "log_ratio"};
    for (const auto& row : rep.rows) r.summary.rows.push_back({row.metric, row.a, row.b, row.change, row.log_ratio});
    r.summary.rows.push_back({"cell_area_um2", a.cell_area, b.cell_area, ov.cell, std::log10(a.cell_area / b.cell_area)});
}

void cmd_parse(const Options& o, Report& r) {
    Netlist n;
    if (!o.netlist.empty()) {
        n = parse_netlist(read_file(o.netlist));
    } else if (!o.cell.empty()) {
        n = build_cell(CellDescriptor::make(parse_cell_kind(o.cell), o.vdd));
    } else {
        throw UsageError("parse needs --netlist or --cell");
    }
    n.validate();
    const std::string canonical = serialize_netlist(n);
    const bool round_trip = parse_netlist(canonical) == n;
    r.models = models_json(n);
    r.results = {{"mos", n.count(InstanceKind::Mos)},
                 {"sources", n.count(InstanceKind::VoltageSource)},
                 {"capacitors", n.count(InstanceKind::Capacitor)},
                 {"nodes", n.nodes().size()},
                 {"round_trip", round_trip},
                 {"canonical", canonical}};
    r.summary = single_row(r.results, {"mos", "sources", "capacitors", "nodes", "round_trip"});
    r.analysis_failed = !round_trip;
}

// ---------------------------------------------------------------- emission

struct OutputFile {
    std::string name;
    std::string bytes;
};

std::vector<OutputFile> render(const Options& o, const Report& r) {
    const std::string hash = fnv1a_hex(r.models.dump());
    json doc{{"tool", "ntsram"},
             {"command", o.command},
             {"config", r.config},
             {"model_card", {{"cards", r.models}, {"hash", hash}}},
             {"results", r.results}};
    json curves = json::object();
    for (const auto& [name, t] : r.curves) curves[name] = t.to_json();
    doc["curves"] = curves;

    const std::vector<std::string> preamble{"tool=ntsram", "command=" + o.command, "config=" + r.config.dump(),
                                            "seed=" + std::to_string(o.seed), "model_card_hash=" + hash};
    std::vector<OutputFile> files;
    if (o.format == "json") files.push_back({o.command + ".json", doc.dump(2) + "\n"});
    else files.push_back({o.command + ".csv", to_csv(r.summary, preamble)});
    for (const auto& [name, t] : r.curves) files.push_back({o.command + "_" + name + ".csv", to_csv(t, preamble)});
    return files;
}

// Write every file or none.
void emit(const std::string& dir, const std::vector<OutputFile>& files) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    std::vector<fs::path> written;
    try {
        for (const auto& f : files) {
            const fs::path path = fs::path(dir) / f.name;
            std::ofstream os(path, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
            written.push_back(path);
            os << f.bytes;
            os.close();
            if (!os) throw std::runtime_error("write to '" + path.string() + "' failed");
        }
    } catch (...) {
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
}

void add_common(CLI::App& app, Options& o) {
    auto* cell = app.add_option("--cell", o.cell, "Built-in cell (conv6t, ia6t, wre9t, wre8t, st2, wen, readpath_*)");
    auto* net = app.add_option("--netlist", o.netlist, "User netlist file");
    cell->excludes(net);
    app.add_option("--vdd", o.vdd, "Supply voltage [V]")->check(CLI::PositiveNumber);
    app.add_option("--temp", o.temp, "Temperature [K]")->check(CLI::PositiveNumber);
    app.add_option("--spec", o.spec, "Variation spec: default, zero or a JSON file");
    app.add_option("--n", o.n, "Monte Carlo trials")->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--threads", o.threads, "Worker threads (0: all cores); never changes results")->check(CLI::NonNegativeNumber);
    app.add_option("--cycle", o.cycle, "Operation cycle [s]")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "Output directory (default: report to stdout)");
    app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--k-margin", o.k_margin, "Sense margin k for cells per bitline")->check(CLI::PositiveNumber);
    app.add_option("--arch", o.arch, "Rail architecture (A, B, C, none)");
    app.add_option("--cells-per-bl", o.cells_per_bl, "Cells per bitline")->check(CLI::PositiveNumber);
}

}  // namespace

// ---------------------------------------------------------------- entry point

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Near-threshold SRAM cell and array analysis", "ntsram"};
    app.set_config("--config", "", "TOML/INI file mirroring the flags; flags win");
    app.require_subcommand(1);
    app.fallthrough();
    add_common(app, o);

    using Handler = void (*)(const Options&, Report&);
    const std::vector<std::tuple<const char*, const char*, Handler>> commands{
        {"op", "DC operating point", cmd_op},
        {"sweep", "DC sweep of one source", cmd_sweep},
        {"snm", "Static noise margin and butterfly curves", cmd_snm},
        {"wnm", "Write noise margin", cmd_wnm},
        {"ionioff", "Read-path Ion/Ioff and cells per bitline", cmd_ionioff},
        {"leakage", "Hold leakage power", cmd_leakage},
        {"power", "Operation power per cycle", cmd_power},
        {"decay", "Read-bitline droop of a column", cmd_decay},
        {"mc", "Monte Carlo metric distribution", cmd_mc},
        {"vddmin", "Minimum supply per operation", cmd_vddmin},
        {"column", "Column analyses: ops, sneaky, half-select, writeback", cmd_column},
        {"block", "Block power, delay and area", cmd_block},
        {"compare", "Block comparison of two cells", cmd_compare},
        {"parse", "Netlist lint and round trip", cmd_parse},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help, fn] : commands) subs[name] = app.add_subcommand(name, help);

    subs["snm"]->add_option("--mode", o.mode, "hold, read or write");
    subs["mc"]->add_option("--mode", o.mode, "SNM mode for --metric snm");
    for (const char* c : {"snm", "wnm", "mc"}) subs[c]->add_option("--step", o.step, "Transfer-curve step [V]");
    auto* sweep = subs["sweep"];
    sweep->add_option("--source", o.source, "Source to sweep (e.g. VWL)");
    sweep->add_option("--from", o.from, "Start value [V] (default 0)");
    sweep->add_option("--to", o.to, "End value [V] (default VDD)");
    sweep->add_option("--steps", o.steps, "Points");
    sweep->add_option("--observe", o.observe, "Nodes to record");
    subs["mc"]->add_option("--metric", o.metric, "snm, wnm, ionioff or leakage");
    auto* vm = subs["vddmin"];
    vm->add_option("--p-target", o.p_target, "Failure probability target")->check(CLI::Range(1e-12, 0.5));
    vm->add_option("--grid", o.grid, "Voltage grid [V]")->check(CLI::PositiveNumber);
    vm->add_option("--v-low", o.v_low, "Search floor [V]");
    vm->add_option("--v-high", o.v_high, "Search ceiling [V]");
    for (const char* c : {"decay", "column"}) {
        subs[c]->add_option("--window", o.window, "Observation window [s]");
        subs[c]->add_option("--dt", o.dt, "Time step [s]");
        subs[c]->add_option("--bitline-cap", o.bitline_cap, "Bitline capacitance per cell [F]");
    }
    auto* col = subs["column"];
    col->add_option("--analysis", o.analysis, "ops, sneaky, half-select or writeback");
    col->add_option("--scenario", o.scenario, "Column scenario file (ops)");
    col->add_option("--pattern", o.pattern, "Stored bits, repeated over the column");
    col->add_option("--selected", o.selected, "Selected row");
    col->add_option("--trials", o.trials, "Write-back trials");
    col->add_option("--row-width", o.row_width, "Columns in the write-back row");
    col->add_flag("--no-writeback", o.no_writeback, "Disable the write-back scheme");
    col->add_option("--bystander-level", o.bystander_level, "Bystander write-bitline level without write-back [V]");
    for (const char* c : {"block", "compare"}) {
        subs[c]->add_option("--block", o.block, "Block size in bits (e.g. 256k)");
        subs[c]->add_option("--max-cells-per-bl", o.max_cpb, "Cap on derived column height");
        subs[c]->add_flag("--derive-cells-per-bl", o.derive_cpb,
                          "Derive column heights from Ion/Ioff instead of the reference 1024/64");
    }
    auto* cmp = subs["compare"];
    cmp->add_option("--a", o.a, "First cell");
    cmp->add_option("--b", o.b, "Second cell");
    cmp->add_option("--vdd-a", o.vdd_a, "Supply of block a [V] (default --vdd)");
    cmp->add_option("--vdd-b", o.vdd_b, "Supply of block b [V] (default --vdd)");
    cmp->add_option("--cells-per-bl-a", o.cpb_a, "Column height of block a");
    cmp->add_option("--cells-per-bl-b", o.cpb_b, "Column height of block b");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "ntsram: " << e.what() << '\n';
        return kUsageError;
    }

    Handler handler = nullptr;
    for (const auto& [name, help, fn] : commands) {
        if (subs[name]->parsed()) {
            o.command = name;
            handler = fn;
        }
    }

    try {
        Report r;
        r.config = config_json(o);
        handler(o, r);
        const auto files = render(o, r);
        if (o.out.empty()) out << files.front().bytes;
        else emit(o.out, files);
        if (r.analysis_failed) {
            err << "ntsram: " << o.command << ": analysis reported a failure\n";
            return kAnalysisFailure;
        }
        return kOk;
    } catch (const UsageError& e) {
        err << "ntsram: " << e.what() << '\n';
        return kUsageError;
    } catch (const ParseError& e) {
        err << "ntsram: " << o.netlist << ':' << e.line() << ':' << e.column() << ": " << e.what() << '\n';
        return kUsageError;
    } catch (const NetlistError& e) {
        err << "ntsram: invalid netlist: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::invalid_argument& e) {
        err << "ntsram: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "ntsram: " << o.command << " failed: " << e.what() << '\n';
        return kAnalysisFailure;
    }
}

}  // namespace ntsram::cli
