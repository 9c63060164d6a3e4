#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "ntsram/netlist.hpp"

namespace ntsram {

namespace {

struct Token {
    std::string text;
    int line;
    int column;
};

using Line = std::vector<Token>;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_separator(char c) { return c == '(' || c == ')' || c == '=' || c == ','; }

void tokenize_into(std::string_view text, int line_no, int col_offset, Line& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == ',') {
            ++i;
            continue;
        }
        if (is_separator(c)) {
            out.push_back({std::string(1, c), line_no, static_cast<int>(i) + 1 + col_offset});
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
               !is_separator(text[j])) {
            ++j;
        }
        out.push_back({std::string(text.substr(i, j - i)), line_no,
                       static_cast<int>(i) + 1 + col_offset});
        i = j;
    }
}

[[noreturn]] void fail(ParseErrorKind kind, const Token& at, const std::string& msg) {
    throw ParseError(kind, at.line, at.column, msg);
}

class LineReader {
public:
    explicit LineReader(const Line& line) : line_(line) {}

    bool done() const { return pos_ >= line_.size(); }
    const Token& peek() const { return line_[pos_]; }
    const Token& last() const { return line_.back(); }

    const Token& next(const char* what) {
        if (done()) fail(ParseErrorKind::Syntax, line_.back(), std::string("expected ") + what);
        return line_[pos_++];
    }

    void expect(const char* symbol) {
        const Token& t = next(symbol);
        if (t.text != symbol) {
            fail(ParseErrorKind::Syntax, t, std::string("expected '") + symbol + "', got '" + t.text + "'");
        }
    }

    double number(const char* what) {
        const Token& t = next(what);
        return parse_number(t.text, t.line, t.column);
    }

    // KEY = VALUE
    std::pair<Token, double> assignment() {
        Token key = next("parameter name");
        expect("=");
        const double v = number("parameter value");
        return {key, v};
    }

private:
    const Line& line_;
    std::size_t pos_ = 0;
};

DeviceParams parse_model_body(LineReader& r, const Token& type_tok) {
    const std::string type = lower(type_tok.text);
    DeviceParams p;
    if (type == "nmos") {
        p.polarity = Polarity::N;
    } else if (type == "pmos") {
        p.polarity = Polarity::P;
    } else {
        fail(ParseErrorKind::Syntax, type_tok, "model type must be NMOS or PMOS, got '" + type_tok.text + "'");
    }
    bool paren = false;
    if (!r.done() && r.peek().text == "(") {
        r.next("(");
        paren = true;
    }
    while (!r.done()) {
        if (paren && r.peek().text == ")") {
            r.next(")");
            paren = false;
            break;
        }
        auto [key, v] = r.assignment();
        const std::string k = lower(key.text);
        if (k == "vt0") p.vt0 = std::fabs(v);
        else if (k == "is") p.is = v;
        else if (k == "s") p.swing = v;
        else if (k == "lambda") p.lambda = v;
        else if (k == "eta") p.eta = v;
        else if (k == "gamma") p.gamma = v;
        else if (k == "phif") p.phi_f = v;
        else if (k == "tref") p.t_ref = v;
        else if (k == "w") p.w = v;
        else if (k == "l") p.l = v;
        else if (k == "xti") p.is_temp_exponent = v;
        else fail(ParseErrorKind::Syntax, key, "unknown model parameter '" + key.text + "'");
    }
    if (paren) fail(ParseErrorKind::Syntax, r.last(), "unterminated '(' in .model");
    if (!r.done()) fail(ParseErrorKind::Syntax, r.peek(), "unexpected token '" + r.peek().text + "'");
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        fail(ParseErrorKind::Syntax, type_tok, e.what());
    }
    return p;
}

SourceValue parse_source_value(LineReader& r) {
    const Token& t = r.next("source value");
    const std::string k = lower(t.text);
    if (k == "dc") {
        const double v = r.number("DC value");
        if (!r.done()) fail(ParseErrorKind::Syntax, r.peek(), "unexpected token after DC value");
        return SourceValue::constant(v);
    }
    if (k == "pwl") {
        r.expect("(");
        std::vector<std::pair<double, double>> pts;
        while (!r.done() && r.peek().text != ")") {
            const Token& tt = r.peek();
            const double time = r.number("PWL time");
            const double volts = r.number("PWL value");
            if (!pts.empty() && !(time > pts.back().first)) {
                fail(ParseErrorKind::Syntax, tt, "PWL times must be strictly increasing");
            }
            pts.emplace_back(time, volts);
        }
        r.expect(")");
        if (pts.empty()) fail(ParseErrorKind::Syntax, t, "empty PWL");
        if (!r.done()) fail(ParseErrorKind::Syntax, r.peek(), "unexpected token after PWL");
        return SourceValue::piecewise(std::move(pts));
    }
    const double v = parse_number(t.text, t.line, t.column);
    if (!r.done()) fail(ParseErrorKind::Syntax, r.peek(), "unexpected token after source value");
    return SourceValue::constant(v);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, int line, int column, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " at " + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

const char* to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::Syntax: return "syntax error";
        case ParseErrorKind::UnknownModel: return "unknown model";
        case ParseErrorKind::DuplicateInstance: return "duplicate instance";
        case ParseErrorKind::BadUnitSuffix: return "bad unit suffix";
        case ParseErrorKind::MissingEnd: return "missing .end";
    }
    return "parse error";
}

double parse_number(std::string_view token, int line, int column) {
    if (token.empty()) throw ParseError(ParseErrorKind::Syntax, line, column, "empty number");
    const char c0 = token.front();
    if (!(std::isdigit(static_cast<unsigned char>(c0)) || c0 == '.' || c0 == '-' || c0 == '+')) {
        throw ParseError(ParseErrorKind::Syntax, line, column,
                         "expected a number, got '" + std::string(token) + "'");
    }
    std::string_view body = token;
    if (c0 == '+') body.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(body.data(), body.data() + body.size(), value,
                                     std::chars_format::general);
    if (res.ec != std::errc() || res.ptr == body.data()) {
        throw ParseError(ParseErrorKind::Syntax, line, column,
                         "malformed number '" + std::string(token) + "'");
    }
    const std::string suffix = lower(std::string_view(res.ptr, body.data() + body.size() - res.ptr));
    if (suffix.empty()) return value;
    double scale = 0.0;
    if (suffix == "f") scale = 1e-15;
    else if (suffix == "p") scale = 1e-12;
    else if (suffix == "n") scale = 1e-9;
    else if (suffix == "u") scale = 1e-6;
    else if (suffix == "m") scale = 1e-3;
    else if (suffix == "k") scale = 1e3;
    else if (suffix == "meg") scale = 1e6;
    else {
        throw ParseError(ParseErrorKind::BadUnitSuffix, line, column,
                         "unknown unit suffix '" + suffix + "' in '" + std::string(token) + "'");
    }
    return value * scale;
}

Netlist parse_netlist(std::string_view text) {
    // Physical lines -> logical lines (with '+' continuation).
    std::vector<Line> lines;
    int line_no = 0;
    int last_line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(start, end - start);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        ++line_no;
        last_line_no = line_no;
        std::size_t first = raw.find_first_not_of(" \t");
        if (first != std::string_view::npos && raw[first] != '*') {
            if (raw[first] == '+') {
                if (lines.empty()) {
                    throw ParseError(ParseErrorKind::Syntax, line_no, static_cast<int>(first) + 1,
                                     "continuation line with nothing to continue");
                }
                tokenize_into(raw.substr(first + 1), line_no, static_cast<int>(first) + 1, lines.back());
            } else {
                Line l;
                tokenize_into(raw, line_no, 0, l);
                if (!l.empty()) lines.push_back(std::move(l));
            }
        }
        if (end == text.size()) break;
        start = end + 1;
    }

    Netlist n;
    std::set<std::string> names;
    std::vector<std::pair<std::string, Token>> model_refs;
    bool ended = false;

    for (const Line& line : lines) {
        LineReader r(line);
        const Token& head = r.next("statement");
        const std::string key = lower(head.text);
        if (key[0] == '.') {
            if (key == ".end") {
                ended = true;
                break;
            }
            if (key == ".model") {
                const Token& name = r.next("model name");
                const Token& type = r.next("model type");
                n.models[name.text] = parse_model_body(r, type);
            } else if (key == ".ic") {
                while (!r.done()) {
                    Token node = r.next("node");
                    if (lower(node.text) == "v" && !r.done() && r.peek().text == "(") {
                        r.expect("(");
                        node = r.next("node");
                        r.expect(")");
                    }
                    if (node.text == kGround) fail(ParseErrorKind::Syntax, node, ".ic on ground node");
                    r.expect("=");
                    n.initial_conditions[node.text] = r.number("initial voltage");
                }
            } else if (key == ".temp") {
                n.temp_celsius = r.number("temperature");
                if (!r.done()) fail(ParseErrorKind::Syntax, r.peek(), "unexpected token after .temp");
            } else if (key == ".param") {
                while (!r.done()) {
                    auto [name, v] = r.assignment();
                    n.params[name.text] = v;
                }
            } else {
                fail(ParseErrorKind::Syntax, head, "unknown directive '" + head.text + "'");
            }
            continue;
        }

        if (!names.insert(head.text).second) {
            fail(ParseErrorKind::DuplicateInstance, head, "instance '" + head.text + "' already defined");
        }
        switch (key[0]) {
            case 'm': {
                std::string d = r.next("drain").text;
                std::string g = r.next("gate").text;
                std::string s = r.next("source").text;
                std::string b = r.next("bulk").text;
                const Token& model = r.next("model name");
                std::optional<double> w, l;
                while (!r.done()) {
                    auto [k, v] = r.assignment();
                    const std::string kk = lower(k.text);
                    if (!(v > 0.0)) fail(ParseErrorKind::Syntax, k, "W/L must be > 0");
                    if (kk == "w") w = v;
                    else if (kk == "l") l = v;
                    else fail(ParseErrorKind::Syntax, k, "unknown MOS parameter '" + k.text + "'");
                }
                n.add_mos(head.text, d, g, s, b, model.text, w, l);
                model_refs.emplace_back(model.text, model);
                break;
            }
            case 'v': {
                std::string p = r.next("+ node").text;
                std::string m = r.next("- node").text;
                if (p == m) fail(ParseErrorKind::Syntax, head, "source terminals are identical");
                n.add_source(head.text, p, m, parse_source_value(r));
                break;
            }
            case 'c': {
                std::string p = r.next("+ node").text;
                std::string m = r.next("- node").text;
                const Token& vt = r.next("capacitance");
                const double c = parse_number(vt.text, vt.line, vt.column);
                if (!(c > 0.0)) fail(ParseErrorKind::Syntax, vt, "capacitance must be > 0");
                if (!r.done()) fail(ParseErrorKind::Syntax, r.peek(), "unexpected token after capacitance");
                n.add_capacitor(head.text, p, m, c);
                break;
            }
            default:
                fail(ParseErrorKind::Syntax, head, "unsupported element '" + head.text + "'");
        }
    }

    if (!ended) {
        throw ParseError(ParseErrorKind::MissingEnd, last_line_no + 1, 1, "netlist is not terminated by .end");
    }
    for (const auto& [model, tok] : model_refs) {
        if (!n.models.contains(model)) {
            fail(ParseErrorKind::UnknownModel, tok, "model '" + model + "' is not defined");
        }
    }
    for (const auto& [node, v] : n.initial_conditions) {
        if (!n.has_node(node)) {
            throw ParseError(ParseErrorKind::Syntax, 0, 0, ".ic references unknown node '" + node + "'");
        }
    }
    n.validate();
    return n;
}

std::string serialize_netlist(const Netlist& n) {
    std::ostringstream os;
    os << "* ntsram netlist\n";
    for (const auto& [name, p] : n.params) {
        os << ".param " << name << "=" << format_double(p) << "\n";
    }
    for (const auto& [name, p] : n.models) {
        os << ".model " << name << " " << to_string(p.polarity) << " VT0=" << format_double(p.vt0)
           << " IS=" << format_double(p.is) << " S=" << format_double(p.swing)
           << " LAMBDA=" << format_double(p.lambda) << " ETA=" << format_double(p.eta)
           << "\n+ GAMMA=" << format_double(p.gamma) << " PHIF=" << format_double(p.phi_f)
           << " TREF=" << format_double(p.t_ref) << " W=" << format_double(p.w)
           << " L=" << format_double(p.l) << " XTI=" << format_double(p.is_temp_exponent) << "\n";
    }
    for (const auto& i : n.instances) {
        os << i.name;
        for (const auto& node : i.nodes) os << " " << node;
        switch (i.kind) {
            case InstanceKind::Mos:
                os << " " << i.model;
                if (i.w) os << " W=" << format_double(*i.w);
                if (i.l) os << " L=" << format_double(*i.l);
                break;
            case InstanceKind::VoltageSource:
                if (i.source.is_pwl()) {
                    os << " PWL(";
                    bool first = true;
                    for (const auto& [t, v] : i.source.pwl) {
                        os << (first ? "" : " ") << format_double(t) << " " << format_double(v);
                        first = false;
                    }
                    os << ")";
                } else {
                    os << " DC " << format_double(i.source.dc);
                }
                break;
            case InstanceKind::Capacitor:
                os << " " << format_double(i.capacitance);
                break;
        }
        os << "\n";
    }
    if (!n.initial_conditions.empty()) {
        os << ".ic";
        for (const auto& [node, v] : n.initial_conditions) os << " " << node << "=" << format_double(v);
        os << "\n";
    }
    if (n.temp_celsius) os << ".temp " << format_double(*n.temp_celsius) << "\n";
    os << ".end\n";
    return os.str();
}

}  // namespace ntsram
