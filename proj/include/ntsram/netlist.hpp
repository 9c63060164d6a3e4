#pragma once

// In-memory circuit description and the SPICE-subset text format.
//
// Grammar (line oriented, '*' comments, '+' continuation, keywords are
// case-insensitive, node "0" is ground):
//   .model <name> NMOS|PMOS VT0= IS= S= LAMBDA= ETA= GAMMA= PHIF= [TREF=]
//   M<name> <d> <g> <s> <b> <model> [W=] [L=]
//   V<name> <n+> <n-> DC <volts> | PWL(t1 v1 t2 v2 ...)
//   C<name> <n+> <n-> <farads>
//   .ic <node>=<volts> ...   .temp <celsius>   .param <name>=<value>   .end

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ntsram/device_model.hpp"

namespace ntsram {

inline constexpr const char* kGround = "0";

/// DC level or piecewise-linear waveform of an independent voltage source.
struct SourceValue {
    double dc = 0.0;
    std::vector<std::pair<double, double>> pwl;  // (time, volts), time strictly increasing

    static SourceValue constant(double v) { return SourceValue{v, {}}; }
    static SourceValue piecewise(std::vector<std::pair<double, double>> points);

    bool is_pwl() const { return !pwl.empty(); }
    double at(double t) const;
    std::vector<double> breakpoints() const;

    bool operator==(const SourceValue&) const = default;
};

enum class InstanceKind { Mos, VoltageSource, Capacitor };

struct Instance {
    InstanceKind kind = InstanceKind::Mos;
    std::string name;
    std::vector<std::string> nodes;  // MOS: d g s b; others: + -
    std::string model;               // MOS only
    std::optional<double> w;         // MOS overrides [m]
    std::optional<double> l;
    SourceValue source;              // VoltageSource only
    double capacitance = 0.0;        // Capacitor only [F]

    bool operator==(const Instance&) const = default;
};

class Netlist {
public:
    std::vector<Instance> instances;
    std::map<std::string, DeviceParams> models;
    std::map<std::string, double> params;
    std::map<std::string, double> initial_conditions;
    std::optional<double> temp_celsius;

    Instance& add_mos(std::string name, std::string d, std::string g, std::string s, std::string b,
                      std::string model, std::optional<double> w = std::nullopt,
                      std::optional<double> l = std::nullopt);
    Instance& add_source(std::string name, std::string plus, std::string minus, SourceValue value);
    Instance& add_capacitor(std::string name, std::string plus, std::string minus, double farads);

    const Instance* find(std::string_view name) const;
    Instance* find(std::string_view name);
    Instance& at(std::string_view name);
    bool remove(std::string_view name);

    /// Set the value of an existing source; throws if it does not exist.
    void set_source(std::string_view name, SourceValue value);

    /// Rewire every MOS gate attached to `from` onto `to`.
    int rewire_gates(std::string_view from, const std::string& to);

    /// Parameters of a MOS instance with its W/L overrides applied.
    DeviceParams resolved_params(const Instance& mos) const;

    /// Node names in order of first appearance; ground included.
    std::vector<std::string> nodes() const;
    bool has_node(std::string_view node) const;

    int count(InstanceKind kind) const;

    /// Throws NetlistError on any violated invariant.
    void validate() const;

    bool operator==(const Netlist&) const = default;
};

class NetlistError : public std::runtime_error {
public:
    explicit NetlistError(const std::string& what) : std::runtime_error(what) {}
};

enum class ParseErrorKind { Syntax, UnknownModel, DuplicateInstance, BadUnitSuffix, MissingEnd };

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, int line, int column, const std::string& message);

    ParseErrorKind kind() const { return kind_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    ParseErrorKind kind_;
    int line_;
    int column_;
};

const char* to_string(ParseErrorKind kind);

/// Numeric literal with an optional engineering suffix (f p n u m k meg).
/// Throws ParseError(BadUnitSuffix) on trailing garbage.
double parse_number(std::string_view token, int line = 0, int column = 0);

Netlist parse_netlist(std::string_view text);

/// Canonical text form; parse_netlist(serialize_netlist(n)) == n.
std::string serialize_netlist(const Netlist& n);

}  // namespace ntsram
