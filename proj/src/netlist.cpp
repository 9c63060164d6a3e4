#include "ntsram/netlist.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace ntsram {

SourceValue SourceValue::piecewise(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw NetlistError("PWL source needs at least one point");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].first > points[i - 1].first)) {
            throw NetlistError("PWL times must be strictly increasing");
        }
    }
    SourceValue v;
    v.dc = points.front().second;
    v.pwl = std::move(points);
    return v;
}

double SourceValue::at(double t) const {
    if (pwl.empty()) return dc;
    if (t <= pwl.front().first) return pwl.front().second;
    if (t >= pwl.back().first) return pwl.back().second;
    auto it = std::upper_bound(pwl.begin(), pwl.end(), t,
                               [](double x, const auto& p) { return x < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (t - lo.first) / (hi.first - lo.first);
    return lo.second + f * (hi.second - lo.second);
}

std::vector<double> SourceValue::breakpoints() const {
    std::vector<double> out;
    out.reserve(pwl.size());
    for (const auto& [t, v] : pwl) out.push_back(t);
    return out;
}

Instance& Netlist::add_mos(std::string name, std::string d, std::string g, std::string s,
                           std::string b, std::string model, std::optional<double> w,
                           std::optional<double> l) {
    Instance inst;
    inst.kind = InstanceKind::Mos;
    inst.name = std::move(name);
    inst.nodes = {std::move(d), std::move(g), std::move(s), std::move(b)};
    inst.model = std::move(model);
    inst.w = w;
    inst.l = l;
    instances.push_back(std::move(inst));
    return instances.back();
}

Instance& Netlist::add_source(std::string name, std::string plus, std::string minus,
                              SourceValue value) {
    Instance inst;
    inst.kind = InstanceKind::VoltageSource;
    inst.name = std::move(name);
    inst.nodes = {std::move(plus), std::move(minus)};
    inst.source = std::move(value);
    instances.push_back(std::move(inst));
    return instances.back();
}

Instance& Netlist::add_capacitor(std::string name, std::string plus, std::string minus,
                                 double farads) {
    Instance inst;
    inst.kind = InstanceKind::Capacitor;
    inst.name = std::move(name);
    inst.nodes = {std::move(plus), std::move(minus)};
    inst.capacitance = farads;
    instances.push_back(std::move(inst));
    return instances.back();
}

const Instance* Netlist::find(std::string_view name) const {
    for (const auto& i : instances) {
        if (i.name == name) return &i;
    }
    return nullptr;
}

Instance* Netlist::find(std::string_view name) {
    for (auto& i : instances) {
        if (i.name == name) return &i;
    }
    return nullptr;
}

Instance& Netlist::at(std::string_view name) {
    Instance* i = find(name);
    if (!i) throw NetlistError("no instance named '" + std::string(name) + "'");
    return *i;
}

bool Netlist::remove(std::string_view name) {
    auto it = std::find_if(instances.begin(), instances.end(),
                           [&](const Instance& i) { return i.name == name; });
    if (it == instances.end()) return false;
    instances.erase(it);
    return true;
}

void Netlist::set_source(std::string_view name, SourceValue value) {
    Instance& inst = at(name);
    if (inst.kind != InstanceKind::VoltageSource) {
        throw NetlistError("'" + std::string(name) + "' is not a voltage source");
    }
    inst.source = std::move(value);
}

int Netlist::rewire_gates(std::string_view from, const std::string& to) {
    int n = 0;
    for (auto& i : instances) {
        if (i.kind == InstanceKind::Mos && i.nodes[1] == from) {
            i.nodes[1] = to;
            ++n;
        }
    }
    return n;
}

DeviceParams Netlist::resolved_params(const Instance& mos) const {
    auto it = models.find(mos.model);
    if (it == models.end()) throw NetlistError("unknown model '" + mos.model + "'");
    DeviceParams p = it->second;
    if (mos.w) p.w = *mos.w;
    if (mos.l) p.l = *mos.l;
    return p;
}

std::vector<std::string> Netlist::nodes() const {
    std::vector<std::string> out{kGround};
    std::unordered_set<std::string> seen{kGround};
    for (const auto& i : instances) {
        for (const auto& n : i.nodes) {
            if (seen.insert(n).second) out.push_back(n);
        }
    }
    for (const auto& [n, v] : initial_conditions) {
        if (seen.insert(n).second) out.push_back(n);
    }
    return out;
}

bool Netlist::has_node(std::string_view node) const {
    if (node == kGround) return true;
    for (const auto& i : instances) {
        for (const auto& n : i.nodes) {
            if (n == node) return true;
        }
    }
    return false;
}

int Netlist::count(InstanceKind kind) const {
    return static_cast<int>(std::count_if(instances.begin(), instances.end(),
                                          [&](const Instance& i) { return i.kind == kind; }));
}

void Netlist::validate() const {
    std::set<std::string> names;
    for (const auto& i : instances) {
        if (i.name.empty()) throw NetlistError("instance with empty name");
        if (!names.insert(i.name).second) {
            throw NetlistError("duplicate instance name '" + i.name + "'");
        }
        const std::size_t want = i.kind == InstanceKind::Mos ? 4 : 2;
        if (i.nodes.size() != want) {
            throw NetlistError("instance '" + i.name + "' has wrong terminal count");
        }
        for (const auto& n : i.nodes) {
            if (n.empty()) throw NetlistError("instance '" + i.name + "' has an empty node name");
        }
        switch (i.kind) {
            case InstanceKind::Mos: {
                auto it = models.find(i.model);
                if (it == models.end()) {
                    throw NetlistError("instance '" + i.name + "' references unknown model '" +
                                       i.model + "'");
                }
                if ((i.w && !(*i.w > 0.0)) || (i.l && !(*i.l > 0.0))) {
                    throw NetlistError("instance '" + i.name + "' has non-positive W/L");
                }
                break;
            }
            case InstanceKind::Capacitor:
                if (!(i.capacitance > 0.0)) {
                    throw NetlistError("capacitor '" + i.name + "' must be > 0");
                }
                break;
            case InstanceKind::VoltageSource:
                if (i.nodes[0] == i.nodes[1]) {
                    throw NetlistError("source '" + i.name + "' is shorted");
                }
                break;
        }
    }
    for (const auto& [name, p] : models) {
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw NetlistError("model '" + name + "': " + e.what());
        }
    }
    for (const auto& [node, v] : initial_conditions) {
        if (node == kGround) throw NetlistError(".ic on the ground node");
        if (!has_node(node)) throw NetlistError(".ic references unknown node '" + node + "'");
    }
}

}  // namespace ntsram
