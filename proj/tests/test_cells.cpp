#include "doctest.h"

#include <stdexcept>

#include "ntsram/cells.hpp"

using namespace ntsram;

namespace {

const std::vector<CellKind> kAll{CellKind::Conv6T,        CellKind::IA6T,          CellKind::WRE9T,
                                 CellKind::WRE8T,         CellKind::ST2,           CellKind::WEN,
                                 CellKind::ReadPathWRE9T, CellKind::ReadPathVerlika, CellKind::ReadPathChang,
                                 CellKind::HailongColumn};

}  // namespace

TEST_CASE("transistor counts") {
    CHECK(transistor_count(CellKind::Conv6T) == 6);
    CHECK(transistor_count(CellKind::IA6T) == 6);
    CHECK(transistor_count(CellKind::WRE9T) == 9);
    CHECK(transistor_count(CellKind::WRE8T) == 8);
    CHECK(transistor_count(CellKind::ST2) == 10);
    CHECK(transistor_count(CellKind::WEN) == 8);
    CHECK(transistor_count(CellKind::ReadPathWRE9T) == 3);
    CHECK(transistor_count(CellKind::ReadPathVerlika) == 3);
    CHECK(transistor_count(CellKind::ReadPathChang) == 2);
}

TEST_CASE("generated cells pass their structural checks") {
    for (CellKind k : kAll) {
        CAPTURE(to_string(k));
        const Netlist n = build_cell(CellDescriptor::make(k, 0.5));
        CHECK_NOTHROW(check_structure(n, k));
        CHECK(n.models.count(kNmosModel) == 1);
        CHECK(n.find("VVDD") != nullptr);
    }
}

TEST_CASE("WRE9T read path: three series NMOS and a P-type device at Qc") {
    const Netlist n = build_cell(CellDescriptor::make(CellKind::WRE9T, 0.5));
    CHECK(series_nmos_path_length(n, "RBL", kGround) == 3);
    bool p_at_qc = false;
    for (const auto& inst : n.instances) {
        if (inst.kind != InstanceKind::Mos || n.models.at(inst.model).polarity != Polarity::P) continue;
        if (inst.nodes[0] == "Qc" || inst.nodes[2] == "Qc") p_at_qc = true;
    }
    CHECK(p_at_qc);
    CHECK(series_nmos_path_length(build_cell(CellDescriptor::make(CellKind::ReadPathChang)), "RBL", kGround) == 2);
}

TEST_CASE("structure check rejects a broken read stack") {
    Netlist n = build_cell(CellDescriptor::make(CellKind::WRE9T, 0.5));
    // Drop one device of the cell.
    for (const auto& inst : n.instances) {
        if (inst.kind == InstanceKind::Mos) {
            n.remove(inst.name);
            break;
        }
    }
    CHECK_THROWS_AS(check_structure(n, CellKind::WRE9T), NetlistError);
}

TEST_CASE("cell kinds parse from their CLI spellings") {
    CHECK(parse_cell_kind("wre9t") == CellKind::WRE9T);
    CHECK(parse_cell_kind("conv6t") == CellKind::Conv6T);
    CHECK(parse_cell_kind("readpath_chang") == CellKind::ReadPathChang);
    CHECK_THROWS_AS(parse_cell_kind("7t"), std::invalid_argument);
    CHECK(parse_rail_arch("B") == RailArch::B);
    CHECK(parse_rail_arch("none") == RailArch::None);
}

TEST_CASE("hold configuration: storage nodes initialized, word-lines inactive") {
    auto d = CellDescriptor::make(CellKind::Conv6T, 0.6);
    const Netlist n = build_cell(d);
    CHECK(n.initial_conditions.at("Q") == doctest::Approx(0.6));
    CHECK(n.initial_conditions.at("QB") == doctest::Approx(0.0));
    CHECK(n.find("VWL")->source.dc == doctest::Approx(0.0));
    d.stored_one = false;
    CHECK(build_cell(d).initial_conditions.at("Q") == doctest::Approx(0.0));
}

TEST_CASE("sizing table overrides device geometry") {
    auto d = CellDescriptor::make(CellKind::Conv6T, 0.5);
    REQUIRE_FALSE(d.sizing.empty());
    const std::string name = d.sizing.begin()->first;
    d.sizing[name] = {1.0e-6, 0.1e-6};
    const Netlist n = build_cell(d);
    bool found = false;
    for (const auto& inst : n.instances) {
        if (inst.kind == InstanceKind::Mos && inst.name.find(name) != std::string::npos && inst.w) {
            CHECK(*inst.w == doctest::Approx(1.0e-6));
            found = true;
        }
    }
    CHECK(found);
    d.sizing.erase(name);
    CHECK_THROWS_AS(build_cell(d), std::invalid_argument);
}

TEST_CASE("column composition") {
    const auto d = CellDescriptor::make(CellKind::WRE9T, 0.5);
    const std::vector<bool> pattern{true, false, true, false};
    for (RailArch arch : {RailArch::A, RailArch::B, RailArch::C, RailArch::None}) {
        CAPTURE(to_string(arch));
        const Netlist n = compose_column(d, 4, pattern, arch, 0.5e-15);
        CHECK_NOTHROW(n.validate());
        int cell_devices = 0;
        for (const auto& inst : n.instances)
            if (inst.kind == InstanceKind::Mos && inst.name.find("c") != std::string::npos) ++cell_devices;
        CHECK(cell_devices >= 4 * transistor_count(CellKind::WRE9T));
        CHECK(n.initial_conditions.at(column_node(1, "Q")) == doctest::Approx(0.0));
        CHECK(n.initial_conditions.at(column_node(2, "Q")) == doctest::Approx(0.5));
    }
    const auto ports = column_ports(CellKind::WRE9T, 2);
    CHECK(ports.q == column_node(2, "Q"));
    CHECK(ports.rbl == ports_of(CellKind::WRE9T).rbl);
    CHECK_THROWS(compose_column(d, 4, pattern, RailArch::B, 0.5e-15, ColumnOptions{7}));
}
