#include "doctest.h"

#include <algorithm>
#include <string>

#include "ntsram/cells.hpp"
#include "ntsram/netlist.hpp"

using namespace ntsram;

namespace {

const char* kInverter = R"(* inverter with a load
.model nch NMOS VT0=0.3 IS=100n S=80m LAMBDA=0.1 ETA=1 GAMMA=0.4 PHIF=0.35
.model pch PMOS VT0=0.3 IS=50n S=80m LAMBDA=0.1 ETA=1 GAMMA=0.4 PHIF=0.35
.param vsup=0.5
VVDD vdd 0 DC 0.5
VIN in 0 PWL(0 0 1n 0.5
+ 2n 0.5)
MP out in vdd vdd pch W=0.4u L=0.1u
MN out in 0 0 nch W=200n L=100n
CL out 0 1f
.ic out=0.5
.temp 27
.end
)";

ParseErrorKind parse_error_kind(const std::string& text) {
    try {
        parse_netlist(text);
    } catch (const ParseError& e) {
        return e.kind();
    }
    FAIL("no parse error");
    return ParseErrorKind::Syntax;
}

}  // namespace

TEST_CASE("numbers accept engineering suffixes") {
    CHECK(parse_number("1f") == doctest::Approx(1e-15));
    CHECK(parse_number("2.5p") == doctest::Approx(2.5e-12));
    CHECK(parse_number("3n") == doctest::Approx(3e-9));
    CHECK(parse_number("4u") == doctest::Approx(4e-6));
    CHECK(parse_number("80m") == doctest::Approx(0.08));
    CHECK(parse_number("2k") == doctest::Approx(2e3));
    CHECK(parse_number("1meg") == doctest::Approx(1e6));
    CHECK(parse_number("1MEG") == doctest::Approx(1e6));
    CHECK(parse_number("-1e-3") == doctest::Approx(-1e-3));
    CHECK_THROWS_AS(parse_number("1x"), ParseError);
    try {
        parse_number("3q", 4, 7);
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseErrorKind::BadUnitSuffix);
        CHECK(e.line() == 4);
    }
}

TEST_CASE("parser reads every statement kind") {
    const Netlist n = parse_netlist(kInverter);
    CHECK(n.count(InstanceKind::Mos) == 2);
    CHECK(n.count(InstanceKind::VoltageSource) == 2);
    CHECK(n.count(InstanceKind::Capacitor) == 1);
    CHECK(n.models.size() == 2);
    CHECK(n.models.at("pch").polarity == Polarity::P);
    CHECK(n.models.at("nch").is == doctest::Approx(100e-9));
    CHECK(n.params.at("vsup") == doctest::Approx(0.5));
    CHECK(n.initial_conditions.at("out") == doctest::Approx(0.5));
    REQUIRE(n.temp_celsius.has_value());
    CHECK(*n.temp_celsius == doctest::Approx(27.0));
    const Instance& vin = *n.find("VIN");
    REQUIRE(vin.source.is_pwl());
    CHECK(vin.source.pwl.size() == 3);
    CHECK(vin.source.at(0.5e-9) == doctest::Approx(0.25));
    CHECK(vin.source.at(5e-9) == doctest::Approx(0.5));
    const Instance& mp = *n.find("MP");
    CHECK(mp.nodes == std::vector<std::string>{"out", "in", "vdd", "vdd"});
    CHECK(*mp.w == doctest::Approx(0.4e-6));
    CHECK(n.resolved_params(mp).aspect() == doctest::Approx(4.0));
    CHECK_NOTHROW(n.validate());
}

TEST_CASE("keywords are case-insensitive") {
    const Netlist n = parse_netlist(".MODEL nch nmos VT0=0.3 IS=1e-7 S=0.08 LAMBDA=1.5 ETA=1 GAMMA=0.4 PHIF=0.35\n"
                                    "V1 a 0 dc 1\nM1 a a 0 0 nch\n.END\n");
    CHECK(n.count(InstanceKind::Mos) == 1);
}

TEST_CASE("parse errors carry their kind and position") {
    const std::string model = ".model nch NMOS VT0=0.3 IS=1e-7 S=0.08 LAMBDA=1.5 ETA=1 GAMMA=0.4 PHIF=0.35\n";
    CHECK(parse_error_kind(model + "M1 a b 0 0 nosuch\n.end\n") == ParseErrorKind::UnknownModel);
    CHECK(parse_error_kind(model + "V1 a 0 DC 1\nV1 b 0 DC 1\n.end\n") == ParseErrorKind::DuplicateInstance);
    CHECK(parse_error_kind(model + "C1 a 0 1zz\n.end\n") == ParseErrorKind::BadUnitSuffix);
    CHECK(parse_error_kind(model + "V1 a 0 DC 1\n") == ParseErrorKind::MissingEnd);
    CHECK(parse_error_kind(model + "M1 a b\n.end\n") == ParseErrorKind::Syntax);
    try {
        parse_netlist(model + "V1 a 0 DC 1\nC1 a 0 2qq\n.end\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() > 0);
    }
}

TEST_CASE("serialize and parse round-trip") {
    const Netlist n = parse_netlist(kInverter);
    const Netlist back = parse_netlist(serialize_netlist(n));
    CHECK(back == n);
    CHECK(serialize_netlist(back) == serialize_netlist(n));
}

TEST_CASE("every built-in cell round-trips and validates") {
    for (CellKind k : {CellKind::Conv6T, CellKind::IA6T, CellKind::WRE9T, CellKind::WRE8T, CellKind::ST2, CellKind::WEN,
                       CellKind::ReadPathWRE9T, CellKind::ReadPathVerlika, CellKind::ReadPathChang,
                       CellKind::HailongColumn}) {
        CAPTURE(to_string(k));
        const Netlist n = build_cell(CellDescriptor::make(k, 0.5));
        CHECK_NOTHROW(n.validate());
        CHECK(parse_netlist(serialize_netlist(n)) == n);
    }
}

TEST_CASE("validation catches structural errors") {
    Netlist n;
    n.models["nch"] = nominal_card();
    n.add_source("VDD", "vdd", kGround, SourceValue::constant(1.0));
    n.add_mos("M1", "vdd", "vdd", kGround, kGround, "nch");
    CHECK_NOTHROW(n.validate());

    Netlist missing_model = n;
    missing_model.add_mos("M2", "vdd", "vdd", kGround, kGround, "pch");
    CHECK_THROWS_AS(missing_model.validate(), NetlistError);

    Netlist bad_cap = n;
    bad_cap.add_capacitor("C1", "vdd", kGround, 0.0);
    CHECK_THROWS_AS(bad_cap.validate(), NetlistError);

    Netlist bad_w = n;
    bad_w.add_mos("M3", "vdd", "vdd", kGround, kGround, "nch", -1e-6);
    CHECK_THROWS_AS(bad_w.validate(), NetlistError);
}

TEST_CASE("PWL sources need increasing times") {
    CHECK_THROWS(SourceValue::piecewise({{1e-9, 0.0}, {0.5e-9, 1.0}}));
    const auto s = SourceValue::piecewise({{0.0, 0.0}, {1e-9, 1.0}});
    CHECK(s.at(-1.0) == doctest::Approx(0.0));
    CHECK(s.at(2e-9) == doctest::Approx(1.0));
    CHECK(s.breakpoints().size() == 2);
}

TEST_CASE("editing helpers") {
    Netlist n = parse_netlist(kInverter);
    CHECK(n.rewire_gates("in", "x") == 2);
    CHECK(n.find("MP")->nodes[1] == "x");
    n.set_source("VVDD", SourceValue::constant(0.7));
    CHECK(n.find("VVDD")->source.dc == doctest::Approx(0.7));
    CHECK_THROWS(n.set_source("VNOPE", SourceValue::constant(0.0)));
    CHECK(n.remove("CL"));
    CHECK_FALSE(n.remove("CL"));
    CHECK(n.has_node("out"));
    const auto nodes = n.nodes();
    CHECK(std::count(nodes.begin(), nodes.end(), std::string(kGround)) == 1);
    CHECK(std::count(nodes.begin(), nodes.end(), std::string("out")) == 1);
}
