#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ntsram/cells.hpp"
#include "ntsram/solver.hpp"

using namespace ntsram;

namespace {

// Two-device NMOS stack between a supply and ground.
Netlist stack2(double vdd, double g_top, double g_bot) {
    Netlist n;
    n.models["nch"] = circuit_card();
    n.add_source("VDD", "vdd", kGround, SourceValue::constant(vdd));
    n.add_source("VGT", "gt", kGround, SourceValue::constant(g_top));
    n.add_source("VGB", "gb", kGround, SourceValue::constant(g_bot));
    n.add_mos("M1", "vdd", "gt", "x", kGround, "nch");
    n.add_mos("M2", "x", "gb", kGround, kGround, "nch");
    return n;
}

double device_current(const DeviceParams& p, double vg, double vd, double vs, double vb) {
    return drain_current_unified(p, {vg - vs, vd - vs, vs - vb, 300.0});
}

// Bisection on the intermediate node of stack2, straight from the model.
double stack2_oracle(double vdd, double g_top, double g_bot) {
    auto p = circuit_card();
    p.w = 0.2e-6;
    p.l = 0.1e-6;
    double lo = 0.0, hi = vdd;
    for (int k = 0; k < 200; ++k) {
        const double x = 0.5 * (lo + hi);
        const double f = device_current(p, g_top, vdd, x, 0.0) - device_current(p, g_bot, x, 0.0, 0.0);
        (f > 0 ? lo : hi) = x;
    }
    return 0.5 * (lo + hi);
}

// Capacitor discharging through a diode-connected NMOS.
Netlist diode_discharge() {
    Netlist n;
    n.models["nch"] = circuit_card();
    n.add_mos("M1", "a", "a", kGround, kGround, "nch");
    n.add_capacitor("C1", "a", kGround, 1e-15);
    n.initial_conditions["a"] = 0.8;
    return n;
}

}  // namespace

TEST_CASE("DC stack node matches a bisection oracle") {
    for (double g : {0.0, 0.25, 0.5}) {
        const auto n = stack2(0.5, g, 0.5);
        const auto op = dc_operating_point(n);
        CHECK(op.v(kGround) == 0.0);
        CHECK(op.v("x") == doctest::Approx(stack2_oracle(0.5, g, 0.5)).epsilon(1e-4));
        CHECK(op.residual <= SolverOptions{}.abstol);
        // Series devices carry the same current.
        CHECK(op.i("M1") == doctest::Approx(op.i("M2")).epsilon(1e-6));
        // The supply delivers what the stack draws.
        CHECK(op.i("VDD") == doctest::Approx(op.i("M1")).epsilon(1e-6));
    }
}

TEST_CASE("solution does not depend on instance order") {
    const Netlist base = build_cell(CellDescriptor::make(CellKind::WRE9T, 0.5));
    const auto ref = dc_operating_point(base);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
        Netlist shuffled = base;
        std::shuffle(shuffled.instances.begin(), shuffled.instances.end(), rng);
        const auto op = dc_operating_point(shuffled);
        for (const auto& [node, v] : ref.voltages) CHECK(op.v(node) == doctest::Approx(v).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("initial conditions select the branch of a latch") {
    auto d = CellDescriptor::make(CellKind::Conv6T, 0.5);
    d.stored_one = true;
    const auto one = dc_operating_point(build_cell(d));
    d.stored_one = false;
    const auto zero = dc_operating_point(build_cell(d));
    CHECK(one.v("Q") > 0.45);
    CHECK(one.v("QB") < 0.05);
    CHECK(zero.v("Q") < 0.05);
    CHECK(zero.v("QB") > 0.45);
}

TEST_CASE("every built-in cell solves at 1.0 V") {
    for (CellKind k : {CellKind::Conv6T, CellKind::IA6T, CellKind::WRE9T, CellKind::WRE8T, CellKind::ST2, CellKind::WEN,
                       CellKind::ReadPathWRE9T, CellKind::ReadPathVerlika, CellKind::ReadPathChang,
                       CellKind::HailongColumn}) {
        CAPTURE(to_string(k));
        const auto op = dc_operating_point(build_cell(CellDescriptor::make(k, 1.0)));
        CHECK(op.residual <= SolverOptions{}.abstol);
    }
}

TEST_CASE("DC sweep of an inverter is monotone and flips are reported") {
    const Netlist cell = build_cell(CellDescriptor::make(CellKind::Conv6T, 0.5));
    const auto sweep = dc_sweep(cell, "VVDD", 0.5, 0.3, 5, {"Q"});
    CHECK(sweep.values.size() == 5);
    CHECK(sweep.values.front() == doctest::Approx(0.5));
    const auto q = sweep.series("Q");
    for (std::size_t k = 0; k < q.size(); ++k) CHECK(q[k] == doctest::Approx(sweep.values[k]).epsilon(0.05));
    CHECK(sweep.flips.empty());
}

TEST_CASE("source overrides change the solve without touching the netlist") {
    const auto n = stack2(0.5, 0.0, 0.5);
    const auto op = dc_operating_point(n, {{"VDD", 1.0}});
    CHECK(op.v("vdd") == doctest::Approx(1.0));
    CHECK(n.find("VDD")->source.dc == doctest::Approx(0.5));
}

TEST_CASE("transient starts at the initial condition and decays") {
    const auto n = diode_discharge();
    const auto w = transient(n, 20e-9, 0.1e-9, {"a"});
    REQUIRE(w.time.size() > 2);
    CHECK(w.time.front() == 0.0);
    CHECK(w.series("a").front() == doctest::Approx(0.8));
    const auto& a = w.series("a");
    for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k] <= a[k - 1] + 1e-12);
    CHECK(a.back() < 0.8);
}

TEST_CASE("stored energy of a source-free network never grows") {
    Netlist n;
    n.models["nch"] = circuit_card();
    n.models["pch"] = circuit_card(Polarity::P);
    n.add_capacitor("C1", "a", kGround, 2e-15);
    n.add_capacitor("C2", "b", kGround, 1e-15);
    n.add_capacitor("C3", "c", kGround, 0.5e-15);
    n.add_mos("M1", "a", "b", "b", kGround, "nch");
    n.add_mos("M2", "b", "a", "c", kGround, "nch");
    n.add_mos("M3", "c", "c", kGround, kGround, "nch");
    n.initial_conditions = {{"a", 0.9}, {"b", 0.2}, {"c", 0.6}};
    const auto w = transient(n, 50e-9, 0.2e-9);
    double prev = 1e300;
    for (std::size_t k = 0; k < w.time.size(); ++k) {
        const double a = w.series("a")[k], b = w.series("b")[k], c = w.series("c")[k];
        const double e = 0.5 * (2e-15 * a * a + 1e-15 * b * b + 0.5e-15 * c * c);
        CHECK(e <= prev * (1 + 1e-9));
        prev = e;
    }
}

TEST_CASE("backward Euler converges at first order") {
    // Slow discharge from near threshold, so every step size is in the asymptotic range.
    auto n = diode_discharge();
    n.find("C1")->capacitance = 10e-15;
    n.initial_conditions["a"] = 0.4;
    const double tstop = 5e-9;
    auto final_v = [&](double dt) { return transient(n, tstop, dt, {"a"}).final_value("a"); };
    const double v1 = final_v(0.2e-9), v2 = final_v(0.1e-9), v3 = final_v(0.05e-9);
    const double order = std::log2(std::abs(v1 - v2) / std::abs(v2 - v3));
    CHECK(order >= 0.9);
}

TEST_CASE("transient lands on PWL breakpoints") {
    Netlist n;
    n.models["nch"] = circuit_card();
    n.add_source("VIN", "in", kGround, SourceValue::piecewise({{0.0, 0.0}, {1.03e-9, 0.0}, {1.07e-9, 0.5}}));
    n.add_capacitor("C1", "in", "o", 1e-15);
    n.add_mos("M1", "o", "o", kGround, kGround, "nch");
    const auto w = transient(n, 3e-9, 0.5e-9);
    CHECK(std::find(w.time.begin(), w.time.end(), 1.03e-9) != w.time.end());
    CHECK(std::find(w.time.begin(), w.time.end(), 1.07e-9) != w.time.end());
}

TEST_CASE("errors are typed") {
    Netlist floating;
    floating.models["nch"] = circuit_card();
    floating.add_source("V1", "a", kGround, SourceValue::constant(0.5));
    floating.add_mos("M1", "a", "g", "b", kGround, "nch");
    // Gate node "g" carries no DC path and no capacitance.
    CHECK_THROWS_AS(transient(floating, 1e-9, 0.1e-9), SolverError);
    CHECK_THROWS_AS(transient(diode_discharge(), 1e-9, -1.0), SolverError);
}

TEST_CASE("temperature comes from options, then .temp, then 300 K") {
    Netlist n = diode_discharge();
    CHECK(simulation_temperature(n, {}) == doctest::Approx(300.0));
    n.temp_celsius = 100.0;
    CHECK(simulation_temperature(n, {}) == doctest::Approx(373.15));
    SolverOptions o;
    o.temp_kelvin = 250.0;
    CHECK(simulation_temperature(n, o) == doctest::Approx(250.0));
}

TEST_CASE("CSV export has a header and full precision") {
    const auto w = transient(diode_discharge(), 1e-9, 0.5e-9, {"a"});
    std::ostringstream os;
    write_csv(os, w);
    const std::string s = os.str();
    CHECK(s.rfind("t_or_sweep,a\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(w.time.size() + 1));
}
