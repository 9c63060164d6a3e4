#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "ntsram/characterization.hpp"

using namespace ntsram;

namespace {

// Stack current under I = (W/L) Is 10^((VGS - VT + lambda VDS)/S): equal
// currents give a linear system in the intermediate node voltages.
double stack_oracle(const std::vector<bool>& on, const DeviceParams& p, double vdd) {
    const int n = static_cast<int>(on.size());
    const int m = n - 1;
    // Exponent of device i: (g_i - v_i + lambda (v_{i-1} - v_i) - VT) / S, v_0 = vdd, v_n = 0.
    auto row = [&](int i, Eigen::VectorXd& coef, double& constant) {
        coef.setZero(m);
        constant = (on[i] ? vdd : 0.0) - p.vt0;
        if (i < m) coef[i] -= 1.0 + p.lambda;
        if (i == 0) constant += p.lambda * vdd;
        else coef[i - 1] += p.lambda;
    };
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    Eigen::VectorXd c0(m), c1(m);
    double k0 = 0, k1 = 0;
    for (int i = 0; i < m; ++i) {
        row(i, c0, k0);
        row(i + 1, c1, k1);
        a.row(i) = (c0 - c1).transpose();
        b[i] = k1 - k0;
    }
    const Eigen::VectorXd v = a.fullPivLu().solve(b);
    Eigen::VectorXd c(m);
    double k = 0;
    row(0, c, k);
    return p.aspect() * p.is * std::pow(10.0, (c.dot(v) + k) / p.swing);
}

Dut cell(CellKind k, double vdd = 0.5) { return make_dut(CellDescriptor::make(k, vdd)); }

}  // namespace

TEST_CASE("gate patterns of the stack configurations") {
    CHECK(stacked_gate_pattern(2, 1) == std::vector<bool>{false, true});
    CHECK(stacked_gate_pattern(3, 1) == std::vector<bool>{false, false, true});
    CHECK(stacked_gate_pattern(3, 2) == std::vector<bool>{true, true, false});
    CHECK_THROWS(stacked_gate_pattern(3, 3));
    CHECK_THROWS(stacked_gate_pattern(1, 0));
}

TEST_CASE("closed forms equal the linear continuity solution") {
    const auto p = nominal_card();
    for (double vdd : {0.4, 0.6, 0.8, 1.0}) {
        for (auto [n, on] : {std::pair{2, 1}, {3, 1}, {3, 2}}) {
            CAPTURE(n);
            CAPTURE(on);
            const double oracle = stack_oracle(stacked_gate_pattern(n, on), p, vdd);
            CHECK(stacked_leakage_closed_form(n, on, p, vdd) == doctest::Approx(oracle).epsilon(1e-9));
        }
    }
    // Two-stack coefficient in closed form: (lambda^2 + lambda + 1) / (2 lambda + 1).
    CHECK(stacked_leakage_coefficient(2, 1, 1.5) == doctest::Approx(4.75 / 4.0));
}

TEST_CASE("composite ratio identity across random cards") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ul(0.2, 2.5), us(0.06, 0.11), uv(0.3, 1.2);
    for (int k = 0; k < 10; ++k) {
        auto p = nominal_card();
        p.lambda = ul(rng);
        p.swing = us(rng);
        const double vdd = uv(rng);
        const double l = p.lambda;
        const double e = (-std::pow(l, 4) - 3 * std::pow(l, 3) - 2 * l * l) / (6 * std::pow(l, 3) + 9 * l * l + 5 * l + 1);
        const double ratio = stacked_leakage_closed_form(3, 1, p, vdd) / stacked_leakage_closed_form(2, 1, p, vdd);
        CHECK(std::log10(ratio) == doctest::Approx(e * vdd / p.swing).epsilon(1e-12));
    }
}

TEST_CASE("numeric stack solution agrees with the closed forms") {
    const auto p = nominal_card();
    for (double vdd : {0.6, 0.8, 1.0}) {
        for (auto [n, on] : {std::pair{2, 1}, {3, 1}, {3, 2}}) {
            const auto s = stacked_leakage_numeric(n, on, p, vdd);
            const double cf = stacked_leakage_closed_form(n, on, p, vdd);
            CHECK(std::abs(s.current - cf) <= 0.05 * cf);
            CHECK(s.node_voltages.size() == static_cast<std::size_t>(n - 1));
        }
    }
    // The three-stack with one ON device at the bottom leaves that device with a
    // negative drain-source voltage, outside the validity region.
    CHECK_FALSE(stacked_leakage_numeric(3, 1, p, 1.0).in_validity_region);
    CHECK(stacked_leakage_numeric(3, 2, p, 1.0).in_validity_region);
}

TEST_CASE("butterfly of ideal inverters") {
    // Step transfer curves switching at VDD/2 give a square of side VDD/2.
    const double vdd = 1.0;
    Curve a, b;
    for (int k = 0; k <= 1000; ++k) {
        const double x = k * 1e-3;
        a.x.push_back(x);
        a.y.push_back(x < 0.5 ? vdd : 0.0);
        b.y.push_back(x);
        b.x.push_back(x < 0.5 ? vdd : 0.0);
    }
    const auto r = butterfly_margins(a, b, SnmMode::Hold);
    CHECK(r.lobe1 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(r.lobe2 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(r.snm == doctest::Approx(std::min(r.lobe1, r.lobe2)));
    CHECK_FALSE(r.collapsed);
}

TEST_CASE("butterfly of a single monotone curve pair with one crossing collapses") {
    Curve a, b;
    for (int k = 0; k <= 100; ++k) {
        const double x = k * 0.01;
        a.x.push_back(x);
        a.y.push_back(0.2 + 0.1 * x);
        b.y.push_back(x);
        b.x.push_back(0.2 + 0.1 * x);
    }
    const auto r = butterfly_margins(a, b, SnmMode::Hold);
    CHECK(r.snm <= 0.0);
}

TEST_CASE("noise-margin orderings of the default cells") {
    const auto c6 = cell(CellKind::Conv6T);
    const auto hold6 = snm(c6, SnmMode::Hold, 0.5);
    const auto read6 = snm(c6, SnmMode::Read, 0.5);
    CHECK(hold6.snm >= read6.snm);
    CHECK(hold6.lobe1 >= 0.0);
    CHECK(hold6.lobe2 >= 0.0);
    CHECK(hold6.snm == doctest::Approx(std::min(hold6.lobe1, hold6.lobe2)));
    // The 6T sizing is symmetric.
    CHECK(std::abs(hold6.lobe1 - hold6.lobe2) <= 2e-3);

    const auto c9 = cell(CellKind::WRE9T);
    const auto hold9 = snm(c9, SnmMode::Hold, 0.5);
    const auto read9 = snm(c9, SnmMode::Read, 0.5);
    CHECK(std::abs(read9.snm - hold9.snm) <= 0.05 * hold9.snm);
    CHECK(read9.snm > read6.snm);
}

TEST_CASE("write noise margin is positive for working writes") {
    const auto w9 = wnm(cell(CellKind::WRE9T), 0.5);
    CHECK(w9.wnm > 0.0);
    CHECK(w9.wnm == doctest::Approx(std::min(w9.write0, w9.write1)));
    // With the word-line off the cell stays bistable.
    CHECK(wnm(cell(CellKind::WRE9T), 0.5, {}, false).wnm < 0.0);
    CHECK(wnm(cell(CellKind::Conv6T), 0.5).wnm > 0.0);
}

TEST_CASE("read-path Ion/Ioff") {
    const auto m = ion_ioff(cell(CellKind::ReadPathWRE9T, 0.8), 0.8, 300.0);
    CHECK(m.ion > 0.0);
    CHECK(m.ioff > 0.0);
    CHECK(m.ratio == doctest::Approx(m.ion / m.ioff));
    double prev = m.ratio;
    for (double t : {325.0, 350.0, 400.0}) {
        const double r = ion_ioff(cell(CellKind::ReadPathWRE9T, 0.8), 0.8, t).ratio;
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("leakage power") {
    const auto l = leakage_power(cell(CellKind::Conv6T), 0.5, 300.0);
    CHECK(l.stored0 > 0.0);
    CHECK(l.stored1 > 0.0);
    CHECK(l.worst == doctest::Approx(std::max(l.stored0, l.stored1)));
    CHECK(leakage_power(cell(CellKind::Conv6T), 0.5, 360.0).worst > l.worst);
}

TEST_CASE("dynamic operations of the WRE9T at 0.5 V") {
    const auto d = cell(CellKind::WRE9T);
    for (Operation op : {Operation::Write0, Operation::Write1, Operation::Read, Operation::Access, Operation::Hold,
                         Operation::Retention}) {
        CAPTURE(to_string(op));
        const auto r = dynamic_op_check(d, op, 0.5);
        CHECK(r.pass);
        CHECK(r.margin > 0.0);
    }
    CHECK(operation_power_write(d, 0.5) > 0.0);
}

TEST_CASE("supply retargeting rescales sources and initial conditions") {
    auto d = cell(CellKind::Conv6T, 0.5);
    retarget_supply(d.netlist, 0.8);
    CHECK(supply_of(d.netlist) == doctest::Approx(0.8));
    CHECK(d.netlist.initial_conditions.at("Q") == doctest::Approx(0.8));
}

TEST_CASE("user netlists are wrapped through their port names") {
    const auto built = build_cell(CellDescriptor::make(CellKind::WRE9T, 0.5));
    const auto dut = make_netlist_dut(parse_netlist(serialize_netlist(built)), "user");
    CHECK(dut.ports.rbl == "RBL");
    CHECK(dut.ports.q == "Q");
    CHECK(snm(dut, SnmMode::Hold, 0.5).snm == doctest::Approx(snm(cell(CellKind::WRE9T), SnmMode::Hold, 0.5).snm));
    Netlist bare;
    bare.models["nch"] = circuit_card();
    bare.add_source("V1", "a", kGround, SourceValue::constant(0.5));
    CHECK_THROWS(make_netlist_dut(bare, "bare"));
}

TEST_CASE("bitline decay: buffered read keeps the bitline") {
    const auto d = CellDescriptor::make(CellKind::WRE9T, 0.5);
    const auto col = make_column_dut(d, 16, std::vector<bool>(16, true), RailArch::C, 0.5e-15);
    const auto r = bitline_decay(col, 0.5, 120e-9);
    CHECK(r.bitline == hold_high_bitline(col.ports));
    CHECK(r.droop >= 0.0);
    CHECK(r.droop < 0.05);
    CHECK(r.wave.time.back() == doctest::Approx(120e-9));
}

TEST_CASE("metrics are bit-identical across calls") {
    const auto d = cell(CellKind::Conv6T);
    const auto a = snm(d, SnmMode::Read, 0.5);
    const auto b = snm(d, SnmMode::Read, 0.5);
    CHECK(a.snm == b.snm);
    CHECK(a.vtc_qb_of_q.y == b.vtc_qb_of_q.y);
    CHECK(to_json(a, true).dump() == to_json(b, true).dump());
}

TEST_CASE("metric records carry their context") {
    const auto j = metric_record("snm", "wre9t", 0.5, 300.0, {{"snm", 0.15}});
    CHECK(j.at("metric") == "snm");
    CHECK(j.at("cell") == "wre9t");
    CHECK(j.at("vdd").get<double>() == doctest::Approx(0.5));
    CHECK(j.contains("settings"));
}
