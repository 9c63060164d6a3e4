#include "doctest.h"

#include <cmath>
#include <limits>

#include "ntsram/array_model.hpp"

using namespace ntsram;

TEST_CASE("cells per bitline: raw bound and power-of-two clamp") {
    const auto a = max_cells_per_bitline(1080.0, 1.0);
    CHECK(a.raw == 1081);
    CHECK(a.n == 1024);
    CHECK(a.slack == doctest::Approx(1080.0 / 1023.0));
    const auto b = max_cells_per_bitline(78.0, 1.0);
    CHECK(b.raw == 79);
    CHECK(b.n == 64);
    CHECK(max_cells_per_bitline(78.0, 2.0).n == 32);
    const auto none = max_cells_per_bitline(0.5, 1.0);
    CHECK(none.n == 0);
    CHECK_FALSE(none.diagnostic.empty());
    CHECK(max_cells_per_bitline(1.5, 1.0).n == 2);
    CHECK(max_cells_per_bitline(1.5, 1.0).slack == doctest::Approx(1.5));
}

TEST_CASE("cells per bitline is monotone in the ratio and in k") {
    std::int64_t prev = 0;
    for (double r = 1.0; r < 1e5; r *= 1.37) {
        const auto c = max_cells_per_bitline(r, 1.0);
        CHECK(c.raw >= prev);
        prev = c.raw;
    }
    prev = std::numeric_limits<std::int64_t>::max();
    for (double k = 0.5; k < 20.0; k *= 1.5) {
        const auto c = max_cells_per_bitline(500.0, k);
        CHECK(c.raw <= prev);
        prev = c.raw;
    }
    // The bound from the definition: ion >= k (n - 1) ioff.
    for (double r : {3.0, 17.5, 250.0, 4096.0}) {
        const auto c = max_cells_per_bitline(r, 1.0);
        CHECK(r >= static_cast<double>(c.raw - 1));
        CHECK(r < static_cast<double>(c.raw));
    }
}

TEST_CASE("block area is linear in each area parameter") {
    const auto base = default_block_config(CellKind::WRE9T, 1024);
    for (double BlockConfig::*field : {&BlockConfig::cell_area, &BlockConfig::col_periphery, &BlockConfig::row_periphery}) {
        auto at = [&](double v) {
            auto c = base;
            c.*field = v;
            return block_area(c);
        };
        const double x = 1.7, y = 23.0;
        CHECK(at(x + y) - at(x) == doctest::Approx(at(2 * y + x) - at(x + y)).epsilon(1e-9));
        CHECK(at(3 * y) - at(2 * y) == doctest::Approx(at(2 * y) - at(y)).epsilon(1e-9));
    }
    // Explicit arithmetic.
    BlockConfig c = base;
    c.cell_area = 2.0;
    c.col_periphery = 100.0;
    c.row_periphery = 10.0;
    const double expect = (c.total_bits * 2.0 + c.columns() * 100.0 + c.rows() * 10.0) * 1e-6;
    CHECK(block_area(c) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("reference blocks and overheads") {
    const auto a = default_block_config(CellKind::WRE9T, 1024);
    const auto b = default_block_config(CellKind::Conv6T, 64);
    CHECK(block_area(a) == doctest::Approx(1.18).epsilon(1e-9));
    CHECK(block_area(b) == doctest::Approx(0.86).epsilon(1e-9));
    const auto o = area_overhead(a, b);
    CHECK(o.cell == doctest::Approx((3.72 - 2.03) / 2.03));
    CHECK(o.block == doctest::Approx((1.18 - 0.86) / 0.86));
    CHECK(reference_cells_per_bitline(CellKind::WRE9T) == 1024);
    CHECK(reference_cells_per_bitline(CellKind::Conv6T) == 64);
}

TEST_CASE("without periphery the block overhead equals the cell overhead") {
    auto a = default_block_config(CellKind::WRE9T, 1024);
    auto b = default_block_config(CellKind::Conv6T, 64);
    a.col_periphery = b.col_periphery = 0.0;
    a.row_periphery = b.row_periphery = 0.0;
    const auto o = area_overhead(a, b);
    CHECK(o.block == doctest::Approx(o.cell).epsilon(1e-12));
}

TEST_CASE("block config validation") {
    auto c = default_block_config(CellKind::WRE9T, 1024);
    CHECK_NOTHROW(c.validate());
    c.cells_per_bitline = 1000;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = default_block_config(CellKind::WRE9T, 1024);
    c.cell_area = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("block comparison rows are antisymmetric and vanish for identical blocks") {
    auto a = default_block_config(CellKind::WRE9T, 1024);
    auto b = default_block_config(CellKind::Conv6T, 64);
    BlockMetrics ma{3e-5, 4e-5, 2e-8, 3e-9, block_area(a), 1e-12};
    BlockMetrics mb{6e-5, 5e-5, 1e-9, 1e-9, block_area(b), 2e-12};
    const auto ab = compare_blocks(a, ma, b, mb);
    const auto ba = compare_blocks(b, mb, a, ma);
    REQUIRE(ab.rows.size() == ba.rows.size());
    for (std::size_t k = 0; k < ab.rows.size(); ++k) {
        CHECK(ab.rows[k].metric == ba.rows[k].metric);
        CHECK(ab.rows[k].log_ratio == doctest::Approx(-ba.rows[k].log_ratio));
        CHECK(ab.rows[k].change == doctest::Approx(ab.rows[k].a / ab.rows[k].b - 1.0));
    }
    const auto same = compare_blocks(a, ma, a, ma);
    for (const auto& r : same.rows) {
        CHECK(r.change == 0.0);
        CHECK(r.log_ratio == 0.0);
    }
    const std::string md = to_markdown(ab);
    CHECK(md.find("|") != std::string::npos);
    CHECK(to_csv(ab).find("read_power") != std::string::npos);
}

TEST_CASE("power reductions from reported block figures") {
    CHECK(reduction(32.75, 456.12) == doctest::Approx(0.928).epsilon(1e-3));
    CHECK(reduction(25.68, 376.5) == doctest::Approx(0.932).epsilon(1e-3));
    CHECK(reduction(1.0, 1.0) == 0.0);
}

TEST_CASE("block evaluation at the reference organizations") {
    auto a = default_block_config(CellKind::WRE9T, 1024);
    a.vdd = 0.5;
    const auto m = evaluate_block(a);
    CHECK(m.read_power > 0.0);
    CHECK(m.write_power > 0.0);
    CHECK(m.read_delay > 0.0);
    CHECK(m.write_delay > 0.0);
    CHECK(m.area == doctest::Approx(1.18));
    // Idle leakage of every other cell is part of the block power.
    CHECK(m.read_power >= (a.total_bits - 1) * m.cell_leakage);
}

TEST_CASE("sneaky current: floated shared rail") {
    const auto f = default_sneaky_fixture();
    const double c1 = sneaky_current_power(RailArch::B, SneakyCase::Case1, 0.5, f);
    const double c2 = sneaky_current_power(RailArch::B, SneakyCase::Case2, 0.5, f);
    CHECK(c1 >= 5.0 * c2);
    // Per-row rails have no path through the other cells.
    const double d1 = sneaky_current_power(RailArch::C, SneakyCase::Case1, 0.5, f);
    const double d2 = sneaky_current_power(RailArch::C, SneakyCase::Case2, 0.5, f);
    CHECK(std::abs(d1 - d2) <= 0.2 * d2);
    // A single-cell column has no other cells to distinguish the cases.
    auto single = f;
    single.cells = 1;
    CHECK(sneaky_current_power(RailArch::B, SneakyCase::Case1, 0.5, single) ==
          doctest::Approx(sneaky_current_power(RailArch::B, SneakyCase::Case2, 0.5, single)));
}

TEST_CASE("half select collapses the unselected cell on a floated rail") {
    const auto r = half_select_analysis(RailArch::B, CellKind::WRE9T, 0.5, VariationSpec{}, McOptions{20, 1, 0});
    CHECK(r.half_selected.mean < 0.05 * r.not_selected.mean);
    // The not-selected cell sees the plain hold configuration.
    const auto zero = half_select_analysis(RailArch::B, CellKind::WRE9T, 0.5, VariationSpec::zero(), McOptions{1, 1, 1});
    const double hold = snm(make_dut(CellDescriptor::make(CellKind::WRE9T, 0.5)), SnmMode::Hold, 0.5, SnmOptions{2e-3, {}}).snm;
    CHECK(zero.not_selected.mean == doctest::Approx(hold).epsilon(1e-6));
    CHECK_THROWS(half_select_analysis(RailArch::C, CellKind::WRE9T, 0.5, VariationSpec{}, McOptions{2, 1, 1}));
}

TEST_CASE("row composition shares word-lines and replicates bitlines") {
    const auto d = CellDescriptor::make(CellKind::WRE9T, 0.5);
    const Netlist row = compose_row(d, {true, false, true});
    CHECK_NOTHROW(row.validate());
    CHECK(row.count(InstanceKind::Mos) >= 3 * transistor_count(CellKind::WRE9T));
    CHECK(row.has_node(column_node(0, "WBL")));
    CHECK(row.has_node(column_node(2, "RBL")));
    CHECK(row.initial_conditions.at(column_node(1, "Q")) == doctest::Approx(0.0));
    CHECK(row.initial_conditions.at(column_node(2, "Q")) == doctest::Approx(0.5));
}

TEST_CASE("write-back: only the addressed bit changes") {
    const auto d = CellDescriptor::make(CellKind::WRE9T, 0.5);
    const auto c = writeback_campaign(d, 0.5, 50, 8, 2024);
    CHECK(c.trials == 50);
    CHECK(c.passes == 50);
    CHECK(c.bystander_flips == 0);
    for (const auto& r : c.results) {
        CHECK(r.readback == r.before);
        for (std::size_t j = 0; j < r.after.size(); ++j) {
            if (static_cast<int>(j) == r.addr) CHECK(r.after[j] == r.data);
            else CHECK(r.after[j] == r.before[j]);
        }
    }
}

TEST_CASE("write-back disabled: bystanders storing 1 flip") {
    const auto d = CellDescriptor::make(CellKind::WRE9T, 0.35);
    WritebackOptions o;
    o.scheme_enabled = false;
    const auto r = write_with_writeback(d, {true, false, true, true}, 1, true, 0.35, o);
    CHECK_FALSE(r.pass);
    CHECK_FALSE(r.disturbed.empty());
    CHECK_FALSE(r.transcript.empty());
}

TEST_CASE("column scenarios parse") {
    const auto s = parse_column_scenario("# demo\ncell = conv6t\nn = 6\narch = B\npattern = 10\nselected = 2\n"
                                         "vdd = 0.6\ntemp = 320\nbitline_cap = 1e-15\n");
    CHECK(s.kind == CellKind::Conv6T);
    CHECK(s.n == 6);
    CHECK(s.arch == RailArch::B);
    CHECK(s.pattern == std::vector<bool>{true, false, true, false, true, false});
    CHECK(s.selected == 2);
    CHECK(s.vdd == doctest::Approx(0.6));
    const auto dut = make_scenario_dut(s);
    REQUIRE(dut.netlist.temp_celsius.has_value());
    CHECK(*dut.netlist.temp_celsius == doctest::Approx(320 - 273.15));
    CHECK_THROWS(parse_column_scenario("n = 4\nselected = 4\n"));
    CHECK_THROWS(parse_column_scenario("bogus = 1\n"));
}
