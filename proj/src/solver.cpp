#include "ntsram/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

namespace ntsram {

namespace {

constexpr int kDenseLimit = 120;
constexpr int kGroundIndex = -1;

std::string format_seconds(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g s", t);
    return buf;
}

struct MosDev {
    std::string name;
    int d, g, s, b;
    DeviceParams p;
};

struct CapDev {
    int a, b;
    double c;
};

struct SrcDev {
    std::string name;
    int p, m;
    SourceValue value;
    double dc_override;
    bool overridden = false;

    double at(double t) const { return overridden ? dc_override : value.at(t); }
};

struct Pin {
    int node;
    double value;
};

// Transient companion state for one backward-Euler step.
struct StepContext {
    double h = 0.0;                   // 0 => DC
    const Eigen::VectorXd* prev = nullptr;
};

class Circuit {
public:
    Circuit(const Netlist& n, const SolverOptions& opts) : opts_(opts) {
        n.validate();
        temp_ = simulation_temperature(n, opts);
        names_ = n.nodes();
        for (std::size_t i = 1; i < names_.size(); ++i) index_[names_[i]] = static_cast<int>(i) - 1;
        index_[kGround] = kGroundIndex;
        nn_ = static_cast<int>(names_.size()) - 1;
        for (const auto& inst : n.instances) {
            switch (inst.kind) {
                case InstanceKind::Mos:
                    mos_.push_back({inst.name, idx(inst.nodes[0]), idx(inst.nodes[1]),
                                    idx(inst.nodes[2]), idx(inst.nodes[3]), n.resolved_params(inst)});
                    break;
                case InstanceKind::Capacitor:
                    caps_.push_back({idx(inst.nodes[0]), idx(inst.nodes[1]), inst.capacitance});
                    break;
                case InstanceKind::VoltageSource:
                    srcs_.push_back({inst.name, idx(inst.nodes[0]), idx(inst.nodes[1]), inst.source, 0.0});
                    break;
            }
        }
        ns_ = static_cast<int>(srcs_.size());
        for (const auto& [node, v] : n.initial_conditions) ic_.push_back({idx(node), v});
    }

    int idx(const std::string& node) const {
        auto it = index_.find(node);
        if (it == index_.end()) {
            throw SolverError(SolverErrorKind::InvalidArgument, "unknown node '" + node + "'");
        }
        return it->second;
    }

    int size() const { return nn_ + ns_; }
    int node_count() const { return nn_; }
    const std::vector<std::string>& node_names() const { return names_; }
    const std::vector<SrcDev>& sources() const { return srcs_; }
    const std::vector<Pin>& ic_pins() const { return ic_; }

    void apply_overrides(const SourceOverrides& o) {
        for (const auto& [name, v] : o) set_source_dc(name, v);
    }

    void set_source_dc(const std::string& name, double v) {
        for (auto& s : srcs_) {
            if (s.name == name) {
                s.dc_override = v;
                s.overridden = true;
                return;
            }
        }
        throw SolverError(SolverErrorKind::InvalidArgument, "no voltage source named '" + name + "'");
    }

    void check_dc_paths(const std::vector<Pin>& pins) const {
        // Union-find over conductive edges; every node must reach ground or a pin.
        std::vector<int> parent(nn_ + 1);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        auto join = [&](int a, int b) { parent[find(a + 1)] = find(b + 1); };
        for (const auto& m : mos_) join(m.d, m.s);
        for (const auto& s : srcs_) join(s.p, s.m);
        for (const auto& p : pins) join(p.node, kGroundIndex);
        std::string floating;
        for (int i = 0; i < nn_; ++i) {
            if (find(i + 1) != find(0)) floating += (floating.empty() ? "" : ", ") + names_[i + 1];
        }
        if (!floating.empty()) {
            throw SolverError(SolverErrorKind::Singular, "floating node(s) with no DC path to ground: " + floating);
        }
    }

    void check_capacitance() const {
        std::vector<bool> ok(nn_, false);
        for (const auto& c : caps_) {
            if (c.a >= 0) ok[c.a] = true;
            if (c.b >= 0) ok[c.b] = true;
        }
        for (const auto& s : srcs_) {
            if (s.p >= 0) ok[s.p] = true;
            if (s.m >= 0) ok[s.m] = true;
        }
        for (int i = 0; i < nn_; ++i) {
            if (!ok[i]) {
                throw SolverError(SolverErrorKind::MissingCapacitance,
                                  "dynamic node '" + names_[i + 1] + "' has no capacitance");
            }
        }
    }

    Eigen::VectorXd initial_guess(const std::vector<Pin>& pins, double t) const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(size());
        for (const auto& s : srcs_) {
            if (s.m == kGroundIndex && s.p >= 0) x[s.p] = s.at(t);
            if (s.p == kGroundIndex && s.m >= 0) x[s.m] = -s.at(t);
        }
        for (const auto& p : pins) x[p.node] = p.value;
        return x;
    }

    double node_voltage(const Eigen::VectorXd& x, int i) const { return i < 0 ? 0.0 : x[i]; }

    // Residual F (currents leaving each node; source constraint rows) and its
    // Jacobian. Returns the max KCL residual over free node rows.
    double assemble(const Eigen::VectorXd& x, double t, double gmin, double scale,
                    const StepContext& ctx, const std::vector<Pin>& pins, Eigen::VectorXd& f,
                    bool want_jacobian) {
        const int n = size();
        f.setZero(n);
        if (want_jacobian) begin_jacobian(n);
        auto v = [&](int i) { return node_voltage(x, i); };

        for (const auto& m : mos_) {
            const double vs = v(m.s);
            const BiasPoint bp{v(m.g) - vs, v(m.d) - vs, vs - v(m.b), temp_};
            const CurrentEval e = drain_current_unified_eval(m.p, bp);
            add_f(f, m.d, e.id);
            add_f(f, m.s, -e.id);
            if (want_jacobian) {
                const double gd = e.d_vds;
                const double gg = e.d_vgs;
                const double gb = -e.d_vsb;
                const double gs = -(gd + gg + gb);
                for (const auto& [row, sign] : {std::pair{m.d, 1.0}, std::pair{m.s, -1.0}}) {
                    add_j(row, m.d, sign * gd);
                    add_j(row, m.g, sign * gg);
                    add_j(row, m.s, sign * gs);
                    add_j(row, m.b, sign * gb);
                }
            }
        }
        if (ctx.h > 0.0) {
            for (const auto& c : caps_) {
                const double geq = c.c / ctx.h;
                const double dv = (v(c.a) - v(c.b)) -
                                  (node_voltage(*ctx.prev, c.a) - node_voltage(*ctx.prev, c.b));
                add_f(f, c.a, geq * dv);
                add_f(f, c.b, -geq * dv);
                if (want_jacobian) {
                    add_j(c.a, c.a, geq);
                    add_j(c.a, c.b, -geq);
                    add_j(c.b, c.a, -geq);
                    add_j(c.b, c.b, geq);
                }
            }
        }
        if (gmin > 0.0) {
            for (int i = 0; i < nn_; ++i) {
                f[i] += gmin * x[i];
                if (want_jacobian) add_j(i, i, gmin);
            }
        }
        for (int k = 0; k < ns_; ++k) {
            const auto& s = srcs_[k];
            const int row = nn_ + k;
            const double ib = x[row];  // flows into the + terminal through the source
            add_f(f, s.p, ib);
            add_f(f, s.m, -ib);
            f[row] = v(s.p) - v(s.m) - scale * s.at(t);
            if (want_jacobian) {
                add_j(s.p, row, 1.0);
                add_j(s.m, row, -1.0);
                add_j(row, s.p, 1.0);
                add_j(row, s.m, -1.0);
            }
        }
        std::vector<char> pinned(nn_, 0);
        for (const auto& p : pins) {
            pinned[p.node] = 1;
            f[p.node] = x[p.node] - p.value;
        }
        if (want_jacobian) end_jacobian(pinned);

        double res = 0.0;
        for (int i = 0; i < nn_; ++i) {
            if (!pinned[i]) res = std::max(res, std::fabs(f[i]));
        }
        return res;
    }

    bool solve_linear(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx) {
        if (size() <= kDenseLimit) {
            dx = dense_.partialPivLu().solve(rhs);
        } else {
            sparse_.setFromTriplets(trips_.begin(), trips_.end());
            if (!pattern_ready_) {
                lu_.analyzePattern(sparse_);
                pattern_ready_ = true;
            }
            lu_.factorize(sparse_);
            if (lu_.info() != Eigen::Success) {
                return false;
            }
            dx = lu_.solve(rhs);
        }
        return dx.allFinite();
    }

    struct NewtonResult {
        bool ok = false;
        int iterations = 0;
        double residual = std::numeric_limits<double>::infinity();
    };

    NewtonResult newton(Eigen::VectorXd& x, double t, double gmin, double scale,
                        const StepContext& ctx, const std::vector<Pin>& pins, int max_iter) {
        NewtonResult r;
        Eigen::VectorXd f, dx;
        bool step_small = false;
        int polish = 0;
        for (int it = 0; it < max_iter; ++it) {
            r.residual = assemble(x, t, gmin, scale, ctx, pins, f, true);
            r.iterations = it;
            if (step_small && r.residual <= opts_.abstol) {
                // One extra iteration after convergence: leakage currents sit
                // within a few decades of abstol, so a cheap polish pays off.
                if (polish++ >= 1) {
                    r.ok = true;
                    return r;
                }
            }
            if (!solve_linear(-f, dx)) return r;
            step_small = true;
            for (int i = 0; i < nn_; ++i) {
                double d = dx[i];
                if (std::fabs(d) > opts_.max_step) d = std::copysign(opts_.max_step, d);
                if (std::fabs(d) > opts_.reltol * std::fabs(x[i]) + opts_.vntol) step_small = false;
                x[i] += d;
            }
            for (int k = nn_; k < size(); ++k) x[k] += dx[k];
        }
        r.residual = assemble(x, t, gmin, scale, ctx, pins, f, false);
        return r;
    }

    // DC solve with continuation. Throws on failure.
    Eigen::VectorXd solve_dc(Eigen::VectorXd x0, double t, const std::vector<Pin>& pins,
                             std::string& method, int& iterations, double& residual) {
        const StepContext dc;
        const int iters = opts_.max_iterations;
        Eigen::VectorXd x = x0;
        auto r = newton(x, t, 0.0, 1.0, dc, pins, iters);
        if (r.ok) {
            method = "newton";
            iterations = r.iterations;
            residual = r.residual;
            return x;
        }
        double best = r.residual;

        auto gmin_ramp = [&](Eigen::VectorXd& y, int& total) {
            double g = opts_.gmin_start;
            double last_ok = -1.0;
            double factor = 0.1;
            while (true) {
                Eigen::VectorXd trial = y;
                auto rr = newton(trial, t, g, 1.0, dc, pins, iters);
                total += rr.iterations;
                if (rr.ok) {
                    y = trial;
                    last_ok = g;
                    if (g <= opts_.gmin_floor) break;
                    g = std::max(g * factor, opts_.gmin_floor);
                    factor = std::max(factor * factor, 0.1);
                } else {
                    best = std::min(best, rr.residual);
                    if (last_ok < 0.0) return false;
                    factor = std::sqrt(factor);
                    if (factor > 0.95) return false;
                    g = std::max(last_ok * factor, opts_.gmin_floor);
                }
            }
            auto rr = newton(y, t, 0.0, 1.0, dc, pins, iters);
            total += rr.iterations;
            best = std::min(best, rr.residual);
            if (rr.ok) residual = rr.residual;
            return rr.ok;
        };

        int total = r.iterations;
        x = x0;
        if (gmin_ramp(x, total)) {
            method = "gmin";
            iterations = total;
            return x;
        }

        // Source stepping at the starting shunt, then the shunt ramp.
        x = Eigen::VectorXd::Zero(size());
        bool ok = true;
        for (int k = 1; k <= 20 && ok; ++k) {
            const double scale = k / 20.0;
            std::vector<Pin> scaled = pins;
            for (auto& p : scaled) p.value *= scale;
            auto rr = newton(x, t, opts_.gmin_start, scale, dc, scaled, iters);
            total += rr.iterations;
            ok = rr.ok;
            if (!ok) best = std::min(best, rr.residual);
        }
        if (ok && gmin_ramp(x, total)) {
            method = "source";
            iterations = total;
            return x;
        }
        throw SolverError(SolverErrorKind::NonConvergence,
                          "DC operating point did not converge (best residual " +
                              std::to_string(best) + " A)",
                          best);
    }

    OperatingPoint make_op(const Eigen::VectorXd& x, double t) const {
        OperatingPoint op;
        op.voltages[kGround] = 0.0;
        for (int i = 0; i < nn_; ++i) op.voltages[names_[i + 1]] = x[i];
        for (const auto& m : mos_) {
            const double vs = node_voltage(x, m.s);
            const BiasPoint bp{node_voltage(x, m.g) - vs, node_voltage(x, m.d) - vs,
                               vs - node_voltage(x, m.b), temp_};
            op.currents[m.name] = drain_current_unified(m.p, bp);
        }
        for (int k = 0; k < ns_; ++k) op.currents[srcs_[k].name] = -x[nn_ + k];
        (void)t;
        return op;
    }

    // DC with .ic as nodeset: solve pinned, then release.
    OperatingPoint operating_point(const Eigen::VectorXd* warm, std::vector<Pin> pins_before_release,
                                   Eigen::VectorXd* out_x = nullptr) {
        std::string method;
        int iterations = 0;
        double residual = 0.0;
        Eigen::VectorXd x;
        if (warm) {
            x = *warm;
        } else {
            x = initial_guess(pins_before_release, 0.0);
            if (!pins_before_release.empty()) {
                check_dc_paths(pins_before_release);
                x = solve_dc(x, 0.0, pins_before_release, method, iterations, residual);
            }
        }
        check_dc_paths({});
        int it2 = 0;
        std::string m2;
        x = solve_dc(x, 0.0, {}, m2, it2, residual);
        OperatingPoint op = make_op(x, 0.0);
        op.iterations = iterations + it2;
        op.residual = residual;
        op.method = m2;
        if (out_x) *out_x = x;
        return op;
    }

    double temp() const { return temp_; }

private:
    void add_f(Eigen::VectorXd& f, int row, double v) const {
        if (row >= 0) f[row] += v;
    }

    void begin_jacobian(int n) {
        if (n <= kDenseLimit) {
            dense_.setZero(n, n);
        } else {
            trips_.clear();
            if (sparse_.rows() != n) sparse_.resize(n, n);
        }
    }

    void add_j(int row, int col, double v) {
        if (row < 0 || col < 0) return;
        if (size() <= kDenseLimit) {
            dense_(row, col) += v;
        } else {
            trips_.emplace_back(row, col, v);
        }
    }

    void end_jacobian(const std::vector<char>& pinned) {
        if (size() <= kDenseLimit) {
            for (int i = 0; i < nn_; ++i) {
                if (pinned[i]) {
                    dense_.row(i).setZero();
                    dense_(i, i) = 1.0;
                }
            }
        } else {
            // Keep the sparsity pattern fixed: zero pinned rows in place.
            for (auto& tr : trips_) {
                if (tr.row() < nn_ && pinned[tr.row()]) tr = Eigen::Triplet<double>(tr.row(), tr.col(), 0.0);
            }
            for (int i = 0; i < nn_; ++i) {
                if (pinned[i]) trips_.emplace_back(i, i, 1.0);
            }
        }
    }

    SolverOptions opts_;
    double temp_ = 300.0;
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    int nn_ = 0;
    int ns_ = 0;
    std::vector<MosDev> mos_;
    std::vector<CapDev> caps_;
    std::vector<SrcDev> srcs_;
    std::vector<Pin> ic_;

    Eigen::MatrixXd dense_;
    std::vector<Eigen::Triplet<double>> trips_;
    Eigen::SparseMatrix<double> sparse_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    bool pattern_ready_ = false;
};

std::vector<double> time_grid(const Netlist& n, double tstop, double dt) {
    std::set<double> pts;
    const long steps = static_cast<long>(std::ceil(tstop / dt - 1e-9));
    for (long k = 0; k <= steps; ++k) pts.insert(std::min(k * dt, tstop));
    for (const auto& inst : n.instances) {
        if (inst.kind != InstanceKind::VoltageSource) continue;
        for (double t : inst.source.breakpoints()) {
            if (t > 0.0 && t < tstop) pts.insert(t);
        }
    }
    // Merge points closer than a tiny fraction of dt.
    std::vector<double> out;
    for (double t : pts) {
        if (out.empty() || t - out.back() > 1e-6 * dt) out.push_back(t);
        else if (t == tstop) out.back() = tstop;
    }
    return out;
}

void write_number(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

double OperatingPoint::v(const std::string& node) const {
    auto it = voltages.find(node);
    if (it == voltages.end()) throw std::out_of_range("no node '" + node + "' in operating point");
    return it->second;
}

double OperatingPoint::i(const std::string& instance) const {
    auto it = currents.find(instance);
    if (it == currents.end()) throw std::out_of_range("no instance '" + instance + "' in operating point");
    return it->second;
}

std::vector<double> SweepResult::series(const std::string& node) const {
    auto it = std::find(observe.begin(), observe.end(), node);
    if (it == observe.end()) throw std::out_of_range("node '" + node + "' not observed");
    const auto j = static_cast<std::size_t>(it - observe.begin());
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& row : samples) out.push_back(row[j]);
    return out;
}

const std::vector<double>& Waveform::series(const std::string& node) const {
    auto it = std::find(observe.begin(), observe.end(), node);
    if (it == observe.end()) throw std::out_of_range("node '" + node + "' not observed");
    return voltages[static_cast<std::size_t>(it - observe.begin())];
}

double simulation_temperature(const Netlist& n, const SolverOptions& opts) {
    if (opts.temp_kelvin) return *opts.temp_kelvin;
    if (n.temp_celsius) return *n.temp_celsius + 273.15;
    return 300.0;
}

OperatingPoint dc_operating_point(const Netlist& n, const SourceOverrides& overrides,
                                  const SolverOptions& opts) {
    Circuit c(n, opts);
    c.apply_overrides(overrides);
    return c.operating_point(nullptr, c.ic_pins());
}

SweepResult dc_sweep(const Netlist& n, const std::string& source, double from, double to, int steps,
                     const std::vector<std::string>& observe, const SolverOptions& opts) {
    if (steps < 2) throw SolverError(SolverErrorKind::InvalidArgument, "dc_sweep needs steps >= 2");
    Circuit c(n, opts);
    std::vector<int> cols;
    for (const auto& node : observe) cols.push_back(c.idx(node));

    SweepResult out;
    out.source = source;
    out.observe = observe;
    const double step = (to - from) / (steps - 1);
    const double flip_jump = std::max(0.05, 20.0 * std::fabs(step));
    Eigen::VectorXd x;
    for (int k = 0; k < steps; ++k) {
        const double val = k == steps - 1 ? to : from + k * step;
        c.set_source_dc(source, val);
        try {
            if (k == 0) {
                c.operating_point(nullptr, c.ic_pins(), &x);
            } else {
                Eigen::VectorXd warm = x;
                c.operating_point(&warm, {}, &x);
            }
        } catch (const SolverError& e) {
            throw SolverError(e.kind(), std::string(e.what()) + " at " + source + " = " + std::to_string(val),
                              e.best_residual());
        }
        std::vector<double> row;
        for (int col : cols) row.push_back(col < 0 ? 0.0 : x[col]);
        if (!out.samples.empty()) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (std::fabs(row[j] - out.samples.back()[j]) > flip_jump) {
                    out.flips.push_back(k);
                    break;
                }
            }
        }
        out.values.push_back(val);
        out.samples.push_back(std::move(row));
    }
    return out;
}

Waveform transient(const Netlist& n, double tstop, double dt, const std::vector<std::string>& observe,
                   const SolverOptions& opts) {
    if (!(dt > 0.0)) throw SolverError(SolverErrorKind::InvalidArgument, "transient needs dt > 0");
    if (tstop < 0.0) throw SolverError(SolverErrorKind::InvalidArgument, "transient needs tstop >= 0");
    Circuit c(n, opts);

    Waveform w;
    std::vector<int> cols;
    if (observe.empty()) {
        const auto& names = c.node_names();
        w.observe.assign(names.begin() + 1, names.end());
    } else {
        w.observe = observe;
    }
    for (const auto& node : w.observe) cols.push_back(c.idx(node));
    w.voltages.assign(cols.size(), {});
    const auto& srcs = c.sources();
    for (const auto& s : srcs) w.source_currents[s.name] = {};

    auto record = [&](double t, const Eigen::VectorXd& x) {
        w.time.push_back(t);
        for (std::size_t j = 0; j < cols.size(); ++j) w.voltages[j].push_back(cols[j] < 0 ? 0.0 : x[cols[j]]);
        for (std::size_t k = 0; k < srcs.size(); ++k) {
            w.source_currents[srcs[k].name].push_back(-x[c.node_count() + static_cast<int>(k)]);
        }
    };

    // t = 0: .ic nodes pinned.
    const auto& pins = c.ic_pins();
    c.check_dc_paths(pins);
    std::string method;
    int iters = 0;
    double residual = 0.0;
    Eigen::VectorXd x = c.solve_dc(c.initial_guess(pins, 0.0), 0.0, pins, method, iters, residual);
    record(0.0, x);
    if (tstop == 0.0) return w;
    c.check_capacitance();

    const std::vector<double> grid = time_grid(n, tstop, dt);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double t0 = grid[k - 1];
        const double t1 = grid[k];
        bool done = false;
        double best = std::numeric_limits<double>::infinity();
        // On Newton failure the interval is split into equal substeps; the
        // accepted output grid is unchanged.
        constexpr int kMaxSplit = 1024;
        for (int split = 1; split <= kMaxSplit && !done; split *= 4) {
            Eigen::VectorXd y = x;
            bool ok = true;
            for (int s = 1; s <= split && ok; ++s) {
                const double h = (t1 - t0) / split;
                const double t = s == split ? t1 : t0 + s * h;
                const Eigen::VectorXd prev = y;
                StepContext ctx{h, &prev};
                auto r = c.newton(y, t, 0.0, 1.0, ctx, {}, opts.max_iterations);
                ok = r.ok;
                if (!ok) best = std::min(best, r.residual);
            }
            if (ok) {
                x = y;
                done = true;
            }
        }
        if (!done) {
            throw SolverError(SolverErrorKind::NonConvergence,
                              "transient step did not converge at t = " + format_seconds(t1), best, t1);
        }
        record(t1, x);
    }
    return w;
}

void write_csv(std::ostream& os, const SweepResult& sweep) {
    os << "t_or_sweep";
    for (const auto& n : sweep.observe) os << ',' << n;
    os << '\n';
    for (std::size_t k = 0; k < sweep.values.size(); ++k) {
        write_number(os, sweep.values[k]);
        for (double v : sweep.samples[k]) {
            os << ',';
            write_number(os, v);
        }
        os << '\n';
    }
}

void write_csv(std::ostream& os, const Waveform& wave) {
    os << "t_or_sweep";
    for (const auto& n : wave.observe) os << ',' << n;
    os << '\n';
    for (std::size_t k = 0; k < wave.time.size(); ++k) {
        write_number(os, wave.time[k]);
        for (const auto& series : wave.voltages) {
            os << ',';
            write_number(os, series[k]);
        }
        os << '\n';
    }
}

}  // namespace ntsram
