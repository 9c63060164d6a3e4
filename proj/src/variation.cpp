#include "ntsram/variation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <boost/math/special_functions/erf.hpp>

namespace ntsram {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ95 = 1.959963984540054;
constexpr std::size_t kChunk = 64;

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Devices whose names differ only in one L/R letter share their draws.
std::string pair_key(const std::string& device) {
    std::string k = device;
    const std::size_t dot = k.rfind('.');
    const std::size_t begin = dot == std::string::npos ? 0 : dot + 1;
    for (std::size_t i = k.size(); i-- > begin;) {
        if (k[i] == 'L' || k[i] == 'R') {
            k[i] = '*';
            break;
        }
    }
    return k;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Moments {
    double mean = 0.0;
    double sigma = 0.0;
    int count = 0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) {
        if (std::isnan(x)) continue;
        m.mean += x;
        ++m.count;
    }
    if (m.count == 0) return m;
    m.mean /= m.count;
    double ss = 0.0;
    for (double x : v) {
        if (!std::isnan(x)) ss += (x - m.mean) * (x - m.mean);
    }
    m.sigma = m.count > 1 ? std::sqrt(ss / (m.count - 1)) : 0.0;
    return m;
}

FailureEstimate gaussian_tail(const std::vector<double>& margins, bool allow_degenerate) {
    FailureEstimate e;
    e.mode = EstimateMode::GaussianTail;
    e.n = static_cast<int>(margins.size());
    e.censored = static_cast<int>(std::count_if(margins.begin(), margins.end(), [](double m) { return std::isnan(m); }));
    e.failures = static_cast<int>(
        std::count_if(margins.begin(), margins.end(), [](double m) { return std::isnan(m) || m < 0.0; }));
    const Moments m = moments(margins);
    e.margin_mean = m.mean;
    e.margin_sigma = m.sigma;
    if (m.count == 0) {
        e.p = e.ci_low = e.ci_high = 1.0;
        return e;
    }
    if (!(m.sigma > 0.0)) {
        if (!allow_degenerate) throw std::domain_error("zero-variance margin: the Gaussian tail is undefined");
        e.p = e.ci_low = e.ci_high = m.mean < 0.0 ? 1.0 : 0.0;
        return e;
    }
    const double half = kZ95 * m.sigma / std::sqrt(static_cast<double>(m.count));
    e.p = normal_cdf(-m.mean / m.sigma);
    e.ci_low = normal_cdf(-(m.mean + half) / m.sigma);
    e.ci_high = normal_cdf(-(m.mean - half) / m.sigma);
    return e;
}

SolverOptions at_temperature(double temp_kelvin) {
    SolverOptions so;
    so.temp_kelvin = temp_kelvin;
    return so;
}

double snm_margin(const SnmResult& r) {
    if (!r.collapsed) return r.snm;
    return std::min({r.lobe1, r.lobe2, -1e-9});
}

// Dynamic criteria decide pass/fail in empirical mode. Their end-of-cycle
// distances are bimodal, so the tail fit uses the quasi-static margin each
// criterion reduces to when the word-line pulse is long against the cell time
// constants; access keeps its bitline development, which is continuous.
double trial_margin(const Dut& dut, VddminOp op, double vdd, const FailureOptions& opts) {
    const SolverOptions so = at_temperature(opts.temp_kelvin);
    if (opts.mode == EstimateMode::GaussianTail && op != VddminOp::Access) {
        SnmOptions sopt;
        sopt.step = opts.sweep_step;
        sopt.solver = so;
        switch (op) {
            case VddminOp::Read: return snm_margin(snm(dut, SnmMode::Read, vdd, sopt));
            case VddminOp::Write: return wnm(dut, vdd, sopt).wnm;
            case VddminOp::Retention: return snm_margin(snm(dut, SnmMode::Hold, vdd, sopt));
            case VddminOp::Access: break;
        }
    }
    switch (op) {
        case VddminOp::Read: return dynamic_op_check(dut, Operation::Read, vdd, opts.timing, so).margin;
        case VddminOp::Access: return dynamic_op_check(dut, Operation::Access, vdd, opts.timing, so).margin;
        case VddminOp::Write:
            return std::min(dynamic_op_check(dut, Operation::Write0, vdd, opts.timing, so).margin,
                            dynamic_op_check(dut, Operation::Write1, vdd, opts.timing, so).margin);
        case VddminOp::Retention:
            return dynamic_op_check(dut, Operation::Retention, vdd, opts.timing, so).margin;
    }
    return kNaN;
}

}  // namespace

// ---------------------------------------------------------------- spec

VariationSpec VariationSpec::zero() {
    VariationSpec s;
    s.sigma_vt0 = s.sigma_ln_is = s.sigma_s = s.sigma_l = 0.0;
    return s;
}

bool VariationSpec::is_zero() const {
    return sigma_vt0 == 0.0 && sigma_ln_is == 0.0 && sigma_s == 0.0 && sigma_l == 0.0;
}

void VariationSpec::validate() const {
    for (double s : {sigma_vt0, sigma_ln_is, sigma_s, sigma_l}) {
        if (!(s >= 0.0)) throw std::invalid_argument("variation sigmas must be >= 0");
    }
    if (!(truncation >= 3.0)) throw std::invalid_argument("truncation bound must be >= 3 sigma");
}

nlohmann::json to_json(const VariationSpec& s) {
    return {{"sigma_vt0", s.sigma_vt0},
            {"sigma_ln_is", s.sigma_ln_is},
            {"sigma_s", s.sigma_s},
            {"sigma_l", s.sigma_l},
            {"correlation", s.correlation == Correlation::Independent ? "independent" : "mirrored"},
            {"truncation", s.truncation}};
}

VariationSpec variation_spec_from_json(const nlohmann::json& j) {
    VariationSpec s;
    s.sigma_vt0 = j.value("sigma_vt0", s.sigma_vt0);
    s.sigma_ln_is = j.value("sigma_ln_is", s.sigma_ln_is);
    s.sigma_s = j.value("sigma_s", s.sigma_s);
    s.sigma_l = j.value("sigma_l", s.sigma_l);
    s.truncation = j.value("truncation", s.truncation);
    const std::string corr = j.value("correlation", std::string("independent"));
    if (corr == "independent") s.correlation = Correlation::Independent;
    else if (corr == "mirrored") s.correlation = Correlation::MirroredPairs;
    else throw std::invalid_argument("unknown correlation '" + corr + "'");
    s.validate();
    return s;
}

VariationSpec load_variation_spec(const std::string& name_or_path) {
    if (name_or_path == "default") return VariationSpec{};
    if (name_or_path == "zero") return VariationSpec::zero();
    std::ifstream in(name_or_path);
    if (!in) throw std::invalid_argument("cannot open variation spec '" + name_or_path + "'");
    return variation_spec_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------- sampling

double counter_normal(std::uint64_t seed, std::uint64_t index, std::uint64_t key, int param, double truncation) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ index);
    h = mix64(h ^ key);
    h = mix64(h ^ static_cast<std::uint64_t>(param));
    const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;  // open interval (0, 1)
    const double tail = normal_cdf(-truncation);
    const double v = tail + u * (1.0 - 2.0 * tail);
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * v);
}

TrialSample sample_variation(const VariationSpec& spec, std::uint64_t seed, std::uint64_t index,
                             const std::vector<std::string>& devices) {
    spec.validate();
    TrialSample t;
    t.index = index;
    t.deltas.reserve(devices.size());
    for (const auto& dev : devices) {
        const std::uint64_t key =
            fnv1a(spec.correlation == Correlation::MirroredPairs ? pair_key(dev) : dev);
        auto draw = [&](int param, double sigma) {
            return sigma == 0.0 ? 0.0 : sigma * counter_normal(seed, index, key, param, spec.truncation);
        };
        DeviceDelta d;
        d.device = dev;
        d.d_vt0 = draw(0, spec.sigma_vt0);
        d.ln_is = draw(1, spec.sigma_ln_is);
        d.d_swing = draw(2, spec.sigma_s);
        d.rel_l = draw(3, spec.sigma_l);
        t.deltas.push_back(d);
    }
    return t;
}

std::vector<std::string> mos_devices(const Netlist& n) {
    std::vector<std::string> out;
    for (const auto& inst : n.instances) {
        if (inst.kind == InstanceKind::Mos) out.push_back(inst.name);
    }
    return out;
}

Netlist apply_sample(const Netlist& n, const TrialSample& sample) {
    Netlist out = n;
    for (const auto& d : sample.deltas) {
        if (d.d_vt0 == 0.0 && d.ln_is == 0.0 && d.d_swing == 0.0 && d.rel_l == 0.0) continue;
        Instance& inst = out.at(d.device);
        DeviceParams p = out.resolved_params(inst);
        p.vt0 += d.d_vt0;
        p.is *= std::exp(d.ln_is);
        p.swing += d.d_swing;
        p.l *= 1.0 + d.rel_l;
        const std::string model = inst.model + "@" + inst.name;
        out.models[model] = p;
        inst.model = model;
        inst.w.reset();
        inst.l.reset();
    }
    return out;
}

// ---------------------------------------------------------------- execution

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = count;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- distributions

std::string to_string(MetricKind m) {
    switch (m) {
        case MetricKind::Snm: return "snm";
        case MetricKind::Wnm: return "wnm";
        case MetricKind::IonIoff: return "ion_ioff";
        case MetricKind::LeakagePower: return "leakage_power";
    }
    return "?";
}

MetricKind parse_metric(const std::string& text) {
    for (MetricKind m : {MetricKind::Snm, MetricKind::Wnm, MetricKind::IonIoff, MetricKind::LeakagePower}) {
        if (to_string(m) == text) return m;
    }
    throw std::invalid_argument("unknown metric '" + text + "'");
}

double evaluate_metric(const Dut& dut, const MetricSpec& metric, double vdd, double temp_kelvin) {
    SnmOptions so = metric.snm;
    so.solver.temp_kelvin = temp_kelvin;
    switch (metric.kind) {
        case MetricKind::Snm: return snm(dut, metric.snm_mode, vdd, so).snm;
        case MetricKind::Wnm: return wnm(dut, vdd, so).wnm;
        case MetricKind::IonIoff: return ion_ioff(dut, vdd, temp_kelvin, so.solver).ratio;
        case MetricKind::LeakagePower: return leakage_power(dut, vdd, temp_kelvin, so.solver).worst;
    }
    throw std::invalid_argument("unknown metric");
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
    Histogram h;
    std::vector<double> v;
    for (double x : values) {
        if (!std::isnan(x)) v.push_back(x);
    }
    if (v.empty() || bins < 1) return h;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi == lo) {
        h.edges = {lo, hi};
        h.counts = {static_cast<int>(v.size())};
        return h;
    }
    const double width = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + b * width);
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double x : v) {
        const int b = std::min(bins - 1, static_cast<int>((x - lo) / width));
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

McDistribution mc_run(const Dut& dut, const VariationSpec& spec, const McOptions& opts,
                      const std::function<double(const Dut&)>& fn) {
    if (opts.n < 1) throw std::invalid_argument("Monte Carlo needs n >= 1");
    spec.validate();
    const auto devices = mos_devices(dut.netlist);
    const std::size_t n = static_cast<std::size_t>(opts.n);
    McDistribution d;
    d.samples.assign(n, kNaN);
    std::vector<std::string> reasons(n);

    auto trial = [&](std::size_t i) {
        try {
            Dut t = dut;
            t.netlist = apply_sample(dut.netlist, sample_variation(spec, opts.seed, i, devices));
            d.samples[i] = fn(t);
        } catch (const std::exception& e) {
            reasons[i] = e.what();
        }
    };
    if (spec.is_zero()) {
        trial(0);
        std::fill(d.samples.begin(), d.samples.end(), d.samples[0]);
        std::fill(reasons.begin(), reasons.end(), reasons[0]);
    } else {
        parallel_for(n, opts.threads, trial);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(d.samples[i])) {
            d.censored.push_back(i);
            d.censor_reasons.push_back(reasons[i].empty() ? "metric is NaN" : reasons[i]);
        }
    }
    if (d.censored.size() * 10 > n) {
        std::string msg = std::to_string(d.censored.size()) + " of " + std::to_string(n) +
                          " trials failed to evaluate; first: trial " + std::to_string(d.censored.front()) + ": " +
                          d.censor_reasons.front();
        throw McError(msg);
    }
    const Moments m = moments(d.samples);
    d.mean = m.mean;
    d.sigma = m.sigma;
    d.min = std::numeric_limits<double>::infinity();
    d.max = -std::numeric_limits<double>::infinity();
    for (double x : d.samples) {
        if (std::isnan(x)) continue;
        d.min = std::min(d.min, x);
        d.max = std::max(d.max, x);
    }
    d.histogram = make_histogram(d.samples);
    return d;
}

McDistribution mc_distribution(const Dut& dut, const MetricSpec& metric, double vdd, double temp_kelvin,
                               const VariationSpec& spec, const McOptions& opts) {
    return mc_run(dut, spec, opts, [&](const Dut& t) { return evaluate_metric(t, metric, vdd, temp_kelvin); });
}

nlohmann::json to_json(const McDistribution& d, bool with_samples) {
    nlohmann::json j{{"mean", d.mean},
                     {"sigma", d.sigma},
                     {"min", d.min},
                     {"max", d.max},
                     {"n", d.samples.size()},
                     {"censored", d.censored},
                     {"histogram", {{"edges", d.histogram.edges}, {"counts", d.histogram.counts}}}};
    if (with_samples) {
        nlohmann::json s = nlohmann::json::array();
        for (double x : d.samples) {
            if (std::isnan(x)) s.push_back(nullptr);
            else s.push_back(x);
        }
        j["samples"] = std::move(s);
    }
    return j;
}

// ---------------------------------------------------------------- failure probability

std::string to_string(EstimateMode m) { return m == EstimateMode::Empirical ? "EMPIRICAL" : "GAUSSIAN_TAIL"; }

std::string to_string(VddminOp op) {
    switch (op) {
        case VddminOp::Read: return "READ";
        case VddminOp::Access: return "ACCESS";
        case VddminOp::Write: return "WRITE";
        case VddminOp::Retention: return "RETENTION";
    }
    return "?";
}

std::pair<double, double> wilson_interval(int failures, int n) {
    if (n <= 0) return {0.0, 1.0};
    const double nn = n;
    if (failures == 0) return {0.0, std::min(1.0, 3.0 / nn)};
    if (failures == n) return {std::max(0.0, 1.0 - 3.0 / nn), 1.0};
    const double p = failures / nn;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<double> op_margins(const Dut& dut, VddminOp op, double vdd, const VariationSpec& spec,
                               const FailureOptions& opts) {
    if (opts.n < 1) throw std::invalid_argument("failure estimate needs n >= 1");
    spec.validate();
    const auto devices = mos_devices(dut.netlist);
    const std::size_t n = static_cast<std::size_t>(opts.n);
    std::vector<double> margins(n, kNaN);

    auto trial = [&](std::size_t i) {
        try {
            Dut t = dut;
            t.netlist = apply_sample(dut.netlist, sample_variation(spec, opts.seed, i, devices));
            margins[i] = trial_margin(t, op, vdd, opts);
        } catch (const std::exception&) {
            margins[i] = kNaN;
        }
    };
    if (spec.is_zero()) {
        trial(0);
        std::fill(margins.begin(), margins.end(), margins[0]);
        return margins;
    }

    const bool can_stop = opts.stop_above.has_value() && opts.mode == EstimateMode::Empirical;
    int failures = 0;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t len = std::min(kChunk, n - start);
        parallel_for(len, opts.threads, [&](std::size_t k) { trial(start + k); });
        for (std::size_t k = start; k < start + len; ++k) {
            if (std::isnan(margins[k]) || margins[k] < 0.0) ++failures;
        }
        if (can_stop && failures > *opts.stop_above * static_cast<double>(n)) {
            margins.resize(start + len);
            break;
        }
    }
    return margins;
}

FailureEstimate estimate_from_margins(const std::vector<double>& margins, EstimateMode mode) {
    if (mode == EstimateMode::GaussianTail) return gaussian_tail(margins, false);
    FailureEstimate e;
    e.mode = EstimateMode::Empirical;
    e.n = static_cast<int>(margins.size());
    for (double m : margins) {
        if (std::isnan(m)) ++e.censored;
        if (std::isnan(m) || m < 0.0) ++e.failures;
    }
    const Moments mo = moments(margins);
    e.margin_mean = mo.mean;
    e.margin_sigma = mo.sigma;
    e.p = e.n > 0 ? static_cast<double>(e.failures) / e.n : 0.0;
    std::tie(e.ci_low, e.ci_high) = wilson_interval(e.failures, e.n);
    return e;
}

FailureEstimate failure_probability(const Dut& dut, VddminOp op, double vdd, const VariationSpec& spec,
                                    const FailureOptions& opts) {
    if (opts.mode == EstimateMode::Empirical && opts.n < 100) {
        throw std::invalid_argument("empirical failure estimates need n >= 100");
    }
    const auto margins = op_margins(dut, op, vdd, spec, opts);
    FailureEstimate e = estimate_from_margins(margins, opts.mode);
    e.stopped_early = static_cast<int>(margins.size()) < opts.n;
    return e;
}

nlohmann::json to_json(const FailureEstimate& e) {
    return {{"mode", to_string(e.mode)},         {"p", e.p},
            {"ci_low", e.ci_low},                {"ci_high", e.ci_high},
            {"n", e.n},                          {"failures", e.failures},
            {"censored", e.censored},            {"margin_mean", e.margin_mean},
            {"margin_sigma", e.margin_sigma},    {"stopped_early", e.stopped_early}};
}

// ---------------------------------------------------------------- VDDmin

// Coarse bracketing stride of the minimum-voltage search, in grid steps.
constexpr int kCoarseSteps = 20;

VddminResult vddmin_search(const Dut& dut, const VariationSpec& spec, const VddminOptions& opts) {
    if (!(opts.grid > 0.0) || !(opts.v_high > opts.v_low)) throw std::invalid_argument("invalid VDD grid");
    if (!(opts.p_target > 0.0 && opts.p_target < 1.0)) throw std::invalid_argument("p_target must be in (0, 1)");
    VddminResult result;
    FailureOptions fo = opts.failure;
    const bool empirical = spec.is_zero() || opts.p_target * fo.n >= 1.0;
    fo.mode = empirical ? EstimateMode::Empirical : EstimateMode::GaussianTail;
    fo.stop_above = empirical ? std::optional<double>(opts.p_target) : std::nullopt;
    result.mode = fo.mode;

    const int top = static_cast<int>(std::lround((opts.v_high - opts.v_low) / opts.grid));
    auto volts = [&](int i) { return opts.v_low + i * opts.grid; };

    for (VddminOp op : {VddminOp::Read, VddminOp::Access, VddminOp::Write, VddminOp::Retention}) {
        VddminRow row;
        row.op = op;
        std::map<int, std::vector<double>> cache;
        auto margins_at = [&](int i) -> const std::vector<double>& {
            auto it = cache.find(i);
            if (it == cache.end()) {
                it = cache.emplace(i, op_margins(dut, op, volts(i), spec, fo)).first;
                ++row.evaluations;
            }
            return it->second;
        };
        auto passes = [&](int i) {
            const auto& m = margins_at(i);
            if (static_cast<int>(m.size()) < fo.n) return false;  // stopped early: already above target
            return estimate_from_margins(m, fo.mode).p <= opts.p_target;
        };

        // The other estimator at the chosen point, for side-by-side reporting.
        auto alternate_estimate = [&](int i) {
            FailureOptions alt = fo;
            alt.stop_above.reset();
            alt.mode = fo.mode == EstimateMode::Empirical ? EstimateMode::GaussianTail : EstimateMode::Empirical;
            const auto m = op_margins(dut, op, volts(i), spec, alt);
            if (alt.mode == EstimateMode::GaussianTail) return gaussian_tail(m, true);
            return estimate_from_margins(m, alt.mode);
        };

        // Ascending coarse scan brackets the least passing point, so a pass
        // window below a failing top of range is still found; bisection then
        // refines inside the bracket.
        int found = -1;
        int prev = -1;
        for (int i = 0;; i = std::min(i + kCoarseSteps, top)) {
            if (passes(i)) {
                found = i;
                break;
            }
            prev = i;
            if (i == top) break;
        }
        if (found < 0) {
            row.reachable = false;
        } else if (prev >= 0) {
            int lo = prev;
            int hi = found;
            while (hi - lo > 1) {
                const int mid = lo + (hi - lo) / 2;
                if (passes(mid)) hi = mid;
                else lo = mid;
            }
            found = hi;
        }
        if (found >= 0) {
            const bool above_ok = found + 2 > top || passes(found + 2);
            const bool below_ok = found - 2 < 0 || !passes(found - 2);
            if (!above_ok || !below_ok) {
                row.monotone = false;
                for (int i = 0; i <= top; ++i) {
                    if (passes(i)) {
                        found = i;
                        break;
                    }
                }
            }
            row.vmin = volts(found);
            const auto& m = margins_at(found);
            row.estimate = estimate_from_margins(m, fo.mode);
            row.alternate = alternate_estimate(found);
        } else {
            row.vmin = opts.v_high;
            const auto& m = margins_at(top);
            row.estimate = estimate_from_margins(m, EstimateMode::Empirical);
            row.estimate.mode = fo.mode;
            row.estimate.stopped_early = static_cast<int>(m.size()) < fo.n;
            row.alternate = alternate_estimate(top);
        }
        result.rows.push_back(row);
    }

    result.overall = -std::numeric_limits<double>::infinity();
    for (const auto& r : result.rows) {
        if (!r.reachable) {
            if (result.reachable) result.limiting = to_string(r.op);
            result.reachable = false;
        }
        if (result.reachable && r.vmin > result.overall) {
            result.overall = r.vmin;
            result.limiting = to_string(r.op);
        }
    }
    if (!result.reachable) result.overall = opts.v_high;
    return result;
}

nlohmann::json to_json(const VddminRow& r) {
    nlohmann::json j{{"op", to_string(r.op)},
                     {"reachable", r.reachable},
                     {"estimate", to_json(r.estimate)},
                     {"alternate", to_json(r.alternate)},
                     {"monotone", r.monotone},
                     {"evaluations", r.evaluations}};
    j["vmin"] = r.reachable ? nlohmann::json(r.vmin) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const VddminResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back(to_json(row));
    nlohmann::json j{{"rows", rows}, {"reachable", r.reachable}, {"limiting", r.limiting}, {"mode", to_string(r.mode)}};
    j["overall"] = r.reachable ? nlohmann::json(r.overall) : nlohmann::json(nullptr);
    return j;
}

}  // namespace ntsram
