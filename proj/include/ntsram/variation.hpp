#pragma once

// Monte Carlo process variation: counter-based sampling of per-device model
// deltas, metric distributions, failure probability and minimum-voltage
// search.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ntsram/characterization.hpp"
#include "ntsram/netlist.hpp"

namespace ntsram {

enum class Correlation { Independent, MirroredPairs };

struct VariationSpec {
    double sigma_vt0 = 0.030;    // [V]
    double sigma_ln_is = 0.15;   // sigma of ln(Is multiplier)
    double sigma_s = 0.002;      // [V/dec]
    double sigma_l = 0.02;       // relative channel-length sigma
    Correlation correlation = Correlation::Independent;
    double truncation = 4.0;     // bound in sigmas

    static VariationSpec zero();
    bool is_zero() const;
    void validate() const;  // throws std::invalid_argument
};

nlohmann::json to_json(const VariationSpec& s);
VariationSpec variation_spec_from_json(const nlohmann::json& j);
/// "default", "zero", or a path to a JSON file with any subset of
/// {sigma_vt0, sigma_ln_is, sigma_s, sigma_l, correlation, truncation}.
VariationSpec load_variation_spec(const std::string& name_or_path);

struct DeviceDelta {
    std::string device;
    double d_vt0 = 0.0;   // [V]
    double ln_is = 0.0;   // Is multiplied by exp(ln_is)
    double d_swing = 0.0; // [V/dec]
    double rel_l = 0.0;   // L multiplied by (1 + rel_l)
};

struct TrialSample {
    std::uint64_t index = 0;
    std::vector<DeviceDelta> deltas;  // same order as the requested devices
};

/// Deterministic in (spec, seed, index, device name) alone: a sample does not
/// depend on which other samples or devices were drawn. Each standard normal
/// comes from a 64-bit counter hash mapped to a uniform and passed through
/// the inverse normal CDF restricted to +-truncation.
TrialSample sample_variation(const VariationSpec& spec, std::uint64_t seed, std::uint64_t index,
                             const std::vector<std::string>& devices);

/// Standard normal draw for one (seed, index, key, parameter) counter.
double counter_normal(std::uint64_t seed, std::uint64_t index, std::uint64_t key, int param, double truncation);

/// MOS instance names of a netlist, in netlist order.
std::vector<std::string> mos_devices(const Netlist& n);

/// Copy of `n` where every varied device gets a private model card carrying
/// its deltas.
Netlist apply_sample(const Netlist& n, const TrialSample& sample);

// ---------------------------------------------------------------- execution

/// Run body(i) for i in [0, count) on up to `threads` workers (0: hardware
/// concurrency). Results must be written to per-index slots; the schedule
/// never affects them.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------- distributions

enum class MetricKind { Snm, Wnm, IonIoff, LeakagePower };
std::string to_string(MetricKind m);
MetricKind parse_metric(const std::string& text);

struct MetricSpec {
    MetricKind kind = MetricKind::Snm;
    SnmMode snm_mode = SnmMode::Read;
    SnmOptions snm;
};

/// Scalar value of a metric on one netlist: SNM and WNM in volts, the Ion/Ioff
/// ratio, or worst-case leakage power in watts.
double evaluate_metric(const Dut& dut, const MetricSpec& metric, double vdd, double temp_kelvin);

struct Histogram {
    std::vector<double> edges;  // bins + 1 edges
    std::vector<int> counts;
};

Histogram make_histogram(const std::vector<double>& values, int bins = 40);

struct McDistribution {
    double mean = 0.0;
    double sigma = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::vector<double> samples;               // by trial index; NaN when censored
    std::vector<std::uint64_t> censored;       // trial indices that failed to evaluate
    std::vector<std::string> censor_reasons;
    Histogram histogram;
};

struct McOptions {
    int n = 1000;
    std::uint64_t seed = 1;
    int threads = 0;
};

class McError : public std::runtime_error {
public:
    explicit McError(const std::string& what) : std::runtime_error(what) {}
};

/// Generic driver: evaluates fn(trial netlist) per trial and aggregates in
/// index order. Throws McError when more than 10% of trials fail.
McDistribution mc_run(const Dut& dut, const VariationSpec& spec, const McOptions& opts,
                      const std::function<double(const Dut&)>& fn);

McDistribution mc_distribution(const Dut& dut, const MetricSpec& metric, double vdd, double temp_kelvin,
                               const VariationSpec& spec, const McOptions& opts);

nlohmann::json to_json(const McDistribution& d, bool with_samples = false);

// ---------------------------------------------------------------- failure probability

enum class EstimateMode { Empirical, GaussianTail };
std::string to_string(EstimateMode m);

struct FailureEstimate {
    EstimateMode mode = EstimateMode::Empirical;
    double p = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n = 0;         // trials evaluated
    int failures = 0;  // failed or censored
    int censored = 0;
    double margin_mean = 0.0;
    double margin_sigma = 0.0;
    bool stopped_early = false;  // evaluation halted once the target was exceeded
};

/// Operations evaluated by the failure model. Write covers both polarities.
enum class VddminOp { Read, Access, Write, Retention };
std::string to_string(VddminOp op);

struct FailureOptions {
    EstimateMode mode = EstimateMode::Empirical;
    OpTiming timing;
    double temp_kelvin = 300.0;
    int n = 2000;
    std::uint64_t seed = 1;
    int threads = 0;
    /// Empirical mode only: stop once the failure count proves p > stop_above.
    std::optional<double> stop_above;
    /// Transfer-curve resolution of the quasi-static margins [V].
    double sweep_step = 2e-3;
};

/// Wilson score interval at 95%; the rule of three bounds the all-pass and
/// all-fail cases.
std::pair<double, double> wilson_interval(int failures, int n);

/// One trial margin per index (NaN when the simulation did not converge).
/// Empirical mode uses the dynamic end-of-cycle margins. Gaussian-tail mode
/// uses continuous margins: read SNM for read, WNM for write, hold SNM for
/// retention and bitline development for access.
std::vector<double> op_margins(const Dut& dut, VddminOp op, double vdd, const VariationSpec& spec,
                               const FailureOptions& opts);

FailureEstimate failure_probability(const Dut& dut, VddminOp op, double vdd, const VariationSpec& spec,
                                    const FailureOptions& opts);

/// Estimate from an already computed margin vector.
FailureEstimate estimate_from_margins(const std::vector<double>& margins, EstimateMode mode);

nlohmann::json to_json(const FailureEstimate& e);

// ---------------------------------------------------------------- VDDmin

struct VddminRow {
    VddminOp op = VddminOp::Read;
    bool reachable = true;
    double vmin = 0.0;  // [V]; meaningless when !reachable
    FailureEstimate estimate;   // at vmin, in the search mode
    FailureEstimate alternate;  // at vmin, with the other estimator
    bool monotone = true;                // spot checks at +-2 grid steps passed
    int evaluations = 0;
};

struct VddminOptions {
    double p_target = 1e-2;
    double grid = 0.005;
    double v_low = 0.1;
    double v_high = 1.2;
    FailureOptions failure;  // mode is chosen from p_target and n
};

struct VddminResult {
    std::vector<VddminRow> rows;  // Read, Access, Write, Retention
    bool reachable = true;
    double overall = 0.0;         // max over rows
    std::string limiting;         // operation of the max row
    EstimateMode mode = EstimateMode::Empirical;
};

VddminResult vddmin_search(const Dut& dut, const VariationSpec& spec, const VddminOptions& opts);

nlohmann::json to_json(const VddminRow& r);
nlohmann::json to_json(const VddminResult& r);

}  // namespace ntsram
