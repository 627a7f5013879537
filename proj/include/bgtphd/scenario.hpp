#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <atomic>
#include <variant>
#include <vector>

#include "bgtphd/bg_rtphd.hpp"
#include "bgtphd/core_types.hpp"
#include "bgtphd/gm_tphd.hpp"
#include "bgtphd/models.hpp"
#include "bgtphd/reduction.hpp"
#include "bgtphd/trajectory_metric.hpp"

namespace bgtphd {

using MotionVariant = std::variant<CtModel, LinearMotion>;
using SensorVariant = std::variant<BearingRangeSensor, LinearSensor>;

struct TargetSpec {
    Vector initial_state;  // 4 kinematic entries (turn rate 0 appended) or the full state
    int birth = 1;
    int death = 100;
};

/// Every tunable of the simulation experiment. Defaults reproduce the
/// four-target coordinated-turn / bearing-range scenario.
struct ScenarioConfig {
    MotionVariant motion = CtModel{};
    SensorVariant sensor = BearingRangeSensor{};
    UniformClutter clutter_region = UniformClutter::bearing_range_default();
    /// Cartesian surveillance box over the first two state entries.
    Eigen::Vector2d position_lower{-2000.0, 0.0};
    Eigen::Vector2d position_upper{2000.0, 2000.0};

    double p_survive = 0.99;
    double p_survive_clutter = 0.9;
    double p_detect = 0.98;
    int clutter_generators = 20;
    double clutter_detect = 0.5;
    bool truth_process_noise = true;
    std::vector<TargetSpec> targets = default_targets();

    std::vector<TrackBirth> track_births = default_track_births();
    std::vector<ClutterBirth> clutter_births{{5.0, {1.0, 1.0}}};
    double k_beta = 1.1;
    ReductionThresholds reduction{1e-5, 4.0, 100};
    int window = 5;
    int horizon = 100;
    int run_count = 100;
    std::uint64_t master_seed = 20240607;
    TmParams metric{2.0, 10.0, 1.0};

    [[nodiscard]] int state_dim() const {
        return std::visit([](const auto& m) { return m.state_dim(); }, motion);
    }
    [[nodiscard]] double expected_clutter() const { return clutter_generators * clutter_detect; }

    static std::vector<TargetSpec> default_targets() {
        auto v = [](double a, double b, double c, double d) {
            Vector x(4);
            x << a, b, c, d;
            return x;
        };
        return {{v(1005, 1489, 8, -10), 1, 100},
                {v(-256, 1011, 20, 3), 10, 100},
                {v(-1507, 257, 11, 10), 10, 80},
                {v(250, 750, -40, 25), 40, 100}};
    }

    static std::vector<TrackBirth> default_track_births() {
        const double deg = std::numbers::pi / 180.0;
        Vector sd(5);
        sd << 50, 50, 50, 50, 3 * deg;
        const Matrix P = sd.array().square().matrix().asDiagonal();
        std::vector<TrackBirth> out;
        for (auto [x, y] : {std::pair{-1500.0, 250.0}, {-250.0, 1000.0}, {250.0, 750.0}, {1000.0, 1500.0}}) {
            Vector m = Vector::Zero(5);
            m(0) = x;
            m(1) = y;
            out.push_back({0.01, m, P, {8.0, 2.0}});
        }
        return out;
    }
};

/// Validation of a configuration; returns the first problem found or empty.
inline std::string check_config(const ScenarioConfig& c) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(c.p_survive) || !prob(c.p_survive_clutter) || !prob(c.p_detect) || !prob(c.clutter_detect)) {
        return "probabilities must lie in [0, 1]";
    }
    if (c.clutter_generators < 0) return "clutter generator count must be non-negative";
    if (!(c.reduction.prune > 0.0) || !std::isfinite(c.reduction.prune)) return "pruning threshold must be positive";
    if (!(c.reduction.absorb > 0.0) || !std::isfinite(c.reduction.absorb)) return "absorption threshold must be positive";
    if (c.reduction.max_components < 1) return "max components must be at least 1";
    if (c.window < 1) return "L-scan depth must be at least 1";
    if (c.horizon < 1) return "horizon must be at least 1";
    if (c.run_count < 1) return "run count must be at least 1";
    if (!(c.k_beta >= 1.0) || !std::isfinite(c.k_beta)) return "k_beta must be a finite factor >= 1";
    const int n = c.state_dim();
    for (const auto& b : c.track_births) {
        if (b.mean.size() != n || b.cov.rows() != n || b.cov.cols() != n) return "birth dimension does not match motion model";
        if (!(b.weight >= 0.0) || !(b.beta.u > 0.0) || !(b.beta.v > 0.0)) return "invalid track birth";
    }
    for (const auto& b : c.clutter_births) {
        if (!(b.weight >= 0.0) || !(b.beta.u >= 1.0) || !(b.beta.v >= 1.0)) return "invalid clutter birth";
    }
    for (const auto& t : c.targets) {
        if (t.initial_state.size() != n && !(n == 5 && t.initial_state.size() == 4)) return "target state dimension mismatch";
        if (t.birth < 1 || t.death < t.birth) return "target lifetime invalid";
    }
    const int nz = std::visit([](const auto& s) { return s.measurement_dim(); }, c.sensor);
    if (c.clutter_region.lower.size() != nz || c.clutter_region.upper.size() != nz) return "clutter region dimension mismatch";
    if (!(c.clutter_region.volume() > 0.0)) return "clutter region must have positive volume";
    return {};
}

// ---------------------------------------------------------------- seeding --

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under `parent`: splitmix64(parent ^ splitmix64(index)).
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

/// Draw from N(0, cov) through a symmetric square root (covariance may be
/// singular).
inline Vector sample_gaussian(const Matrix& cov, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector w(cov.rows());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = n01(rng);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector sd = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * sd.asDiagonal() * w;
}

// ------------------------------------------------------------------ truth --

struct TruthTarget {
    Trajectory trajectory;
    int nominal_death = 0;

    [[nodiscard]] int death() const { return trajectory.last_time(); }
};

struct GroundTruth {
    std::vector<TruthTarget> targets;

    [[nodiscard]] int alive_count(int k) const {
        int n = 0;
        for (const auto& t : targets) n += t.trajectory.alive_at(k) ? 1 : 0;
        return n;
    }

    /// Trajectories of targets alive at k, cut at k.
    [[nodiscard]] std::vector<Trajectory> alive_trajectories(int k) const {
        std::vector<Trajectory> out;
        for (const auto& t : targets) {
            if (!t.trajectory.alive_at(k)) continue;
            Trajectory cut{t.trajectory.birth_time, {}};
            cut.states.assign(t.trajectory.states.begin(),
                              t.trajectory.states.begin() + (k - t.trajectory.birth_time + 1));
            out.push_back(std::move(cut));
        }
        return out;
    }
};

namespace detail {

inline Vector measurement_mean(const SensorVariant& sensor, const Vector& x) {
    return std::visit([&](const auto& s) { return s.measure(x).mean; }, sensor);
}

inline const Matrix& measurement_noise(const SensorVariant& sensor) {
    return std::visit([](const auto& s) -> const Matrix& { return s.noise(); }, sensor);
}

}  // namespace detail

/// A target stays in the scenario while its position lies in the surveillance
/// box and its noise-free measurement lies in the sensor's measurement region.
inline bool in_surveillance(const ScenarioConfig& cfg, const Vector& x) {
    const Eigen::Vector2d p = x.head(2);
    if ((p.array() < cfg.position_lower.array()).any() || (p.array() > cfg.position_upper.array()).any()) return false;
    if (x.head(2).squaredNorm() == 0.0) return false;
    return cfg.clutter_region.contains(detail::measurement_mean(cfg.sensor, x));
}

inline GroundTruth generate_truth(const ScenarioConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    GroundTruth truth;
    const int n = cfg.state_dim();
    for (const auto& spec : cfg.targets) {
        Vector x = Vector::Zero(n);
        x.head(spec.initial_state.size()) = spec.initial_state;
        TruthTarget t{{spec.birth, {}}, spec.death};
        const int last = std::min(spec.death, cfg.horizon);
        for (int k = spec.birth; k <= last; ++k) {
            if (k > spec.birth) {
                const TransitionLinearization lin =
                    std::visit([&](const auto& m) { return m.transition(x); }, cfg.motion);
                x = lin.mean;
                if (cfg.truth_process_noise) x += sample_gaussian(lin.noise, rng);
            }
            if (!in_surveillance(cfg, x)) break;
            t.trajectory.states.push_back(x);
        }
        truth.targets.push_back(std::move(t));
    }
    return truth;
}

/// Measurements at scan k: Bernoulli(p_D) detections of the alive targets
/// (kept only inside the measurement region), Binomial(N_c, p_D^c) clutter
/// points uniform over the region, in shuffled order.
inline Scan generate_scan(const GroundTruth& truth, int k, const ScenarioConfig& cfg, Rng& rng) {
    Scan scan{k, {}};
    std::bernoulli_distribution detect(cfg.p_detect);
    const Matrix& R = detail::measurement_noise(cfg.sensor);
    for (const auto& t : truth.targets) {
        if (!t.trajectory.alive_at(k)) continue;
        if (!detect(rng)) continue;
        Vector z = detail::measurement_mean(cfg.sensor, t.trajectory.at(k)) + sample_gaussian(R, rng);
        if (cfg.clutter_region.contains(z)) scan.measurements.push_back(std::move(z));
    }
    std::binomial_distribution<int> clutter_count(cfg.clutter_generators, cfg.clutter_detect);
    const int nc = clutter_count(rng);
    const auto& lo = cfg.clutter_region.lower;
    const auto& hi = cfg.clutter_region.upper;
    for (int c = 0; c < nc; ++c) {
        Vector z(lo.size());
        for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = std::uniform_real_distribution<double>(lo(d), hi(d))(rng);
        scan.measurements.push_back(std::move(z));
    }
    std::shuffle(scan.measurements.begin(), scan.measurements.end(), rng);
    return scan;
}

/// Truth and all scans of one Monte Carlo run; fully determined by the seed.
struct SimulatedRun {
    std::uint64_t seed = 0;
    GroundTruth truth;
    std::vector<Scan> scans;
};

inline SimulatedRun simulate_run(const ScenarioConfig& cfg, std::uint64_t seed) {
    SimulatedRun run;
    run.seed = seed;
    run.truth = generate_truth(cfg, derive_seed(seed, 0));
    Rng rng(derive_seed(seed, 1));
    for (int k = 1; k <= cfg.horizon; ++k) run.scans.push_back(generate_scan(run.truth, k, cfg, rng));
    return run;
}

inline std::uint64_t run_seed(const ScenarioConfig& cfg, int run_index) {
    return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(run_index));
}

// ---------------------------------------------------------------- filters --

enum class FilterKind { robust, baseline };

inline std::string to_string(FilterKind k) { return k == FilterKind::robust ? "robust" : "baseline"; }

inline FilterKind filter_kind_from_string(const std::string& s) {
    if (s == "robust") return FilterKind::robust;
    if (s == "baseline") return FilterKind::baseline;
    throw std::invalid_argument("unknown filter variant '" + s + "' (expected robust or baseline)");
}

struct FilterVariant {
    FilterKind kind = FilterKind::robust;
    int window = 5;

    friend bool operator==(const FilterVariant&, const FilterVariant&) = default;
};

namespace detail {

inline std::vector<GaussianBirth> gaussian_births(const ScenarioConfig& cfg) {
    std::vector<GaussianBirth> out;
    for (const auto& b : cfg.track_births) out.push_back({b.weight, b.mean, b.cov});
    return out;
}

/// Runs one filter over the scans; returns the per-scan estimates.
template <MotionModel Motion, SensorModel Sensor>
std::vector<ScanEstimate> run_filter(const ScenarioConfig& cfg, const FilterVariant& variant, const Motion& motion,
                                     const Sensor& sensor, const std::vector<Scan>& scans) {
    std::vector<ScanEstimate> out;
    out.reserve(scans.size());
    if (variant.kind == FilterKind::robust) {
        RobustTphdParams params{{cfg.p_survive, cfg.p_survive_clutter, cfg.k_beta}, variant.window, cfg.reduction};
        RobustTphdFilter<Motion, Sensor> filter(motion, sensor, cfg.clutter_region, cfg.track_births,
                                                cfg.clutter_births, params);
        for (const auto& s : scans) out.push_back(filter.step(s));
    } else {
        GmTphdParams params{cfg.p_survive, cfg.p_detect, cfg.expected_clutter(), variant.window, cfg.reduction};
        GmTphdFilter<Motion, Sensor> filter(motion, sensor, cfg.clutter_region, gaussian_births(cfg), params);
        for (const auto& s : scans) out.push_back(filter.step(s));
    }
    return out;
}

}  // namespace detail

inline std::vector<ScanEstimate> run_filter(const ScenarioConfig& cfg, const FilterVariant& variant,
                                            const std::vector<Scan>& scans) {
    return std::visit(
        [&](const auto& motion, const auto& sensor) { return detail::run_filter(cfg, variant, motion, sensor, scans); },
        cfg.motion, cfg.sensor);
}

// ------------------------------------------------------------ monte carlo --

/// Per-scan summary kept for every run.
struct ScanSummary {
    int time = 0;
    int cardinality = 0;
    int true_cardinality = 0;
    double clutter_rate = std::nan("");
    double clutter_rate_raw = std::nan("");
    double mean_detection_prob = std::nan("");  // over reported tracks, NaN when none
    double tm = std::nan("");                   // per-scan normalised metric, NaN when not computed
};

struct RunRecord {
    int index = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double wall_seconds = 0.0;  // filter time only
    std::vector<ScanSummary> summary;
    // Kept only on request (see MonteCarloOptions::keep_detail).
    GroundTruth truth;
    std::vector<Scan> scans;
    std::vector<ScanEstimate> estimates;
};

struct MonteCarloOptions {
    bool compute_metric = true;
    bool keep_detail = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct ScanAggregate {
    int time = 0;
    int runs = 0;
    double mean_cardinality = 0.0;
    double cardinality_std = 0.0;
    double mean_true_cardinality = 0.0;
    double mean_clutter_rate = std::nan("");
    double rms_tm = std::nan("");
    double mean_detection_prob = std::nan("");
};

struct MonteCarloResult {
    FilterVariant variant;
    std::vector<RunRecord> runs;
    std::vector<ScanAggregate> aggregate;
    int failed_runs = 0;
    double mean_seconds = 0.0;
    double min_seconds = 0.0;
    double max_seconds = 0.0;
};

/// Trajectory-metric error at scan k: (d^p / k)^(1/p) between the alive true
/// trajectories and the reported ones, over times 1..k.
inline double scan_metric(const GroundTruth& truth, const ScanEstimate& est, const TmParams& params) {
    const int k = est.time;
    std::vector<Trajectory> estimated;
    estimated.reserve(est.tracks.size());
    for (const auto& t : est.tracks) estimated.push_back(t.trajectory);
    const TmResult r = trajectory_metric(truth.alive_trajectories(k), estimated, k, params);
    return std::pow(std::pow(r.distance, params.p) / k, 1.0 / params.p);
}

inline RunRecord execute_run(const ScenarioConfig& cfg, const FilterVariant& variant, int run_index,
                             const MonteCarloOptions& opts) {
    RunRecord rec;
    rec.index = run_index;
    rec.seed = run_seed(cfg, run_index);
    try {
        SimulatedRun sim = simulate_run(cfg, rec.seed);
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<ScanEstimate> est = run_filter(cfg, variant, sim.scans);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& e : est) {
            ScanSummary s;
            s.time = e.time;
            s.cardinality = e.cardinality;
            s.true_cardinality = sim.truth.alive_count(e.time);
            if (e.clutter_rate) s.clutter_rate = *e.clutter_rate;
            if (e.clutter_rate_raw) s.clutter_rate_raw = *e.clutter_rate_raw;
            double pd = 0.0;
            int npd = 0;
            for (const auto& t : e.tracks) {
                if (t.detection_prob) {
                    pd += *t.detection_prob;
                    ++npd;
                }
            }
            if (npd > 0) s.mean_detection_prob = pd / npd;
            if (opts.compute_metric) s.tm = scan_metric(sim.truth, e, cfg.metric);
            rec.summary.push_back(s);
        }
        if (opts.keep_detail) {
            rec.truth = std::move(sim.truth);
            rec.scans = std::move(sim.scans);
            rec.estimates = std::move(est);
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.summary.clear();
    }
    return rec;
}

/// Ordered reduction of the successful runs into per-scan aggregates.
inline std::vector<ScanAggregate> aggregate_runs(const std::vector<RunRecord>& runs, int horizon) {
    std::vector<ScanAggregate> agg(static_cast<std::size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) {
        auto& a = agg[static_cast<std::size_t>(k - 1)];
        a.time = k;
        double sum = 0, sum2 = 0, truth = 0, clutter = 0, tm2 = 0, pd = 0;
        int n = 0, nclutter = 0, ntm = 0, npd = 0;
        for (const auto& r : runs) {
            if (r.failed || static_cast<int>(r.summary.size()) < k) continue;
            const auto& s = r.summary[static_cast<std::size_t>(k - 1)];
            ++n;
            sum += s.cardinality;
            sum2 += static_cast<double>(s.cardinality) * s.cardinality;
            truth += s.true_cardinality;
            if (!std::isnan(s.clutter_rate)) {
                clutter += s.clutter_rate;
                ++nclutter;
            }
            if (!std::isnan(s.tm)) {
                tm2 += s.tm * s.tm;
                ++ntm;
            }
            if (!std::isnan(s.mean_detection_prob)) {
                pd += s.mean_detection_prob;
                ++npd;
            }
        }
        a.runs = n;
        if (n > 0) {
            a.mean_cardinality = sum / n;
            a.cardinality_std = std::sqrt(std::max(sum2 / n - a.mean_cardinality * a.mean_cardinality, 0.0));
            a.mean_true_cardinality = truth / n;
        }
        if (nclutter > 0) a.mean_clutter_rate = clutter / nclutter;
        if (ntm > 0) a.rms_tm = std::sqrt(tm2 / ntm);
        if (npd > 0) a.mean_detection_prob = pd / npd;
    }
    return agg;
}

/// Runs `run_count` independent replications of one filter variant. Run i
/// uses seed derive_seed(master_seed, i) regardless of how many runs or
/// threads are used.
inline MonteCarloResult run_monte_carlo(const ScenarioConfig& cfg, const FilterVariant& variant,
                                        const MonteCarloOptions& opts = {}) {
    if (cfg.run_count < 1) throw std::invalid_argument("run count must be at least 1");
    MonteCarloResult res;
    res.variant = variant;
    res.runs.resize(static_cast<std::size_t>(cfg.run_count));

    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.run_count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < cfg.run_count; i = next++) {
            res.runs[static_cast<std::size_t>(i)] = execute_run(cfg, variant, i, opts);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    int ok = 0;
    double total = 0.0;
    res.min_seconds = std::numeric_limits<double>::infinity();
    res.max_seconds = 0.0;
    for (const auto& r : res.runs) {
        if (r.failed) {
            ++res.failed_runs;
            continue;
        }
        ++ok;
        total += r.wall_seconds;
        res.min_seconds = std::min(res.min_seconds, r.wall_seconds);
        res.max_seconds = std::max(res.max_seconds, r.wall_seconds);
    }
    res.mean_seconds = ok ? total / ok : std::nan("");
    if (!ok) res.min_seconds = std::nan("");
    res.aggregate = aggregate_runs(res.runs, cfg.horizon);
    return res;
}

}  // namespace bgtphd
