#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgtphd/core_types.hpp"
#include "bgtphd/estimation.hpp"
#include "bgtphd/models.hpp"
#include "bgtphd/reduction.hpp"
#include "bgtphd/trajectory_window.hpp"

namespace bgtphd {

// Gaussian-mixture trajectory PHD with known detection probability and known
// Poisson clutter. Serves as the reference the robust filter is compared to.

struct GmTrajectoryComponent {
    double weight = 0.0;
    TrajectoryGaussian traj;
};

struct GmPhd {
    int time = 0;
    std::vector<GmTrajectoryComponent> components;

    [[nodiscard]] double total_weight() const {
        double s = 0.0;
        for (const auto& c : components) s += c.weight;
        return s;
    }
};

/// Birth term w N(x; m, P) of a single-state trajectory starting at the scan.
struct GaussianBirth {
    double weight = 0.0;
    Vector mean;
    Matrix cov;
};

template <MotionModel Motion>
GmPhd tphd_predict(const GmPhd& prior, const Motion& motion, const std::vector<GaussianBirth>& births,
                   double p_survive, int window_limit = kFullTrajectory) {
    GmPhd out;
    out.time = prior.time + 1;
    out.components.reserve(prior.components.size() + births.size());
    for (const auto& c : prior.components) {
        out.components.push_back({c.weight * p_survive, predict_trajectory(c.traj, motion, window_limit)});
    }
    for (const auto& b : births) {
        if (b.mean.size() != motion.state_dim()) throw std::invalid_argument("birth dimension does not match motion model");
        out.components.push_back({b.weight, make_trajectory(out.time, b.mean, b.cov)});
    }
    return out;
}

struct GmUpdateOptions {
    /// Detection terms lighter than this are not materialised (0 keeps all).
    double skip_below = 0.0;
};

/// Posterior: misdetection copies with weight (1 - p_D) w, then for every
/// measurement one Kalman-updated copy per component with weight
/// p_D w q(z) / (λ_c c(z) + Σ_l p_D w_l q_l(z)).
template <SensorModel Sensor, typename ClutterDensity>
GmPhd tphd_update(const GmPhd& prior, const Scan& scan, const Sensor& sensor, double p_detect, double clutter_rate,
                  const ClutterDensity& clutter_density, const GmUpdateOptions& opts = {}) {
    if (!(p_detect >= 0.0 && p_detect <= 1.0)) throw std::invalid_argument("detection probability outside [0, 1]");
    if (!(clutter_rate >= 0.0)) throw std::invalid_argument("clutter rate must be non-negative");
    if (scan.time != prior.time) throw std::invalid_argument("scan time does not match filter time");

    const std::size_t J = prior.components.size();
    GmPhd out;
    out.time = prior.time;
    out.components.reserve(J * (1 + scan.measurements.size()));
    for (const auto& c : prior.components) {
        out.components.push_back({c.weight * (1.0 - p_detect), c.traj});
    }
    if (p_detect == 0.0 || scan.measurements.empty()) return out;

    std::vector<WindowUpdate> kal;
    kal.reserve(J);
    for (const auto& c : prior.components) kal.emplace_back(c.traj, sensor);

    std::vector<double> num(J);
    for (const auto& z : scan.measurements) {
        if (z.size() != sensor.measurement_dim()) throw std::invalid_argument("measurement dimension mismatch");
        double denom = clutter_rate * clutter_density(z);
        for (std::size_t j = 0; j < J; ++j) {
            num[j] = p_detect * prior.components[j].weight * kal[j].likelihood(z);
            denom += num[j];
        }
        if (!(denom > 0.0)) continue;
        for (std::size_t j = 0; j < J; ++j) {
            const double w = num[j] / denom;
            if (w < opts.skip_below) continue;
            out.components.push_back({w, kal[j].posterior(z)});
        }
    }
    return out;
}

inline GmPhd prune_and_absorb(const GmPhd& state, const ReductionThresholds& thr, ReductionStats* stats = nullptr) {
    return {state.time, prune_and_absorb(state.components, thr, stats)};
}

inline ScanEstimate estimate(const GmPhd& state) { return detail::estimate_tracks(state.components, state.time); }

struct GmTphdParams {
    double p_survive = 0.99;
    double p_detect = 0.98;
    double clutter_rate = 10.0;
    int window = kFullTrajectory;
    ReductionThresholds reduction;
};

/// Scan-by-scan driver: predict, update, reduce, estimate.
template <MotionModel Motion, SensorModel Sensor>
class GmTphdFilter {
public:
    GmTphdFilter(Motion motion, Sensor sensor, UniformClutter clutter, std::vector<GaussianBirth> births,
                 GmTphdParams params)
        : motion_(std::move(motion)),
          sensor_(std::move(sensor)),
          clutter_(std::move(clutter)),
          births_(std::move(births)),
          params_(params) {}

    ScanEstimate step(const Scan& scan) {
        GmPhd predicted = tphd_predict(state_, motion_, births_, params_.p_survive, params_.window);
        const GmPhd posterior =
            tphd_update(predicted, scan, sensor_, params_.p_detect, params_.clutter_rate,
                        [this](const Vector& z) { return clutter_.density(z); },
                        GmUpdateOptions{params_.reduction.prune});
        state_ = prune_and_absorb(posterior, params_.reduction);
        return estimate(state_);
    }

    [[nodiscard]] const GmPhd& state() const { return state_; }

private:
    Motion motion_;
    Sensor sensor_;
    UniformClutter clutter_;
    std::vector<GaussianBirth> births_;
    GmTphdParams params_;
    GmPhd state_;
};

}  // namespace bgtphd
