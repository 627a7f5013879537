#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bgtphd/beta.hpp"
#include "bgtphd/core_types.hpp"
#include "bgtphd/estimation.hpp"
#include "bgtphd/models.hpp"
#include "bgtphd/reduction.hpp"
#include "bgtphd/trajectory_window.hpp"

namespace bgtphd {

/// Birth term w Beta(a; u, v) N(x; m, P) for trajectories starting at the scan.
struct TrackBirth {
    double weight = 0.0;
    Vector mean;
    Matrix cov;
    BetaParams beta{8.0, 2.0};
};

/// Birth term w Beta(o; u, v) for clutter generators.
struct ClutterBirth {
    double weight = 0.0;
    BetaParams beta{1.0, 1.0};
};

struct RobustPredictParams {
    double p_survive = 0.99;
    double p_survive_clutter = 0.9;
    double k_beta = 1.1;
};

class MeasurementSupportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UpdateDiagnostics {
    /// Θ(z) per measurement, scan order.
    std::vector<double> theta;
    /// Detection weight of prior track j for measurement z: association(j, z).
    Matrix association;
    ReductionStats reduction;
};

/// Prediction of the Beta-Gaussian mixture with an L-scan window.
///
/// Surviving tracks: weight * p_S, Beta moment-matched with inflation k_beta,
/// trajectory Gaussian extended by one step (oldest step archived once the
/// window holds `window_limit` steps). Clutter generators: weight * p_S^c with
/// Beta copied unchanged. Births are appended after the survivors.
template <MotionModel Motion>
BgmPhd lscan_predict(const BgmPhd& prior, const Motion& motion, const std::vector<TrackBirth>& track_births,
                     const std::vector<ClutterBirth>& clutter_births, const RobustPredictParams& params,
                     int window_limit) {
    BgmPhd out;
    out.time = prior.time + 1;
    out.tracks.reserve(prior.tracks.size() + track_births.size());
    for (std::size_t j = 0; j < prior.tracks.size(); ++j) {
        const auto& c = prior.tracks[j];
        BetaParams beta;
        try {
            beta = predict_beta(c.beta, params.k_beta);
        } catch (const BetaDegenerateError& e) {
            throw BetaDegenerateError(std::string(e.what()) + " (track component " + std::to_string(j) + ")");
        }
        out.tracks.push_back({c.weight * params.p_survive, predict_trajectory(c.traj, motion, window_limit), beta});
    }
    for (const auto& b : track_births) {
        if (b.mean.size() != motion.state_dim()) throw std::invalid_argument("birth dimension does not match motion model");
        out.tracks.push_back({b.weight, make_trajectory(out.time, b.mean, b.cov), b.beta});
    }
    out.clutter.reserve(prior.clutter.size() + clutter_births.size());
    for (const auto& c : prior.clutter) out.clutter.push_back({c.weight * params.p_survive_clutter, c.beta});
    for (const auto& b : clutter_births) out.clutter.push_back({b.weight, b.beta});
    return out;
}

/// Prediction keeping the whole trajectory in the joint Gaussian.
template <MotionModel Motion>
BgmPhd predict(const BgmPhd& prior, const Motion& motion, const std::vector<TrackBirth>& track_births,
               const std::vector<ClutterBirth>& clutter_births, const RobustPredictParams& params) {
    return lscan_predict(prior, motion, track_births, clutter_births, params, kFullTrajectory);
}

struct RobustUpdateOptions {
    /// Track detection terms lighter than this are not materialised (0 keeps all).
    double skip_below = 0.0;
};

/// Beta-Gaussian update of tracks and clutter generators.
///
/// Output order: one misdetection copy per track (weight w psi0, Beta (u, v+1),
/// prior Gaussian), then for each measurement one detection copy per track
/// (weight w psi1 q(z) / Θ(z), Beta (u+1, v), Kalman update over the window).
/// For clutter generator l the detection copies of all measurements share the
/// Beta (u+1, v) and are returned as one term with the summed weight, after
/// the misdetection term (u, v+1).
///
/// Θ(z) = Σ_l d_{c,l} w_{c,l} c(z) + Σ_l d_l w_l q_l(z), with d = u / (u + v).
/// The window never holds more than L steps, so the gain automatically covers
/// only the L-scan window.
template <SensorModel Sensor, typename ClutterDensity>
std::pair<BgmPhd, UpdateDiagnostics> update(const BgmPhd& prior, const Scan& scan, const Sensor& sensor,
                                            const ClutterDensity& clutter_density,
                                            const RobustUpdateOptions& opts = {}) {
    if (scan.time != prior.time) throw std::invalid_argument("scan time does not match filter time");
    const std::size_t J = prior.tracks.size();
    const std::size_t Jc = prior.clutter.size();
    const std::size_t M = scan.measurements.size();

    UpdateDiagnostics diag;
    diag.theta.resize(M);
    diag.association = Matrix::Zero(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(M));

    BgmPhd out;
    out.time = prior.time;
    out.tracks.reserve(J * (1 + M));
    for (const auto& c : prior.tracks) {
        out.tracks.push_back({c.weight * psi0(c.beta), c.traj, {c.beta.u, c.beta.v + 1.0}});
    }

    std::vector<WindowUpdate> kal;
    if (M > 0) {
        kal.reserve(J);
        for (const auto& c : prior.tracks) kal.emplace_back(c.traj, sensor);
    }

    double clutter_detect_mass = 0.0;  // Σ_l d_{c,l} w_{c,l}
    for (const auto& c : prior.clutter) clutter_detect_mass += beta_mean(c.beta) * c.weight;

    std::vector<double> clutter_share(Jc, 0.0);  // Σ_z c(z) / Θ(z) accumulated per generator
    double clutter_ratio_sum = 0.0;
    std::vector<double> num(J);
    for (std::size_t m = 0; m < M; ++m) {
        const Vector& z = scan.measurements[m];
        if (z.size() != sensor.measurement_dim()) throw std::invalid_argument("measurement dimension mismatch");
        const double cz = clutter_density(z);
        double theta = clutter_detect_mass * cz;
        for (std::size_t j = 0; j < J; ++j) {
            const auto& c = prior.tracks[j];
            num[j] = c.weight * psi1(c.beta) * kal[j].likelihood(z);
            theta += num[j];  // psi1 == d for the Beta mean
        }
        if (!(theta > 0.0) || !std::isfinite(theta)) {
            std::ostringstream msg;
            msg << "measurement outside model support: z = [" << z.transpose() << "]";
            throw MeasurementSupportError(msg.str());
        }
        diag.theta[m] = theta;
        for (std::size_t j = 0; j < J; ++j) {
            const double w = num[j] / theta;
            diag.association(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = w;
            if (w < opts.skip_below) continue;
            const auto& c = prior.tracks[j];
            out.tracks.push_back({w, kal[j].posterior(z), {c.beta.u + 1.0, c.beta.v}});
        }
        clutter_ratio_sum += cz / theta;
    }

    out.clutter.reserve(2 * Jc);
    for (std::size_t l = 0; l < Jc; ++l) {
        const auto& c = prior.clutter[l];
        out.clutter.push_back({c.weight * psi0(c.beta), {c.beta.u, c.beta.v + 1.0}});
        if (M > 0) {
            clutter_share[l] = c.weight * psi1(c.beta) * clutter_ratio_sum;
            out.clutter.push_back({clutter_share[l], {c.beta.u + 1.0, c.beta.v}});
        }
    }
    return {std::move(out), std::move(diag)};
}

/// Update step of the L-scan filter. Identical to `update`: truncation happens
/// in the prediction, which bounds the window the gain spans.
template <SensorModel Sensor, typename ClutterDensity>
std::pair<BgmPhd, UpdateDiagnostics> lscan_update(const BgmPhd& prior, const Scan& scan, const Sensor& sensor,
                                                  const ClutterDensity& clutter_density,
                                                  const RobustUpdateOptions& opts = {}) {
    return update(prior, scan, sensor, clutter_density, opts);
}

inline BgmPhd prune_and_absorb(const BgmPhd& state, const ReductionThresholds& thr, ReductionStats* stats = nullptr) {
    BgmPhd out;
    out.time = state.time;
    out.tracks = prune_and_absorb(state.tracks, thr, stats);
    out.clutter = reduce_clutter(state.clutter, thr, stats);
    return out;
}

/// round(Σ w) heaviest tracks with their mean detection probability, and the
/// clutter rate round(Σ_j w_{c,j} u_{c,j} / (u_{c,j} + v_{c,j})).
inline ScanEstimate estimate(const BgmPhd& state) {
    ScanEstimate est = detail::estimate_tracks(state.tracks, state.time);
    const auto idx = detail::heaviest(state.tracks, est.tracks.size());
    for (std::size_t n = 0; n < idx.size(); ++n) est.tracks[n].detection_prob = beta_mean(state.tracks[idx[n]].beta);
    double rate = 0.0;
    for (const auto& c : state.clutter) rate += c.weight * beta_mean(c.beta);
    est.clutter_rate_raw = rate;
    est.clutter_rate = static_cast<int>(std::lround(rate));
    return est;
}

struct RobustTphdParams {
    RobustPredictParams predict;
    int window = kFullTrajectory;
    ReductionThresholds reduction;
};

/// Scan-by-scan driver of the robust filter: predict, update, reduce, estimate.
template <MotionModel Motion, SensorModel Sensor>
class RobustTphdFilter {
public:
    RobustTphdFilter(Motion motion, Sensor sensor, UniformClutter clutter, std::vector<TrackBirth> track_births,
                     std::vector<ClutterBirth> clutter_births, RobustTphdParams params)
        : motion_(std::move(motion)),
          sensor_(std::move(sensor)),
          clutter_(std::move(clutter)),
          track_births_(std::move(track_births)),
          clutter_births_(std::move(clutter_births)),
          params_(params) {}

    ScanEstimate step(const Scan& scan) {
        const BgmPhd predicted =
            lscan_predict(state_, motion_, track_births_, clutter_births_, params_.predict, params_.window);
        auto [posterior, diag] = lscan_update(predicted, scan, sensor_,
                                              [this](const Vector& z) { return clutter_.density(z); },
                                              RobustUpdateOptions{params_.reduction.prune});
        last_diag_ = std::move(diag);
        state_ = prune_and_absorb(posterior, params_.reduction, &last_diag_.reduction);
        return estimate(state_);
    }

    [[nodiscard]] const BgmPhd& state() const { return state_; }
    [[nodiscard]] const UpdateDiagnostics& diagnostics() const { return last_diag_; }

private:
    Motion motion_;
    Sensor sensor_;
    UniformClutter clutter_;
    std::vector<TrackBirth> track_births_;
    std::vector<ClutterBirth> clutter_births_;
    RobustTphdParams params_;
    BgmPhd state_;
    UpdateDiagnostics last_diag_;
};

}  // namespace bgtphd
