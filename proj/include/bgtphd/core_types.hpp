#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bgtphd/beta.hpp"

namespace bgtphd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CovPtr = std::shared_ptr<const Matrix>;

inline CovPtr make_cov(Matrix m) { return std::make_shared<const Matrix>(std::move(m)); }

/// A realised trajectory (t, x^{1:i}): birth time plus one state per step.
struct Trajectory {
    int birth_time = 1;
    std::vector<Vector> states;

    [[nodiscard]] int length() const { return static_cast<int>(states.size()); }
    [[nodiscard]] int last_time() const { return birth_time + length() - 1; }
    [[nodiscard]] bool alive_at(int k) const { return k >= birth_time && k <= last_time(); }
    [[nodiscard]] const Vector& at(int k) const { return states.at(static_cast<std::size_t>(k - birth_time)); }
};

/// Joint Gaussian over the retained window of a trajectory. States older than
/// the window live in `archive` as frozen means, oldest first.
///
/// The covariance is shared between the copies the update creates for each
/// measurement (they differ only in mean), so it is held by pointer and never
/// mutated after construction.
struct TrajectoryGaussian {
    int birth_time = 1;
    int state_dim = 0;
    Vector mean;
    CovPtr cov;
    Vector archive;

    [[nodiscard]] int window_length() const {
        return state_dim > 0 ? static_cast<int>(mean.size()) / state_dim : 0;
    }
    [[nodiscard]] int archive_length() const {
        return state_dim > 0 ? static_cast<int>(archive.size()) / state_dim : 0;
    }
    [[nodiscard]] int length() const { return window_length() + archive_length(); }
    [[nodiscard]] int current_time() const { return birth_time + length() - 1; }
    [[nodiscard]] const Matrix& covariance() const { return *cov; }

    /// [archive; window] stacked, (k - t + 1) * n_x entries.
    [[nodiscard]] Vector full_mean() const {
        Vector out(archive.size() + mean.size());
        out << archive, mean;
        return out;
    }

    [[nodiscard]] Trajectory to_trajectory() const {
        Trajectory traj{birth_time, {}};
        const Vector all = full_mean();
        const int n = length();
        traj.states.reserve(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            traj.states.emplace_back(all.segment(s * state_dim, state_dim));
        }
        return traj;
    }
};

inline TrajectoryGaussian make_trajectory(int birth_time, const Vector& mean, const Matrix& cov) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
        throw std::invalid_argument("make_trajectory: covariance does not match mean dimension");
    }
    return {birth_time, static_cast<int>(mean.size()), mean, make_cov(cov), Vector()};
}

struct Marginal {
    Vector mean;
    Matrix cov;
};

/// Current-time block of the window: last n_x mean entries and the trailing
/// diagonal covariance block.
inline Marginal current_marginal(const TrajectoryGaussian& g) {
    if (g.state_dim <= 0 || g.mean.size() < g.state_dim) {
        throw std::invalid_argument("empty trajectory window");
    }
    const Eigen::Index n = g.state_dim;
    return {g.mean.tail(n), g.cov->bottomRightCorner(n, n)};
}

/// One Beta-Gaussian term of the trajectory PHD.
struct TrajectoryComponent {
    double weight = 0.0;
    TrajectoryGaussian traj;
    BetaParams beta;
};

inline Marginal current_marginal(const TrajectoryComponent& c) { return current_marginal(c.traj); }

/// One Beta term of the clutter-generator PHD.
struct ClutterComponent {
    double weight = 0.0;
    BetaParams beta;
};

/// Beta-Gaussian mixture state of the robust trajectory filter.
struct BgmPhd {
    int time = 0;
    std::vector<TrajectoryComponent> tracks;
    std::vector<ClutterComponent> clutter;

    [[nodiscard]] double track_weight() const {
        double s = 0.0;
        for (const auto& c : tracks) s += c.weight;
        return s;
    }
    [[nodiscard]] double clutter_weight() const {
        double s = 0.0;
        for (const auto& c : clutter) s += c.weight;
        return s;
    }
};

/// Measurement set received at one scan.
struct Scan {
    int time = 0;
    std::vector<Vector> measurements;
};

struct Violation {
    std::string where;
    std::string what;
};

namespace detail {

inline void check_gaussian(const TrajectoryGaussian& g, int time, const std::string& where,
                           std::vector<Violation>& out) {
    if (g.state_dim <= 0) {
        out.push_back({where, "state dimension not positive"});
        return;
    }
    if (g.mean.size() % g.state_dim != 0 || g.archive.size() % g.state_dim != 0) {
        out.push_back({where, "mean length not a multiple of the state dimension"});
        return;
    }
    if (g.window_length() < 1) {
        out.push_back({where, "empty trajectory window"});
        return;
    }
    if (!g.cov || g.cov->rows() != g.mean.size() || g.cov->cols() != g.mean.size()) {
        out.push_back({where, "covariance shape does not match mean"});
        return;
    }
    const Matrix& P = *g.cov;
    const double scale = std::max(P.norm(), 1.0);
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        out.push_back({where, "covariance not symmetric"});
        return;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
        out.push_back({where, "covariance not positive semidefinite"});
    }
    if (time >= 0 && g.current_time() != time) {
        out.push_back({where, "birth time + length - 1 differs from filter time"});
    }
}

}  // namespace detail

/// Type-invariant check. Returns one entry per violated invariant; empty when
/// the state is consistent.
inline std::vector<Violation> validate(const BgmPhd& phd) {
    std::vector<Violation> out;
    for (std::size_t j = 0; j < phd.tracks.size(); ++j) {
        const auto& c = phd.tracks[j];
        const std::string where = "track " + std::to_string(j);
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) out.push_back({where, "negative or non-finite weight"});
        if (!(c.beta.u > 0.0) || !(c.beta.v > 0.0) || !std::isfinite(c.beta.u) || !std::isfinite(c.beta.v)) {
            out.push_back({where, "beta parameters not positive"});
        }
        detail::check_gaussian(c.traj, phd.time, where, out);
    }
    for (std::size_t j = 0; j < phd.clutter.size(); ++j) {
        const auto& c = phd.clutter[j];
        const std::string where = "clutter " + std::to_string(j);
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) out.push_back({where, "negative or non-finite weight"});
        if (!(c.beta.u >= 1.0) || !(c.beta.v >= 1.0)) out.push_back({where, "beta parameters below 1"});
    }
    return out;
}

}  // namespace bgtphd
