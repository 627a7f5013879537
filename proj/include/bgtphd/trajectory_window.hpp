#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bgtphd/core_types.hpp"
#include "bgtphd/models.hpp"

namespace bgtphd {

/// Window limit meaning "keep the whole trajectory in the joint Gaussian".
inline constexpr int kFullTrajectory = std::numeric_limits<int>::max();

/// Appends the predicted current state to a trajectory Gaussian.
///
/// The new block is F m_last with covariance F P_last F' + Q and cross terms
/// P_{.,last} F'. When the window already holds `window_limit` steps, the
/// oldest block is moved into the archive first so the result keeps exactly
/// `window_limit` steps (L-scan).
template <MotionModel Motion>
TrajectoryGaussian predict_trajectory(const TrajectoryGaussian& g, const Motion& motion, int window_limit) {
    if (window_limit < 1) throw std::invalid_argument("L-scan depth must be at least 1");
    const int n = g.state_dim;
    if (motion.state_dim() != n) throw std::invalid_argument("motion model dimension does not match component");
    const int w = g.window_length();
    if (w < 1) throw std::invalid_argument("empty trajectory window");

    const Matrix& P = *g.cov;
    const Eigen::Index last = static_cast<Eigen::Index>(w - 1) * n;
    const TransitionLinearization lin = motion.transition(g.mean.segment(last, n));

    const int drop = (w >= window_limit) ? w - window_limit + 1 : 0;
    const Eigen::Index keep = static_cast<Eigen::Index>(w - drop) * n;
    const Eigen::Index first = static_cast<Eigen::Index>(drop) * n;

    TrajectoryGaussian out;
    out.birth_time = g.birth_time;
    out.state_dim = n;
    if (drop > 0) {
        out.archive.resize(g.archive.size() + first);
        out.archive << g.archive, g.mean.head(first);
    } else {
        out.archive = g.archive;
    }

    out.mean.resize(keep + n);
    out.mean.head(keep) = g.mean.segment(first, keep);
    out.mean.tail(n) = lin.mean;

    Matrix Pn(keep + n, keep + n);
    Pn.topLeftCorner(keep, keep) = P.block(first, first, keep, keep);
    const Matrix cross = P.block(first, last, keep, n) * lin.jacobian.transpose();
    Pn.topRightCorner(keep, n) = cross;
    Pn.bottomLeftCorner(n, keep) = cross.transpose();
    Pn.bottomRightCorner(n, n) = lin.jacobian * P.block(last, last, n, n) * lin.jacobian.transpose() + lin.noise;
    out.cov = make_cov(std::move(Pn));
    return out;
}

/// Kalman quantities for one predicted component, shared by every measurement:
/// predicted measurement, innovation covariance, the gain over the whole
/// window (cross-covariance column times H' S^-1) and the updated covariance.
class WindowUpdate {
public:
    template <SensorModel Sensor>
    WindowUpdate(const TrajectoryGaussian& g, const Sensor& sensor) : prior_(&g) {
        const int n = g.state_dim;
        const Eigen::Index dim = g.mean.size();
        if (dim < n || n <= 0) throw std::invalid_argument("empty trajectory window");
        const Eigen::Index cur = dim - n;
        const Matrix& P = *g.cov;
        const MeasurementLinearization lin = sensor.measure(g.mean.tail(n));
        if (lin.jacobian.cols() != n) throw std::invalid_argument("sensor model dimension does not match component");
        zbar_ = lin.mean;

        // P_{[t:k],k} H'
        const Matrix PHt = P.middleCols(cur, n) * lin.jacobian.transpose();
        Matrix S = lin.jacobian * PHt.bottomRows(n) + sensor.noise();
        S = 0.5 * (S + S.transpose());
        llt_.compute(S);
        if (llt_.info() != Eigen::Success) throw std::runtime_error("innovation covariance not positive definite");
        gain_ = llt_.solve(PHt.transpose()).transpose();

        Matrix Pu = P - gain_ * PHt.transpose();
        Pu = 0.5 * (Pu + Pu.transpose());
        posterior_cov_ = make_cov(std::move(Pu));

        const Matrix L = llt_.matrixL();
        log_norm_ = -L.diagonal().array().log().sum() -
                    0.5 * static_cast<double>(zbar_.size()) * std::log(2.0 * std::numbers::pi);
    }

    [[nodiscard]] const Vector& predicted_measurement() const { return zbar_; }
    [[nodiscard]] const Matrix& gain() const { return gain_; }
    [[nodiscard]] Matrix innovation_cov() const { return llt_.reconstructedMatrix(); }
    [[nodiscard]] const CovPtr& posterior_cov() const { return posterior_cov_; }

    /// q(z) = N(z; zbar, S).
    [[nodiscard]] double likelihood(const Vector& z) const { return std::exp(log_likelihood(z)); }

    [[nodiscard]] double log_likelihood(const Vector& z) const {
        const Vector white = llt_.matrixL().solve(z - zbar_);
        return log_norm_ - 0.5 * white.squaredNorm();
    }

    /// Posterior trajectory Gaussian given measurement z.
    [[nodiscard]] TrajectoryGaussian posterior(const Vector& z) const {
        TrajectoryGaussian out;
        out.birth_time = prior_->birth_time;
        out.state_dim = prior_->state_dim;
        out.mean = prior_->mean + gain_ * (z - zbar_);
        out.cov = posterior_cov_;
        out.archive = prior_->archive;
        return out;
    }

private:
    const TrajectoryGaussian* prior_;
    Vector zbar_;
    Matrix gain_;
    Eigen::LLT<Matrix> llt_;
    CovPtr posterior_cov_;
    double log_norm_ = 0.0;
};

}  // namespace bgtphd
