#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bgtphd/core_types.hpp"

namespace bgtphd {

/// First-order expansion of the transition about a state: predicted mean,
/// jacobian of the mean map and additive process noise covariance.
struct TransitionLinearization {
    Vector mean;
    Matrix jacobian;
    Matrix noise;
};

/// Predicted measurement and jacobian of the measurement map.
struct MeasurementLinearization {
    Vector mean;
    Matrix jacobian;
};

template <typename M>
concept MotionModel = requires(const M& m, const Vector& x) {
    { m.state_dim() } -> std::convertible_to<int>;
    { m.transition(x) } -> std::same_as<TransitionLinearization>;
};

template <typename S>
concept SensorModel = requires(const S& s, const Vector& x) {
    { s.measurement_dim() } -> std::convertible_to<int>;
    { s.measure(x) } -> std::same_as<MeasurementLinearization>;
    { s.noise() } -> std::convertible_to<const Matrix&>;
};

/// x' = F x + w, w ~ N(0, Q).
struct LinearMotion {
    Matrix F;
    Matrix Q;

    [[nodiscard]] int state_dim() const { return static_cast<int>(F.rows()); }
    [[nodiscard]] TransitionLinearization transition(const Vector& x) const { return {F * x, F, Q}; }
};

/// z = H x + v, v ~ N(0, R).
struct LinearSensor {
    Matrix H;
    Matrix R;

    [[nodiscard]] int measurement_dim() const { return static_cast<int>(H.rows()); }
    [[nodiscard]] MeasurementLinearization measure(const Vector& x) const { return {H * x, H}; }
    [[nodiscard]] const Matrix& noise() const { return R; }
};

/// Linear-Gaussian motion/observation pair.
struct LinearModel {
    LinearMotion motion;
    LinearSensor sensor;
};

/// Nearly-constant-velocity 2D block with sampling period dt: the usual
/// position/velocity model, state [p_x, p_y, v_x, v_y].
inline LinearModel constant_velocity_model(double dt, double accel_std, double meas_std) {
    Matrix F = Matrix::Identity(4, 4);
    F(0, 2) = dt;
    F(1, 3) = dt;
    Matrix G(4, 2);
    G << dt * dt / 2, 0, 0, dt * dt / 2, dt, 0, 0, dt;
    Matrix H = Matrix::Zero(2, 4);
    H(0, 0) = 1;
    H(1, 1) = 1;
    return {{F, accel_std * accel_std * G * G.transpose()},
            {H, meas_std * meas_std * Matrix::Identity(2, 2)}};
}

/// Coordinated-turn dynamics, state [p_x, p_y, v_x, v_y, turn_rate].
///
/// Position/velocity see acceleration noise through G with standard deviation
/// `accel_std`; the turn rate is a random walk with standard deviation
/// `turn_std * dt` per step.
struct CtModel {
    double dt = 1.0;
    double accel_std = 1.0;
    double turn_std = std::numbers::pi / 180.0;

    static constexpr int kDim = 5;

    [[nodiscard]] int state_dim() const { return kDim; }

    [[nodiscard]] Matrix noise_gain() const {
        Matrix G = Matrix::Zero(kDim, 3);
        G(0, 0) = dt * dt / 2;
        G(1, 1) = dt * dt / 2;
        G(2, 0) = dt;
        G(3, 1) = dt;
        G(4, 2) = dt;
        return G;
    }

    [[nodiscard]] Matrix process_noise() const {
        const Matrix G = noise_gain();
        Eigen::Vector3d var(accel_std * accel_std, accel_std * accel_std, turn_std * turn_std);
        return G * var.asDiagonal() * G.transpose();
    }

    [[nodiscard]] TransitionLinearization transition(const Vector& x) const {
        if (x.size() != kDim) throw std::invalid_argument("CtModel: state must have 5 entries");
        const double w = x(4);
        const double T = dt;
        // a = sin(wT)/w, b = (1-cos(wT))/w and their w-derivatives; series
        // expansion near zero turn rate.
        double a, b, da, db;
        const double c = std::cos(w * T);
        const double s = std::sin(w * T);
        if (std::abs(w) < 1e-5) {
            const double w2 = w * w;
            a = T - w2 * T * T * T / 6.0;
            b = w * T * T / 2.0 - w * w2 * T * T * T * T / 24.0;
            da = -w * T * T * T / 3.0;
            db = T * T / 2.0 - w2 * T * T * T * T / 8.0;
        } else {
            a = s / w;
            b = (1.0 - c) / w;
            da = (T * c * w - s) / (w * w);
            db = (T * s * w - (1.0 - c)) / (w * w);
        }
        const double vx = x(2);
        const double vy = x(3);

        Vector mean(kDim);
        mean(0) = x(0) + a * vx - b * vy;
        mean(1) = x(1) + b * vx + a * vy;
        mean(2) = c * vx - s * vy;
        mean(3) = s * vx + c * vy;
        mean(4) = w;

        Matrix J = Matrix::Identity(kDim, kDim);
        J(0, 2) = a;
        J(0, 3) = -b;
        J(1, 2) = b;
        J(1, 3) = a;
        J(2, 2) = c;
        J(2, 3) = -s;
        J(3, 2) = s;
        J(3, 3) = c;
        J(0, 4) = da * vx - db * vy;
        J(1, 4) = db * vx + da * vy;
        J(2, 4) = -T * s * vx - T * c * vy;
        J(3, 4) = T * c * vx - T * s * vy;
        return {std::move(mean), std::move(J), process_noise()};
    }
};

/// Bearing/range sensor at the origin. Bearing is measured from the +y axis,
/// positive towards +x: atan2(p_x, p_y).
struct BearingRangeSensor {
    Matrix R = default_noise();

    static Matrix default_noise() {
        const double deg = std::numbers::pi / 180.0;
        Matrix r = Matrix::Zero(2, 2);
        r(0, 0) = deg * deg;
        r(1, 1) = 4.0;
        return r;
    }

    [[nodiscard]] int measurement_dim() const { return 2; }
    [[nodiscard]] const Matrix& noise() const { return R; }

    [[nodiscard]] MeasurementLinearization measure(const Vector& x) const {
        const double px = x(0);
        const double py = x(1);
        const double r2 = px * px + py * py;
        if (!(r2 > 0.0)) throw std::domain_error("range singularity");
        const double r = std::sqrt(r2);
        Vector z(2);
        z << std::atan2(px, py), r;
        Matrix H = Matrix::Zero(2, x.size());
        H(0, 0) = py / r2;
        H(0, 1) = -px / r2;
        H(1, 0) = px / r;
        H(1, 1) = py / r;
        return {std::move(z), std::move(H)};
    }
};

static_assert(MotionModel<LinearMotion>);
static_assert(MotionModel<CtModel>);
static_assert(SensorModel<LinearSensor>);
static_assert(SensorModel<BearingRangeSensor>);

/// Uniform clutter intensity over an axis-aligned box in measurement space.
struct UniformClutter {
    Vector lower;
    Vector upper;

    /// Bearing in [-2 pi, 2 pi], range in [0, 2000] m.
    static UniformClutter bearing_range_default() {
        Vector lo(2), hi(2);
        lo << -2.0 * std::numbers::pi, 0.0;
        hi << 2.0 * std::numbers::pi, 2000.0;
        return {lo, hi};
    }

    [[nodiscard]] double volume() const { return (upper - lower).prod(); }

    [[nodiscard]] bool contains(const Vector& z) const {
        if (z.size() != lower.size()) return false;
        return (z.array() >= lower.array()).all() && (z.array() <= upper.array()).all();
    }

    [[nodiscard]] double density(const Vector& z) const { return contains(z) ? 1.0 / volume() : 0.0; }
};

/// log N(z; mean, S) through a Cholesky factor. Returns -inf for a
/// non-positive-definite S.
inline double log_gaussian_density(const Vector& z, const Vector& mean, const Matrix& S) {
    const Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Vector white = llt.matrixL().solve(z - mean);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (white.squaredNorm() + log_det + static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi));
}

}  // namespace bgtphd
