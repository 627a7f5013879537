#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bgtphd {

/// Shape parameters of a Beta density over a detection probability.
struct BetaParams {
    double u = 1.0;
    double v = 1.0;

    friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

class BetaDegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double log_beta_function(double u, double v) {
    return std::lgamma(u) + std::lgamma(v) - std::lgamma(u + v);
}

/// Beta density y^(u-1) (1-y)^(v-1) / B(u,v), normalised through log-gamma.
inline double beta_pdf(double y, const BetaParams& p) {
    if (!(y >= 0.0 && y <= 1.0)) {
        throw std::domain_error("beta_pdf: argument " + std::to_string(y) + " outside [0, 1]");
    }
    // Boundary values of the unnormalised kernel: 0^0 = 1 for u == 1 or v == 1.
    const double left = (p.u == 1.0) ? 0.0 : (p.u - 1.0) * std::log(y);
    const double right = (p.v == 1.0) ? 0.0 : (p.v - 1.0) * std::log1p(-y);
    return std::exp(left + right - log_beta_function(p.u, p.v));
}

/// B(u, v+1) / B(u, v): weight factor carried by a missed detection.
inline double psi0(const BetaParams& p) { return p.v / (p.u + p.v); }

/// B(u+1, v) / B(u, v): weight factor carried by a detection.
inline double psi1(const BetaParams& p) { return 1.0 - psi0(p); }

inline double beta_mean(const BetaParams& p) { return p.u / (p.u + p.v); }

inline double beta_variance(const BetaParams& p) {
    const double s = p.u + p.v;
    return p.u * p.v / (s * s * (s + 1.0));
}

/// Moment-matched prediction: keeps the mean and multiplies the variance by
/// |k_beta|. With k_beta == 1 the parameters are returned untouched.
inline BetaParams predict_beta(const BetaParams& p, double k_beta) {
    if (!std::isfinite(k_beta)) {
        throw std::invalid_argument("predict_beta: non-finite inflation factor");
    }
    const double inflation = std::abs(k_beta);
    if (inflation == 1.0) {
        return p;
    }
    const double mean = beta_mean(p);
    const double variance = inflation * beta_variance(p);
    const double scale = mean * (1.0 - mean) / variance - 1.0;
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw BetaDegenerateError("beta moment matching degenerate");
    }
    return {scale * mean, scale * (1.0 - mean)};
}

}  // namespace bgtphd
