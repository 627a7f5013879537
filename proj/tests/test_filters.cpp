#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bgtphd/bg_rtphd.hpp"
#include "bgtphd/gm_tphd.hpp"
#include "properties.hpp"

using namespace bgtphd;

namespace {

const UniformClutter kRegion = UniformClutter::bearing_range_default();
auto region_density = [](const Vector& z) { return kRegion.density(z); };

std::vector<GaussianBirth> four_births() {
    std::vector<GaussianBirth> out;
    for (const auto& b : ScenarioConfig::default_track_births()) out.push_back({b.weight, b.mean, b.cov});
    return out;
}

LinearMotion identity_motion(int n) { return {Matrix::Identity(n, n), Matrix::Zero(n, n)}; }

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

}  // namespace

// -------------------------------------------------------------- baseline --

TEST(GmTphd, BirthWeights) {
    const auto pred = tphd_predict(GmPhd{}, CtModel{}, four_births(), 0.99);
    EXPECT_EQ(pred.time, 1);
    EXPECT_NEAR(pred.total_weight(), 0.04, 1e-15);
}

TEST(GmTphd, PredictedWeightIsLinear) {
    GmPhd prior{1, {}};
    prior.components.push_back({0.4, make_trajectory(1, vec({0, 500, 1, 1, 0}), Matrix::Identity(5, 5))});
    prior.components.push_back({0.6, make_trajectory(1, vec({100, 500, 1, 1, 0}), Matrix::Identity(5, 5))});
    EXPECT_NEAR(tphd_predict(prior, CtModel{}, four_births(), 0.99).total_weight(), 1.03, 1e-12);
}

TEST(GmTphd, IdentityDynamicsDuplicateLastBlock) {
    GmPhd prior{1, {{1.0, make_trajectory(1, vec({1, 2}), Matrix::Identity(2, 2) * 3)}}};
    const auto pred = tphd_predict(prior, identity_motion(2), {}, 1.0);
    const auto& g = pred.components[0].traj;
    EXPECT_EQ(g.mean, vec({1, 2, 1, 2}));
    EXPECT_EQ(Matrix(g.covariance().bottomRightCorner(2, 2)), Matrix(Matrix::Identity(2, 2) * 3));
    EXPECT_EQ(Matrix(g.covariance().topRightCorner(2, 2)), Matrix(Matrix::Identity(2, 2) * 3));
}

TEST(GmTphd, DimensionMismatchThrows) {
    GmPhd prior{1, {{1.0, make_trajectory(1, vec({1, 2}), Matrix::Identity(2, 2))}}};
    EXPECT_THROW(tphd_predict(prior, CtModel{}, {}, 1.0), std::invalid_argument);
    EXPECT_THROW(tphd_predict(GmPhd{}, CtModel{}, {{0.1, vec({1, 2}), Matrix::Identity(2, 2)}}, 1.0),
                 std::invalid_argument);
}

TEST(GmTphd, KalmanOracle) {
    const auto c = props::kalman_oracle();
    EXPECT_TRUE(c.ok) << c.detail;
}

TEST(GmTphd, EmptyScanScalesWeights) {
    const auto pred = tphd_predict(GmPhd{}, CtModel{}, four_births(), 0.99);
    const auto post = tphd_update(pred, Scan{1, {}}, BearingRangeSensor{}, 0.98, 10.0, region_density);
    ASSERT_EQ(post.components.size(), 4u);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(post.components[j].weight, 0.01 * 0.02, 1e-17);
        EXPECT_EQ(post.components[j].traj.mean, pred.components[j].traj.mean);
    }
}

TEST(GmTphd, ZeroDetectionProbabilityLeavesState) {
    const auto pred = tphd_predict(GmPhd{}, CtModel{}, four_births(), 0.99);
    const auto post = tphd_update(pred, Scan{1, {vec({0.1, 500})}}, BearingRangeSensor{}, 0.0, 10.0, region_density);
    ASSERT_EQ(post.components.size(), 4u);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(post.components[j].weight, pred.components[j].weight);
        EXPECT_EQ(post.components[j].traj.mean, pred.components[j].traj.mean);
    }
}

TEST(GmTphd, DetectionWeightsPerMeasurementSumBelowOne) {
    const auto pred = tphd_predict(GmPhd{}, CtModel{}, four_births(), 0.99);
    std::mt19937_64 rng(1);
    Scan scan{1, {}};
    for (const auto& c : pred.components) {
        scan.measurements.push_back(BearingRangeSensor{}.measure(current_marginal(c.traj).mean).mean);
    }
    scan.measurements.push_back(vec({2.0, 1500}));
    const auto post = tphd_update(pred, scan, BearingRangeSensor{}, 0.98, 10.0, region_density);
    const std::size_t J = pred.components.size();
    ASSERT_EQ(post.components.size(), J * (1 + scan.measurements.size()));
    for (std::size_t m = 0; m < scan.measurements.size(); ++m) {
        double s = 0;
        for (std::size_t j = 0; j < J; ++j) s += post.components[J + m * J + j].weight;
        EXPECT_LE(s, 1.0);
    }
    EXPECT_LE(post.total_weight(), pred.total_weight() + scan.measurements.size());
}

TEST(GmTphd, InvalidArgumentsThrow) {
    GmPhd s{1, {}};
    EXPECT_THROW(tphd_update(s, Scan{1, {}}, BearingRangeSensor{}, 1.2, 10.0, region_density), std::invalid_argument);
    EXPECT_THROW(tphd_update(s, Scan{1, {}}, BearingRangeSensor{}, 0.9, -1.0, region_density), std::invalid_argument);
    EXPECT_THROW(tphd_update(s, Scan{2, {}}, BearingRangeSensor{}, 0.9, 1.0, region_density), std::invalid_argument);
}

// ---------------------------------------------------------------- robust --

namespace {

BgmPhd one_track(double w = 1.0, BetaParams beta = {8, 2}) {
    BgmPhd s;
    s.time = 1;
    Matrix P = Vector::Constant(5, 100.0).asDiagonal();
    P(4, 4) = 1e-4;
    s.tracks.push_back({w, make_trajectory(1, vec({100, 1000, 5, -5, 0}), P), beta});
    return s;
}

}  // namespace

TEST(Robust, PredictTrackAndClutter) {
    BgmPhd prior = one_track();
    prior.clutter.push_back({20, {1, 1}});
    const auto pred = predict(prior, CtModel{}, {}, {}, {0.99, 0.9, 1.1});
    ASSERT_EQ(pred.tracks.size(), 1u);
    EXPECT_DOUBLE_EQ(pred.tracks[0].weight, 0.99);
    EXPECT_NEAR(pred.tracks[0].beta.u, 7.2, 1e-12);
    EXPECT_NEAR(pred.tracks[0].beta.v, 1.8, 1e-12);
    ASSERT_EQ(pred.clutter.size(), 1u);
    EXPECT_DOUBLE_EQ(pred.clutter[0].weight, 18.0);
    EXPECT_EQ(pred.clutter[0].beta, (BetaParams{1, 1}));
    EXPECT_EQ(pred.time, 2);
    EXPECT_TRUE(validate(pred).empty());
}

TEST(Robust, PredictIdentityDynamics) {
    BgmPhd prior;
    prior.time = 1;
    prior.tracks.push_back({1.0, make_trajectory(1, vec({3, 4}), Matrix::Identity(2, 2) * 2), {8, 2}});
    const auto pred = predict(prior, identity_motion(2), {}, {}, {});
    const auto& g = pred.tracks[0].traj;
    EXPECT_EQ(Vector(g.mean.tail(2)), vec({3, 4}));
    EXPECT_EQ(Matrix(g.covariance().bottomRightCorner(2, 2)), Matrix(Matrix::Identity(2, 2) * 2));
}

TEST(Robust, PredictWeightLinearity) {
    BgmPhd prior = one_track(0.7);
    prior.tracks.push_back(one_track(0.45).tracks[0]);
    std::vector<TrackBirth> births = ScenarioConfig::default_track_births();
    const auto pred = predict(prior, CtModel{}, births, {{5, {1, 1}}}, {0.99, 0.9, 1.1});
    EXPECT_NEAR(pred.track_weight(), 0.99 * 1.15 + 0.04, 1e-10);
    EXPECT_EQ(pred.tracks.size(), 6u);
    EXPECT_EQ(pred.tracks.back().traj.birth_time, 2);
    EXPECT_DOUBLE_EQ(pred.clutter_weight(), 5.0);
}

TEST(Robust, PredictDegenerateBetaNamesComponent) {
    BgmPhd prior = one_track(1.0, {1, 1});
    try {
        predict(prior, CtModel{}, {}, {}, {0.99, 0.9, 3.0});
        FAIL();
    } catch (const BetaDegenerateError& e) {
        EXPECT_NE(std::string(e.what()).find("track component 0"), std::string::npos);
    }
}

TEST(Robust, EmptyScanUpdate) {
    BgmPhd s = one_track();
    s.clutter.push_back({20, {1, 1}});
    const auto [post, diag] = update(s, Scan{1, {}}, BearingRangeSensor{}, region_density);
    ASSERT_EQ(post.tracks.size(), 1u);
    EXPECT_DOUBLE_EQ(post.tracks[0].weight, 0.2);
    EXPECT_EQ(post.tracks[0].beta, (BetaParams{8, 3}));
    ASSERT_EQ(post.clutter.size(), 1u);
    EXPECT_DOUBLE_EQ(post.clutter[0].weight, 10.0);
    EXPECT_EQ(post.clutter[0].beta, (BetaParams{1, 2}));
    EXPECT_TRUE(diag.theta.empty());
}

TEST(Robust, DetectionWeightFormula) {
    BgmPhd s = one_track();
    s.clutter.push_back({20, {1, 1}});
    const Vector z = vec({0.1, 1010});
    const auto [post, diag] = update(s, Scan{1, {z}}, BearingRangeSensor{}, region_density);

    // Independent scalar evaluation of q(z) = N(z; h(m), H P H' + R).
    const BearingRangeSensor sensor;
    const auto lin = sensor.measure(s.tracks[0].traj.mean);
    const Matrix S = lin.jacobian * s.tracks[0].traj.covariance() * lin.jacobian.transpose() + sensor.R;
    const Vector r = z - lin.mean;
    const double q = std::exp(-0.5 * r.dot(S.inverse() * r)) / (2 * std::numbers::pi * std::sqrt(S.determinant()));
    const double cbar = 1.0 / (8000 * std::numbers::pi);
    const double want = 0.8 * q / (0.5 * 20 * cbar + 0.8 * 1 * q);

    ASSERT_EQ(post.tracks.size(), 2u);
    EXPECT_NEAR(post.tracks[1].weight, want, 1e-12);
    EXPECT_EQ(post.tracks[1].beta, (BetaParams{9, 2}));
    EXPECT_NEAR(diag.association(0, 0), want, 1e-12);
    EXPECT_NEAR(diag.theta[0], 0.5 * 20 * cbar + 0.8 * q, 1e-14);
    // Clutter: misdetection (1, 2) and merged detection (2, 1).
    ASSERT_EQ(post.clutter.size(), 2u);
    EXPECT_EQ(post.clutter[1].beta, (BetaParams{2, 1}));
    EXPECT_NEAR(post.clutter[1].weight, 20 * 0.5 * cbar / diag.theta[0], 1e-12);
}

TEST(Robust, PsiPartitionBound) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ang(-0.3, 0.3), rng_r(800, 1200), par(1.5, 30), w(0.1, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        BgmPhd s = one_track(w(rng), {par(rng), par(rng)});
        s.clutter.push_back({w(rng) * 10, {par(rng), par(rng)}});
        Scan scan{1, {}};
        const int M = std::uniform_int_distribution<int>(0, 6)(rng);
        for (int m = 0; m < M; ++m) scan.measurements.push_back(vec({ang(rng), rng_r(rng)}));
        const auto [post, diag] = update(s, scan, BearingRangeSensor{}, region_density);
        EXPECT_EQ(psi0(s.tracks[0].beta) + psi1(s.tracks[0].beta), 1.0);
        // Detection copies carry at most one unit of weight per measurement
        // and the misdetection copy ψ⁰ ω.
        EXPECT_LE(post.track_weight(), (psi0(s.tracks[0].beta) * s.tracks[0].weight + M) * (1 + 1e-12));
        for (double theta : diag.theta) EXPECT_GT(theta, 0.0);
    }
}

TEST(Robust, BetaMonotonicity) {
    BgmPhd s = one_track(1.0, {4.5, 2.5});
    s.tracks.push_back(one_track(0.5, {3, 6}).tracks[0]);
    s.clutter.push_back({20, {1, 1}});
    Scan scan{1, {vec({0.1, 1000}), vec({-1.0, 300})}};
    const auto [post, diag] = update(s, scan, BearingRangeSensor{}, region_density);
    const std::size_t J = 2;
    for (std::size_t j = 0; j < J; ++j) {
        EXPECT_EQ(post.tracks[j].beta, (BetaParams{s.tracks[j].beta.u, s.tracks[j].beta.v + 1}));
        for (std::size_t m = 0; m < 2; ++m) {
            EXPECT_EQ(post.tracks[J + m * J + j].beta, (BetaParams{s.tracks[j].beta.u + 1, s.tracks[j].beta.v}));
        }
    }
    EXPECT_TRUE(validate(post).empty());
}

TEST(Robust, ThetaPositiveWithClutterSupport) {
    BgmPhd s;
    s.time = 1;
    s.clutter.push_back({1e-3, {1, 1}});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> b(-2 * std::numbers::pi, 2 * std::numbers::pi), r(0, 2000);
    Scan scan{1, {}};
    for (int i = 0; i < 200; ++i) scan.measurements.push_back(vec({b(rng), r(rng)}));
    const auto [post, diag] = update(s, scan, BearingRangeSensor{}, region_density);
    for (double t : diag.theta) EXPECT_GT(t, 0.0);
}

TEST(Robust, MeasurementOutsideSupportThrows) {
    BgmPhd s;
    s.time = 1;
    s.clutter.push_back({20, {1, 1}});
    try {
        update(s, Scan{1, {vec({0.0, 5000})}}, BearingRangeSensor{}, region_density);
        FAIL();
    } catch (const MeasurementSupportError& e) {
        EXPECT_NE(std::string(e.what()).find("5000"), std::string::npos);
    }
}

TEST(Robust, ScanTimeMismatchThrows) {
    EXPECT_THROW(update(one_track(), Scan{3, {}}, BearingRangeSensor{}, region_density), std::invalid_argument);
}

TEST(Robust, DegenerateOracleMatchesBaseline) {
    const auto c = props::degenerate_equivalence();
    EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Robust, FilterStateStaysValid) {
    ScenarioConfig cfg;
    cfg.horizon = 40;
    const auto sim = simulate_run(cfg, run_seed(cfg, 0));
    RobustTphdFilter<CtModel, BearingRangeSensor> f(CtModel{}, BearingRangeSensor{}, kRegion, cfg.track_births,
                                                    cfg.clutter_births, {{0.99, 0.9, 1.1}, 5, cfg.reduction});
    for (const auto& scan : sim.scans) {
        const auto est = f.step(scan);
        EXPECT_TRUE(validate(f.state()).empty()) << "scan " << scan.time;
        EXPECT_LE(f.state().tracks.size(), 100u);
        EXPECT_EQ(est.time, scan.time);
        for (const auto& t : est.tracks) EXPECT_EQ(t.trajectory.last_time(), scan.time);
    }
}

// ----------------------------------------------------------------- L-scan --

TEST(LScan, BitExactForLongWindows) {
    const auto c = props::lscan_exactness();
    EXPECT_TRUE(c.ok) << c.detail;
}

TEST(LScan, ArchiveBookkeeping) {
    auto g = make_trajectory(3, vec({0, 500, 1, 2, 0}), Matrix::Identity(5, 5));
    for (int step = 1; step <= 10; ++step) {
        g = predict_trajectory(g, CtModel{}, 4);
        EXPECT_EQ(g.window_length(), std::min(step + 1, 4));
        EXPECT_EQ(g.full_mean().size(), (g.current_time() - g.birth_time + 1) * 5);
        EXPECT_EQ(g.covariance().rows(), g.window_length() * 5);
    }
    EXPECT_EQ(g.current_time(), 13);
    EXPECT_EQ(g.archive_length(), 7);
}

TEST(LScan, EvictionKeepsOldestMeanUnchanged) {
    auto g = make_trajectory(1, vec({1, 2}), Matrix::Identity(2, 2));
    LinearMotion m{Matrix::Identity(2, 2) * 2, Matrix::Identity(2, 2)};
    g = predict_trajectory(g, m, 2);
    g = predict_trajectory(g, m, 2);
    EXPECT_EQ(g.archive, vec({1, 2}));
    EXPECT_EQ(g.mean, vec({2, 4, 4, 8}));
}

TEST(LScan, InvalidDepthThrows) {
    const auto g = make_trajectory(1, vec({1, 2}), Matrix::Identity(2, 2));
    EXPECT_THROW(predict_trajectory(g, identity_motion(2), 0), std::invalid_argument);
}

namespace {

// Direct target-space robust PHD: one Gaussian per component, EKF update,
// Beta bookkeeping, clutter generators.
struct PointComponent {
    double w;
    Vector m;
    Matrix P;
    BetaParams beta;
};

struct PointState {
    std::vector<PointComponent> tracks;
    std::vector<ClutterComponent> clutter;
};

PointState point_predict(const PointState& s, const std::vector<TrackBirth>& births, const CtModel& ct) {
    PointState out;
    for (const auto& c : s.tracks) {
        const auto lin = ct.transition(c.m);
        out.tracks.push_back({c.w * 0.99, lin.mean, lin.jacobian * c.P * lin.jacobian.transpose() + lin.noise,
                              predict_beta(c.beta, 1.1)});
    }
    for (const auto& b : births) out.tracks.push_back({b.weight, b.mean, b.cov, b.beta});
    for (const auto& c : s.clutter) out.clutter.push_back({c.weight * 0.9, c.beta});
    out.clutter.push_back({5, {1, 1}});
    return out;
}

PointState point_update(const PointState& s, const std::vector<Vector>& zs, const BearingRangeSensor& sensor) {
    PointState out;
    for (const auto& c : s.tracks) {
        out.tracks.push_back({c.w * c.beta.v / (c.beta.u + c.beta.v), c.m, c.P, {c.beta.u, c.beta.v + 1}});
    }
    double clutter_mass = 0;
    for (const auto& c : s.clutter) clutter_mass += c.weight * c.beta.u / (c.beta.u + c.beta.v);
    double ratio = 0;
    for (const auto& z : zs) {
        std::vector<double> q;
        std::vector<PointComponent> upd;
        double theta = clutter_mass * kRegion.density(z);
        for (const auto& c : s.tracks) {
            const auto lin = sensor.measure(c.m);
            const Matrix S = lin.jacobian * c.P * lin.jacobian.transpose() + sensor.R;
            const Matrix K = c.P * lin.jacobian.transpose() * S.inverse();
            const Vector r = z - lin.mean;
            const double like =
                std::exp(-0.5 * r.dot(S.inverse() * r)) / (2 * std::numbers::pi * std::sqrt(S.determinant()));
            const double num = c.w * c.beta.u / (c.beta.u + c.beta.v) * like;
            q.push_back(num);
            theta += num;
            upd.push_back({0, c.m + K * r, c.P - K * S * K.transpose(), {c.beta.u + 1, c.beta.v}});
        }
        for (std::size_t j = 0; j < upd.size(); ++j) {
            upd[j].w = q[j] / theta;
            out.tracks.push_back(upd[j]);
        }
        ratio += kRegion.density(z) / theta;
    }
    for (const auto& c : s.clutter) {
        out.clutter.push_back({c.weight * c.beta.v / (c.beta.u + c.beta.v), {c.beta.u, c.beta.v + 1}});
        if (!zs.empty()) {
            out.clutter.push_back({c.weight * c.beta.u / (c.beta.u + c.beta.v) * ratio, {c.beta.u + 1, c.beta.v}});
        }
    }
    return out;
}

}  // namespace

TEST(LScan, DepthOneMatchesTargetSpaceFilter) {
    ScenarioConfig cfg;
    cfg.horizon = 4;
    const auto sim = simulate_run(cfg, run_seed(cfg, 2));
    const CtModel ct;
    const BearingRangeSensor sensor;
    std::vector<TrackBirth> births = cfg.track_births;
    births.resize(2);
    const std::vector<ClutterBirth> cb{{5, {1, 1}}};

    BgmPhd traj;
    PointState point;
    for (int k = 1; k <= 3; ++k) {
        Scan scan = sim.scans[static_cast<std::size_t>(k - 1)];
        scan.measurements.resize(std::min<std::size_t>(scan.measurements.size(), 3));
        traj = update(lscan_predict(traj, ct, births, cb, {0.99, 0.9, 1.1}, 1), scan, sensor, region_density).first;
        point = point_update(point_predict(point, births, ct), scan.measurements, sensor);

        ASSERT_EQ(traj.tracks.size(), point.tracks.size());
        for (std::size_t j = 0; j < point.tracks.size(); ++j) {
            const auto& a = traj.tracks[j];
            const auto& b = point.tracks[j];
            const auto marg = current_marginal(a.traj);
            EXPECT_NEAR(a.weight, b.w, 1e-9 * std::max(1.0, b.w));
            EXPECT_LT((marg.mean - b.m).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, b.m.cwiseAbs().maxCoeff()));
            EXPECT_LT((marg.cov - b.P).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, b.P.cwiseAbs().maxCoeff()));
            EXPECT_EQ(a.beta.v, b.beta.v);
            EXPECT_NEAR(a.beta.u, b.beta.u, 1e-12);
            EXPECT_EQ(a.traj.window_length(), 1);
            EXPECT_EQ(a.traj.length(), k - a.traj.birth_time + 1);
        }
        ASSERT_EQ(traj.clutter.size(), point.clutter.size());
        for (std::size_t j = 0; j < point.clutter.size(); ++j) {
            EXPECT_NEAR(traj.clutter[j].weight, point.clutter[j].weight, 1e-9 * point.clutter[j].weight);
            EXPECT_EQ(traj.clutter[j].beta, point.clutter[j].beta);
        }
    }
}
