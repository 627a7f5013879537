#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bgtphd/core_types.hpp"

namespace bgtphd {

struct ReductionThresholds {
    double prune = 1e-5;     // Γ_p
    double absorb = 4.0;     // Γ_a, squared Mahalanobis distance
    int max_components = 100;
};

struct ReductionStats {
    std::size_t pruned = 0;
    std::size_t absorbed = 0;
    std::size_t capped = 0;
    std::size_t singular_skipped = 0;
};

template <typename C>
concept TrajectoryMixtureTerm = requires(C c) {
    { c.weight } -> std::convertible_to<double>;
    { c.traj } -> std::convertible_to<TrajectoryGaussian>;
};

namespace detail {

inline void check_thresholds(const ReductionThresholds& t) {
    if (!(t.prune > 0.0) || !(t.absorb > 0.0) || t.max_components < 1) {
        throw std::invalid_argument("pruning thresholds must be positive");
    }
}

}  // namespace detail

/// Prune, absorb and cap a trajectory mixture.
///
/// Components below Γ_p are dropped (their weight is not redistributed).
/// Survivors are visited heaviest first; each unabsorbed leader swallows every
/// lighter component with the same birth time whose current-state mean lies
/// within Γ_a (squared Mahalanobis distance under the leader's current-state
/// covariance). The leader keeps its own moments and Beta parameters and takes
/// the summed weight. At most `max_components` of the heaviest are returned,
/// sorted by decreasing weight.
template <TrajectoryMixtureTerm C>
std::vector<C> prune_and_absorb(std::vector<C> comps, const ReductionThresholds& thr, ReductionStats* stats = nullptr) {
    detail::check_thresholds(thr);
    ReductionStats local;

    std::vector<std::size_t> order;
    order.reserve(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) {
        if (comps[i].weight >= thr.prune) {
            order.push_back(i);
        } else {
            ++local.pruned;
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return comps[a].weight > comps[b].weight; });

    std::vector<char> used(comps.size(), 0);
    std::vector<C> out;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t j = order[oi];
        if (used[j]) continue;
        used[j] = 1;
        C leader = std::move(comps[j]);
        const Marginal mj = current_marginal(leader.traj);
        const Eigen::LDLT<Matrix> ldlt(mj.cov);
        const bool usable = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                            (ldlt.vectorD().array() > 0.0).all();
        for (std::size_t oq = oi + 1; oq < order.size(); ++oq) {
            const std::size_t i = order[oq];
            if (used[i] || comps[i].traj.birth_time != leader.traj.birth_time) continue;
            if (comps[i].traj.mean.size() != leader.traj.mean.size()) continue;
            if (!usable) {
                ++local.singular_skipped;
                continue;
            }
            const Vector diff = comps[i].traj.mean.tail(leader.traj.state_dim) - mj.mean;
            const double d2 = diff.dot(ldlt.solve(diff));
            if (d2 <= thr.absorb) {
                leader.weight += comps[i].weight;
                used[i] = 1;
                ++local.absorbed;
            }
        }
        out.push_back(std::move(leader));
    }
    std::stable_sort(out.begin(), out.end(), [](const C& a, const C& b) { return a.weight > b.weight; });
    if (out.size() > static_cast<std::size_t>(thr.max_components)) {
        local.capped = out.size() - static_cast<std::size_t>(thr.max_components);
        out.resize(static_cast<std::size_t>(thr.max_components));
    }
    if (stats) {
        stats->pruned += local.pruned;
        stats->absorbed += local.absorbed;
        stats->capped += local.capped;
        stats->singular_skipped += local.singular_skipped;
    }
    return out;
}

/// Clutter mixture reduction: drop terms below Γ_p, merge terms with identical
/// Beta parameters (an exact identity, the densities coincide), keep the
/// `max_components` heaviest.
inline std::vector<ClutterComponent> reduce_clutter(const std::vector<ClutterComponent>& comps,
                                                    const ReductionThresholds& thr,
                                                    ReductionStats* stats = nullptr) {
    detail::check_thresholds(thr);
    std::vector<ClutterComponent> merged;
    std::size_t pruned = 0;
    for (const auto& c : comps) {
        if (c.weight < thr.prune) {
            ++pruned;
            continue;
        }
        auto it = std::find_if(merged.begin(), merged.end(), [&](const ClutterComponent& m) { return m.beta == c.beta; });
        if (it != merged.end()) {
            it->weight += c.weight;
        } else {
            merged.push_back(c);
        }
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const ClutterComponent& a, const ClutterComponent& b) { return a.weight > b.weight; });
    std::size_t capped = 0;
    if (merged.size() > static_cast<std::size_t>(thr.max_components)) {
        capped = merged.size() - static_cast<std::size_t>(thr.max_components);
        merged.resize(static_cast<std::size_t>(thr.max_components));
    }
    if (stats) {
        stats->pruned += pruned;
        stats->capped += capped;
    }
    return merged;
}

}  // namespace bgtphd
