#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "bgtphd/core_types.hpp"
#include "bgtphd/reduction.hpp"

namespace bgtphd {

/// One reported trajectory (t, i, m) at the current scan.
struct TrackEstimate {
    int birth_time = 1;
    int length = 0;
    double weight = 0.0;
    /// Mean detection probability u / (u + v); empty for filters that assume
    /// a known detection probability.
    std::optional<double> detection_prob;
    Trajectory trajectory;

    [[nodiscard]] const Vector& current_state() const { return trajectory.states.back(); }
};

/// Filter output at one scan.
struct ScanEstimate {
    int time = 0;
    double expected_count = 0.0;   // Σ track weights
    int cardinality = 0;           // round(Σ track weights)
    bool shortfall = false;        // fewer components than the rounded count
    std::vector<TrackEstimate> tracks;
    std::optional<int> clutter_rate;
    std::optional<double> clutter_rate_raw;
};

namespace detail {

/// Indices of the `count` heaviest components, heaviest first; ties keep the
/// mixture order.
template <TrajectoryMixtureTerm C>
std::vector<std::size_t> heaviest(const std::vector<C>& comps, std::size_t count) {
    std::vector<std::size_t> idx(comps.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return comps[a].weight > comps[b].weight; });
    if (idx.size() > count) idx.resize(count);
    return idx;
}

template <TrajectoryMixtureTerm C>
ScanEstimate estimate_tracks(const std::vector<C>& comps, int time) {
    ScanEstimate est;
    est.time = time;
    for (const auto& c : comps) est.expected_count += c.weight;
    est.cardinality = static_cast<int>(std::lround(est.expected_count));
    const auto wanted = static_cast<std::size_t>(std::max(est.cardinality, 0));
    est.shortfall = wanted > comps.size();
    for (std::size_t j : heaviest(comps, wanted)) {
        TrackEstimate t;
        t.birth_time = comps[j].traj.birth_time;
        t.length = comps[j].traj.length();
        t.weight = comps[j].weight;
        t.trajectory = comps[j].traj.to_trajectory();
        est.tracks.push_back(std::move(t));
    }
    return est;
}

}  // namespace detail

}  // namespace bgtphd
