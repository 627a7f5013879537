#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "bgtphd/core_types.hpp"

namespace bgtphd {

/// Order p, cutoff c and track-switch penalty γ.
struct TmParams {
    double p = 2.0;
    double c = 10.0;
    double gamma = 1.0;
};

/// Optimal value and its split into cost terms, all in the p-th power domain:
/// distance^p = localization + missed + false_tracks + switching.
struct TmResult {
    double distance = 0.0;
    double localization = 0.0;
    double missed = 0.0;
    double false_tracks = 0.0;
    double switching = 0.0;
};

namespace detail {

/// Injective partial assignments of `n_left` items to `n_right` items. Entry
/// i holds 0 for "unassigned" or j + 1 for right item j.
class AssignmentStates {
public:
    AssignmentStates(int n_left, int n_right, std::size_t max_states)
        : n_left_(n_left), n_right_(n_right) {
        std::vector<std::uint8_t> cur(static_cast<std::size_t>(n_left), 0);
        std::vector<char> taken(static_cast<std::size_t>(n_right) + 1, 0);
        enumerate(0, cur, taken, max_states);
        for (std::size_t s = 0; s < states_.size(); ++s) index_.emplace(key(states_[s]), static_cast<int>(s));
        build_neighbours();
    }

    [[nodiscard]] std::size_t size() const { return states_.size(); }
    [[nodiscard]] const std::vector<std::uint8_t>& state(std::size_t s) const { return states_[s]; }
    [[nodiscard]] const std::vector<int>& neighbours(std::size_t s) const { return neighbours_[s]; }

private:
    void enumerate(int i, std::vector<std::uint8_t>& cur, std::vector<char>& taken, std::size_t max_states) {
        if (i == n_left_) {
            if (states_.size() >= max_states) throw std::length_error("trajectory metric: assignment space too large");
            states_.push_back(cur);
            return;
        }
        cur[static_cast<std::size_t>(i)] = 0;
        enumerate(i + 1, cur, taken, max_states);
        for (int j = 1; j <= n_right_; ++j) {
            if (taken[static_cast<std::size_t>(j)]) continue;
            taken[static_cast<std::size_t>(j)] = 1;
            cur[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(j);
            enumerate(i + 1, cur, taken, max_states);
            taken[static_cast<std::size_t>(j)] = 0;
        }
        cur[static_cast<std::size_t>(i)] = 0;
    }

    [[nodiscard]] std::uint64_t key(const std::vector<std::uint8_t>& s) const {
        std::uint64_t k = 0;
        for (auto v : s) k = k * static_cast<std::uint64_t>(n_right_ + 1) + v;
        return k;
    }

    // Moving one entry between "unassigned" and a free right item.
    void build_neighbours() {
        neighbours_.resize(states_.size());
        std::vector<char> taken(static_cast<std::size_t>(n_right_) + 1);
        for (std::size_t s = 0; s < states_.size(); ++s) {
            auto st = states_[s];
            std::fill(taken.begin(), taken.end(), 0);
            for (auto v : st) taken[v] = 1;
            for (std::size_t i = 0; i < st.size(); ++i) {
                const std::uint8_t old = st[i];
                if (old != 0) {
                    st[i] = 0;
                    neighbours_[s].push_back(index_.at(key(st)));
                } else {
                    for (int j = 1; j <= n_right_; ++j) {
                        if (taken[static_cast<std::size_t>(j)]) continue;
                        st[i] = static_cast<std::uint8_t>(j);
                        neighbours_[s].push_back(index_.at(key(st)));
                    }
                }
                st[i] = old;
            }
        }
    }

    int n_left_;
    int n_right_;
    std::vector<std::vector<std::uint8_t>> states_;
    std::unordered_map<std::uint64_t, int> index_;
    std::vector<std::vector<int>> neighbours_;
};

inline double position_distance(const Vector& a, const Vector& b, int dims) {
    return (a.head(dims) - b.head(dims)).norm();
}

}  // namespace detail

/// Trajectory metric between two sets of trajectories over times 1..horizon.
///
/// Minimises, over one assignment per time step between the two sets,
///   Σ_k [ Σ_matched min(d, c)^p + c^p/2 (#missed + #false) ]
///   + γ^p Σ_k Σ_i s_i(π^k, π^{k+1}),
/// where s_i is 0 when entry i keeps its assignment, 1 when it switches between
/// two trajectories and 1/2 when it switches to or from "unassigned". d is the
/// Euclidean distance over the first `position_dims` state entries. Returns
/// the p-th root of the optimum and the p-th power cost split.
///
/// The minimisation is exact: dynamic programming over the injective
/// assignments of the smaller set into the larger one. The switching cost is a
/// sum of per-entry star-graph distances, so the transition step is a
/// shortest-path distance transform on the one-entry-change graph.
inline TmResult trajectory_metric(const std::vector<Trajectory>& truth, const std::vector<Trajectory>& estimate,
                                  int horizon, const TmParams& params = {}, int position_dims = 2,
                                  std::size_t max_states = 2'000'000) {
    if (!(params.p >= 1.0) || !(params.c > 0.0) || !(params.gamma >= 0.0)) {
        throw std::invalid_argument("trajectory metric parameters out of range");
    }
    auto check = [&](const std::vector<Trajectory>& set) {
        for (const auto& t : set) {
            if (t.length() > 0 && (t.birth_time < 1 || t.last_time() > horizon)) {
                throw std::invalid_argument("trajectory outside the metric horizon");
            }
        }
    };
    check(truth);
    check(estimate);

    // Left side is the smaller set; swap the missed/false roles back at the end.
    const bool swapped = estimate.size() < truth.size();
    const auto& left = swapped ? estimate : truth;
    const auto& right = swapped ? truth : estimate;
    const int nl = static_cast<int>(left.size());
    const int nr = static_cast<int>(right.size());

    const double cp = std::pow(params.c, params.p);
    const double half = 0.5 * cp;
    const double hop = 0.5 * std::pow(params.gamma, params.p);

    int first = horizon + 1;
    for (const auto* set : {&left, &right}) {
        for (const auto& t : *set) {
            if (t.length() > 0) first = std::min(first, t.birth_time);
        }
    }
    TmResult result;
    if (first > horizon) return result;

    const detail::AssignmentStates space(nl, nr, max_states);
    const std::size_t S = space.size();
    const int T = horizon - first + 1;

    // a(i, j) table per time: index j = 0 for unassigned.
    std::vector<double> a(static_cast<std::size_t>(nl) * static_cast<std::size_t>(nr + 1));
    auto pair_cost = [&](int k) {
        for (int i = 0; i < nl; ++i) {
            const bool xi = left[static_cast<std::size_t>(i)].alive_at(k);
            double* row = &a[static_cast<std::size_t>(i) * static_cast<std::size_t>(nr + 1)];
            row[0] = xi ? half : 0.0;
            for (int j = 0; j < nr; ++j) {
                const bool yj = right[static_cast<std::size_t>(j)].alive_at(k);
                double v = 0.0;
                if (xi && yj) {
                    const double d = detail::position_distance(left[static_cast<std::size_t>(i)].at(k),
                                                               right[static_cast<std::size_t>(j)].at(k), position_dims);
                    v = std::pow(std::min(d, params.c), params.p) - half;
                } else if (xi) {
                    v = half;
                }
                row[j + 1] = v;
            }
        }
        double base = 0.0;
        for (const auto& y : right) {
            if (y.alive_at(k)) base += half;
        }
        return base;
    };

    std::vector<double> value(S), next(S);
    std::vector<std::vector<int>> origin(static_cast<std::size_t>(T), std::vector<int>(S));
    for (int step = 0; step < T; ++step) {
        const int k = first + step;
        auto& org = origin[static_cast<std::size_t>(step)];
        if (step == 0) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t s = 0; s < S; ++s) org[s] = static_cast<int>(s);
        } else {
            // Distance transform of the previous values over the switch graph.
            next = value;
            for (std::size_t s = 0; s < S; ++s) org[s] = static_cast<int>(s);
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::size_t s = 0; s < S; ++s) {
                    const double cand = next[s] + hop;
                    for (int n : space.neighbours(s)) {
                        if (cand < next[static_cast<std::size_t>(n)]) {
                            next[static_cast<std::size_t>(n)] = cand;
                            org[static_cast<std::size_t>(n)] = org[s];
                            changed = true;
                        }
                    }
                }
            }
        }
        const double base = pair_cost(k);
        for (std::size_t s = 0; s < S; ++s) {
            const auto& st = space.state(s);
            double c = base;
            for (int i = 0; i < nl; ++i) c += a[static_cast<std::size_t>(i) * static_cast<std::size_t>(nr + 1) + st[static_cast<std::size_t>(i)]];
            value[s] = next[s] + c;
        }
    }

    std::size_t best = 0;
    for (std::size_t s = 1; s < S; ++s) {
        if (value[s] < value[best]) best = s;
    }
    const double optimum = std::max(value[best], 0.0);
    result.distance = std::pow(optimum, 1.0 / params.p);

    // Recover the assignment sequence and split the cost.
    std::vector<std::size_t> path(static_cast<std::size_t>(T));
    path[static_cast<std::size_t>(T - 1)] = best;
    for (int step = T - 1; step > 0; --step) {
        path[static_cast<std::size_t>(step - 1)] =
            static_cast<std::size_t>(origin[static_cast<std::size_t>(step)][path[static_cast<std::size_t>(step)]]);
    }
    double missed_left = 0.0, missed_right = 0.0;
    for (int step = 0; step < T; ++step) {
        const int k = first + step;
        const auto& st = space.state(path[static_cast<std::size_t>(step)]);
        std::vector<char> right_matched(static_cast<std::size_t>(nr), 0);
        for (int i = 0; i < nl; ++i) {
            const bool xi = left[static_cast<std::size_t>(i)].alive_at(k);
            const int j = st[static_cast<std::size_t>(i)] - 1;
            if (xi && j >= 0 && right[static_cast<std::size_t>(j)].alive_at(k)) {
                const double d = detail::position_distance(left[static_cast<std::size_t>(i)].at(k),
                                                           right[static_cast<std::size_t>(j)].at(k), position_dims);
                result.localization += std::pow(std::min(d, params.c), params.p);
                right_matched[static_cast<std::size_t>(j)] = 1;
            } else if (xi) {
                missed_left += half;
            }
        }
        for (int j = 0; j < nr; ++j) {
            if (right[static_cast<std::size_t>(j)].alive_at(k) && !right_matched[static_cast<std::size_t>(j)]) {
                missed_right += half;
            }
        }
        if (step > 0) {
            const auto& prev = space.state(path[static_cast<std::size_t>(step - 1)]);
            for (int i = 0; i < nl; ++i) {
                const auto p0 = prev[static_cast<std::size_t>(i)];
                const auto p1 = st[static_cast<std::size_t>(i)];
                if (p0 == p1) continue;
                result.switching += (p0 != 0 && p1 != 0) ? 2.0 * hop : hop;
            }
        }
    }
    // Left items unmatched are missed when left is the truth.
    result.missed = swapped ? missed_right : missed_left;
    result.false_tracks = swapped ? missed_left : missed_right;
    return result;
}

}  // namespace bgtphd
