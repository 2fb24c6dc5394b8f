#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "safegrid/gridworld.hpp"
#include "safegrid/tabular.hpp"

namespace safegrid {

struct Trajectory {
    std::vector<TabularState> states;
    Outcome outcome = Outcome::Timeout;
};

// Euclidean distance between agent and obstacle. Zero exactly on failure
// states (coincident cells), positive elsewhere.
inline double signed_distance(const TabularState& s, const GridSpec& spec) {
    double dx = s.agent_x - spec.obstacle_column;
    double dy = s.agent_y - s.obstacle_row;
    return std::sqrt(dx * dx + dy * dy);
}

// Forward sliding-window minimum of the signed distance: V(s_i) is the
// smallest distance reached within the next `horizon` steps of the
// trajectory, window clipped at the trajectory end.
inline std::vector<double> value_trace(const Trajectory& traj, int horizon, const GridSpec& spec) {
    if (traj.states.empty()) throw UsageError("value_trace on empty trajectory");
    const int n = static_cast<int>(traj.states.size());
    std::vector<double> dist(n);
    for (int i = 0; i < n; ++i) dist[i] = signed_distance(traj.states[i], spec);
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) {
        int end = std::min(i + horizon, n - 1);
        double v = dist[i];
        for (int j = i + 1; j <= end; ++j) v = std::min(v, dist[j]);
        values[i] = v;
    }
    return values;
}

inline std::vector<bool> brs_labels(const std::vector<double>& values) {
    std::vector<bool> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) labels[i] = values[i] <= 0.0;
    return labels;
}

namespace detail {

inline bool collision_reachable(const EnvState& s, int depth, const GridSpec& spec) {
    if (depth == 0) return false;
    for (Action a : {Action::TurnLeft, Action::TurnRight, Action::Forward, Action::DoNothing}) {
        StepResult res = step(s, a, spec);
        if (res.outcome == Outcome::Collision) return true;
        if (!res.done && collision_reachable(res.next, depth - 1, spec)) return true;
    }
    return false;
}

}  // namespace detail

// Exhaustive backward reachable set: every state from which some action
// sequence of length <= horizon (learner actions plus DoNothing) reaches a
// collision under the environment dynamics. Failure states themselves are
// members via the empty sequence.
inline std::set<TabularState> brute_force_brs(const GridSpec& spec, int horizon) {
    spec.validate();
    double states = static_cast<double>(spec.width) * spec.height * spec.height * 2 * 4;
    double branches = std::pow(4.0, horizon);
    if (states * branches > 5e7)
        throw SpecError("brute_force_brs: state space times 4^horizon too large");

    std::set<TabularState> result;
    for (int x = 0; x < spec.width; ++x)
        for (int y = 0; y < spec.height; ++y) {
            if (spec.is_blocked({x, y})) continue;
            for (int row = 0; row < spec.height; ++row)
                for (int dir = 0; dir < 2; ++dir)
                    for (int h = 0; h < 4; ++h) {
                        TabularState s{x, y, row, static_cast<VertDir>(dir),
                                       static_cast<Heading>(h)};
                        if (signed_distance(s, spec) <= 0.0 ||
                            detail::collision_reachable(to_env_state(s), horizon, spec))
                            result.insert(s);
                    }
        }
    return result;
}

}  // namespace safegrid
