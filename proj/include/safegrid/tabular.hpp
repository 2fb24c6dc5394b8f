#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "safegrid/gridworld.hpp"

namespace safegrid {

using Rng = std::mt19937_64;

// The discrete learning state: agent position and heading plus the obstacle's
// row and direction. Heading is part of the state so Forward is well-defined.
struct TabularState {
    int agent_x = 0;
    int agent_y = 0;
    int obstacle_row = 0;
    VertDir obstacle_dir = VertDir::Down;
    Heading heading = Heading::East;
    auto operator<=>(const TabularState&) const = default;
};

inline TabularState to_tabular(const EnvState& s) {
    return {s.agent.x, s.agent.y, s.obstacle_row, s.obstacle_dir, s.heading};
}

inline EnvState to_env_state(const TabularState& s, int steps_elapsed = 0) {
    return {{s.agent_x, s.agent_y}, s.heading, s.obstacle_row, s.obstacle_dir, steps_elapsed};
}

// The learner's action set; DoNothing is reserved for the safe policy.
inline constexpr std::array<Action, 3> kLearnerActions{Action::TurnLeft, Action::TurnRight,
                                                       Action::Forward};

enum class Algo : int { QLearning = 0, Sarsa = 1 };

struct LearnerConfig {
    double gamma = 0.99;
    double alpha = 0.5;
    double epsilon = 0.2;
    Algo algorithm = Algo::QLearning;
};

// Dense state-action value table over a spec's state space. Unvisited
// entries read as 0.
class QTable {
public:
    explicit QTable(const GridSpec& spec)
        : width_(spec.width),
          height_(spec.height),
          values_(static_cast<std::size_t>(spec.width) * spec.height * spec.height * 2 * 4 * 3, 0.0) {}

    double get(const TabularState& s, Action a) const { return values_[index(s, a)]; }
    void set(const TabularState& s, Action a, double v) { values_[index(s, a)] = v; }

    std::array<double, 3> action_values(const TabularState& s) const {
        return {get(s, Action::TurnLeft), get(s, Action::TurnRight), get(s, Action::Forward)};
    }

    double max_value(const TabularState& s) const {
        auto v = action_values(s);
        return std::max({v[0], v[1], v[2]});
    }

    // Argmax with fixed tie-break order TurnLeft < TurnRight < Forward.
    Action greedy_action(const TabularState& s) const {
        auto v = action_values(s);
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (v[i] > v[best]) best = i;
        return kLearnerActions[best];
    }

    bool operator==(const QTable& other) const = default;

    void dump(std::ostream& out) const {
        out << "agent_x,agent_y,obstacle_row,obstacle_dir,heading,action,value\n";
        for (int x = 0; x < width_; ++x)
            for (int y = 0; y < height_; ++y)
                for (int row = 0; row < height_; ++row)
                    for (int dir = 0; dir < 2; ++dir)
                        for (int h = 0; h < 4; ++h) {
                            TabularState s{x, y, row, static_cast<VertDir>(dir),
                                           static_cast<Heading>(h)};
                            for (Action a : kLearnerActions) {
                                double v = get(s, a);
                                if (v == 0.0) continue;
                                out << x << "," << y << "," << row << "," << dir << "," << h << ","
                                    << static_cast<int>(a) << "," << v << "\n";
                            }
                        }
    }

private:
    std::size_t index(const TabularState& s, Action a) const {
        std::size_t i = s.agent_x;
        i = i * height_ + s.agent_y;
        i = i * height_ + s.obstacle_row;
        i = i * 2 + static_cast<int>(s.obstacle_dir);
        i = i * 4 + static_cast<int>(s.heading);
        i = i * 3 + static_cast<int>(a);
        return i;
    }

    int width_;
    int height_;
    std::vector<double> values_;
};

// ε-greedy over the learner action set. Consumes one real draw, plus one
// integer draw on the exploring branch.
inline Action select_action(const QTable& q, const TabularState& s, double epsilon, Rng& rng) {
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon)
        return kLearnerActions[std::uniform_int_distribution<int>(0, 2)(rng)];
    return q.greedy_action(s);
}

inline void q_update(QTable& q, const TabularState& s, Action a, double reward,
                     const TabularState& s_next, bool done, const LearnerConfig& cfg) {
    double bootstrap = done ? 0.0 : cfg.gamma * q.max_value(s_next);
    double old = q.get(s, a);
    q.set(s, a, old + cfg.alpha * (reward + bootstrap - old));
}

inline void sarsa_update(QTable& q, const TabularState& s, Action a, double reward,
                         const TabularState& s_next, Action a_next, bool done,
                         const LearnerConfig& cfg) {
    double bootstrap = done ? 0.0 : cfg.gamma * q.get(s_next, a_next);
    double old = q.get(s, a);
    q.set(s, a, old + cfg.alpha * (reward + bootstrap - old));
}

}  // namespace safegrid
