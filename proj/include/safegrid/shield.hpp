#pragma once

#include <utility>
#include <vector>

#include "safegrid/classify.hpp"
#include "safegrid/gridworld.hpp"
#include "safegrid/tabular.hpp"

namespace safegrid {

enum class DecisionSource : int { Learner = 0, Safe = 1 };

struct ShieldDecision {
    DecisionSource source = DecisionSource::Learner;
    Action action = Action::Forward;
};

// Remaining actions of an in-progress escape maneuver. Worst case two
// entries (one turn plus Forward).
struct SafePlan {
    std::vector<Action> queue;
    bool empty() const { return queue.empty(); }
};

// The obstacle patrols its column forever, so its path is the whole column.
inline bool in_obstacle_path(const TabularState& s, const GridSpec& spec) {
    return s.agent_x == spec.obstacle_column;
}

namespace detail {

// Turns needed to rotate from `h` to face `target`, then Forward.
inline std::vector<Action> rotation_plan(Heading h, Heading target) {
    std::vector<Action> actions;
    int diff = (static_cast<int>(target) - static_cast<int>(h) + 4) % 4;
    if (diff == 1) actions.push_back(Action::TurnRight);
    else if (diff == 3) actions.push_back(Action::TurnLeft);
    else if (diff == 2) {
        actions.push_back(Action::TurnRight);
        actions.push_back(Action::TurnRight);
    }
    actions.push_back(Action::Forward);
    return actions;
}

}  // namespace detail

// Rule-based safe policy. Off the obstacle's column it holds position with
// DoNothing; on the column it takes the shortest turn-and-move sequence into
// an adjacent free column, preferring east.
inline std::pair<Action, SafePlan> safe_action(const TabularState& s, SafePlan plan,
                                               const GridSpec& spec) {
    if (!plan.empty()) {
        Action a = plan.queue.front();
        plan.queue.erase(plan.queue.begin());
        return {a, std::move(plan)};
    }
    if (!in_obstacle_path(s, spec)) return {Action::DoNothing, SafePlan{}};

    std::vector<Action> best;
    for (auto [target_col, target_heading] :
         {std::pair{s.agent_x + 1, Heading::East}, std::pair{s.agent_x - 1, Heading::West}}) {
        GridPos cell{target_col, s.agent_y};
        if (!spec.in_bounds(cell) || spec.is_blocked(cell)) continue;
        auto candidate = detail::rotation_plan(s.heading, target_heading);
        if (best.empty() || candidate.size() < best.size()) best = std::move(candidate);
    }
    if (best.empty()) return {Action::DoNothing, SafePlan{}};

    Action first = best.front();
    best.erase(best.begin());
    return {first, SafePlan{std::move(best)}};
}

// Route the step to the safe policy when the classifier flags the state as
// BRS, otherwise to the ε-greedy learner. An unfinished escape plan is
// abandoned as soon as the BRS flag clears.
inline std::pair<ShieldDecision, SafePlan> shield_decide(const TabularState& s,
                                                         const ClassifierModel& model,
                                                         const QTable& q, SafePlan plan,
                                                         double epsilon, Rng& rng,
                                                         const GridSpec& spec) {
    if (predict(model, extract_features(s, spec))) {
        auto [action, next_plan] = safe_action(s, std::move(plan), spec);
        return {ShieldDecision{DecisionSource::Safe, action}, std::move(next_plan)};
    }
    return {ShieldDecision{DecisionSource::Learner, select_action(q, s, epsilon, rng)}, SafePlan{}};
}

}  // namespace safegrid
