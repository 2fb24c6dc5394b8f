#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace safegrid {

// Coordinate convention: x grows rightward, y grows downward, both 0-based.

enum class Heading : int { North = 0, East = 1, South = 2, West = 3 };
enum class Action : int { TurnLeft = 0, TurnRight = 1, Forward = 2, DoNothing = 3 };
enum class VertDir : int { Up = 0, Down = 1 };
enum class Outcome : int { Running = 0, Goal = 1, Collision = 2, Timeout = 3 };

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

struct GridPos {
    int x = 0;
    int y = 0;
    auto operator<=>(const GridPos&) const = default;
};

inline Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
inline Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }

inline GridPos forward_of(GridPos p, Heading h) {
    switch (h) {
        case Heading::North: return {p.x, p.y - 1};
        case Heading::East: return {p.x + 1, p.y};
        case Heading::South: return {p.x, p.y + 1};
        case Heading::West: return {p.x - 1, p.y};
    }
    return p;
}

struct GridSpec {
    int width = 0;
    int height = 0;
    GridPos goal;
    std::set<GridPos> blocked;
    int obstacle_column = 0;
    int obstacle_init_row = 0;
    VertDir obstacle_init_dir = VertDir::Down;
    GridPos agent_start;
    Heading agent_start_heading = Heading::East;
    int max_steps = 1;
    // When false the obstacle cell is inert: it never moves and never collides.
    bool has_obstacle = true;

    bool in_bounds(GridPos p) const { return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height; }
    bool is_blocked(GridPos p) const { return blocked.count(p) != 0; }

    void validate() const {
        if (width < 1 || height < 1) throw SpecError("grid dimensions must be positive");
        if (!in_bounds(goal)) throw SpecError("goal out of bounds");
        if (!in_bounds(agent_start)) throw SpecError("agent start out of bounds");
        if (obstacle_column < 0 || obstacle_column >= width) throw SpecError("obstacle column out of bounds");
        if (obstacle_init_row < 0 || obstacle_init_row >= height) throw SpecError("obstacle row out of bounds");
        if (is_blocked(goal)) throw SpecError("goal cell is blocked");
        if (is_blocked(agent_start)) throw SpecError("agent start cell is blocked");
        GridPos obs{obstacle_column, obstacle_init_row};
        if (is_blocked(obs)) throw SpecError("obstacle initial cell is blocked");
        if (obs == goal) throw SpecError("obstacle initial cell coincides with goal");
        if (agent_start == goal) throw SpecError("agent start coincides with goal");
        if (max_steps < 1) throw SpecError("max_steps must be >= 1");
        for (const auto& b : blocked)
            if (!in_bounds(b)) throw SpecError("blocked cell out of bounds");
    }
};

struct EnvState {
    GridPos agent;
    Heading heading = Heading::East;
    int obstacle_row = 0;
    VertDir obstacle_dir = VertDir::Down;
    int steps_elapsed = 0;
    auto operator<=>(const EnvState&) const = default;
};

struct StepResult {
    EnvState next;
    double reward = 0.0;
    bool done = false;
    Outcome outcome = Outcome::Running;
};

inline EnvState reset(const GridSpec& spec) {
    spec.validate();
    return EnvState{spec.agent_start, spec.agent_start_heading, spec.obstacle_init_row,
                    spec.obstacle_init_dir, 0};
}

// One environment tick. Effect order: agent acts, collision check, obstacle
// moves (bouncing off rows 0 and height-1), collision check again, goal
// check, then the step counter and timeout.
inline StepResult step(const EnvState& state, Action action, const GridSpec& spec) {
    if (state.steps_elapsed >= spec.max_steps)
        throw UsageError("step called on a terminal state");

    EnvState s = state;
    switch (action) {
        case Action::TurnLeft: s.heading = turn_left(s.heading); break;
        case Action::TurnRight: s.heading = turn_right(s.heading); break;
        case Action::Forward: {
            GridPos target = forward_of(s.agent, s.heading);
            if (spec.in_bounds(target) && !spec.is_blocked(target)) s.agent = target;
            break;
        }
        case Action::DoNothing: break;
    }
    s.steps_elapsed = state.steps_elapsed + 1;

    auto collided = [&] {
        return spec.has_obstacle && s.agent.x == spec.obstacle_column && s.agent.y == s.obstacle_row;
    };
    if (collided()) return {s, -1.0, true, Outcome::Collision};

    if (spec.has_obstacle) {
        int delta = (s.obstacle_dir == VertDir::Up) ? -1 : 1;
        int next_row = s.obstacle_row + delta;
        if (next_row < 0 || next_row >= spec.height) {
            s.obstacle_dir = (s.obstacle_dir == VertDir::Up) ? VertDir::Down : VertDir::Up;
            next_row = s.obstacle_row - delta;
        }
        s.obstacle_row = next_row;
    }
    if (collided()) return {s, -1.0, true, Outcome::Collision};

    if (s.agent == spec.goal) return {s, 1.0, true, Outcome::Goal};
    if (s.steps_elapsed >= spec.max_steps) return {s, 0.0, true, Outcome::Timeout};
    return {s, 0.0, false, Outcome::Running};
}

// Breadth-first reachability from agent_start to goal through unblocked
// cells, ignoring the obstacle.
inline bool goal_reachable(const GridSpec& spec) {
    std::vector<char> seen(static_cast<std::size_t>(spec.width) * spec.height, 0);
    auto idx = [&](GridPos p) { return static_cast<std::size_t>(p.y) * spec.width + p.x; };
    std::deque<GridPos> queue{spec.agent_start};
    seen[idx(spec.agent_start)] = 1;
    while (!queue.empty()) {
        GridPos p = queue.front();
        queue.pop_front();
        if (p == spec.goal) return true;
        for (GridPos n : {GridPos{p.x + 1, p.y}, GridPos{p.x - 1, p.y},
                          GridPos{p.x, p.y + 1}, GridPos{p.x, p.y - 1}}) {
            if (spec.in_bounds(n) && !spec.is_blocked(n) && !seen[idx(n)]) {
                seen[idx(n)] = 1;
                queue.push_back(n);
            }
        }
    }
    return false;
}

// Minimum number of actions (turns + forwards) from the start to the goal,
// ignoring the obstacle. -1 if unreachable.
inline int min_actions_to_goal(const GridSpec& spec) {
    struct Node {
        GridPos pos;
        Heading heading;
        int dist;
    };
    std::vector<char> seen(static_cast<std::size_t>(spec.width) * spec.height * 4, 0);
    auto idx = [&](GridPos p, Heading h) {
        return (static_cast<std::size_t>(p.y) * spec.width + p.x) * 4 + static_cast<int>(h);
    };
    std::deque<Node> queue{{spec.agent_start, spec.agent_start_heading, 0}};
    seen[idx(spec.agent_start, spec.agent_start_heading)] = 1;
    while (!queue.empty()) {
        Node n = queue.front();
        queue.pop_front();
        if (n.pos == spec.goal) return n.dist;
        auto push = [&](GridPos p, Heading h) {
            if (!seen[idx(p, h)]) {
                seen[idx(p, h)] = 1;
                queue.push_back({p, h, n.dist + 1});
            }
        };
        push(n.pos, turn_left(n.heading));
        push(n.pos, turn_right(n.heading));
        GridPos fwd = forward_of(n.pos, n.heading);
        if (spec.in_bounds(fwd) && !spec.is_blocked(fwd)) push(fwd, n.heading);
    }
    return -1;
}

// MiniGrid-style quadratic episode cap. A linear cap starves early
// exploration: with terminal-only rewards the first goal must be found by
// random walk, which needs O(cells) steps.
inline int default_max_steps(int width, int height) { return 4 * width * height; }

// Random 15x15-style task: goal in the right third, obstacle column outside
// it, five blocked cells re-drawn until the goal stays reachable.
inline GridSpec generate_task(std::uint64_t seed, int width = 15, int height = 15) {
    if (width < 6 || height < 6) throw SpecError("generate_task requires width, height >= 6");
    std::mt19937_64 rng(seed);
    auto uniform = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    const int right_third_start = (2 * width + 2) / 3;  // ceil(2w/3)
    GridSpec spec;
    spec.width = width;
    spec.height = height;
    spec.agent_start = {0, height / 2};
    spec.agent_start_heading = Heading::East;
    spec.max_steps = default_max_steps(width, height);
    spec.goal = {uniform(right_third_start, width - 1), uniform(0, height - 1)};
    spec.obstacle_column = uniform(0, right_third_start - 1);
    spec.obstacle_init_row = uniform(0, height - 1);
    spec.obstacle_init_dir = uniform(0, 1) == 0 ? VertDir::Up : VertDir::Down;

    std::vector<GridPos> candidates;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            GridPos p{x, y};
            if (p == spec.goal || p == spec.agent_start || x == spec.obstacle_column) continue;
            candidates.push_back(p);
        }

    for (int attempt = 0; attempt < 1000; ++attempt) {
        spec.blocked.clear();
        std::vector<GridPos> pool = candidates;
        for (int i = 0; i < 5; ++i) {
            int j = uniform(0, static_cast<int>(pool.size()) - 1);
            spec.blocked.insert(pool[j]);
            pool.erase(pool.begin() + j);
        }
        if (goal_reachable(spec)) {
            spec.validate();
            return spec;
        }
    }
    throw SpecError("task generation failed: no reachable layout in 1000 attempts");
}

// Fixed 10x10 pre-training zone: open grid, goal in the right third, one
// obstacle column on the left.
inline GridSpec pretrain_spec() {
    GridSpec spec;
    spec.width = 10;
    spec.height = 10;
    spec.goal = {8, 5};
    spec.obstacle_column = 4;
    spec.obstacle_init_row = 2;
    spec.obstacle_init_dir = VertDir::Down;
    spec.agent_start = {0, 5};
    spec.agent_start_heading = Heading::East;
    spec.max_steps = default_max_steps(10, 10);
    return spec;
}

// --- flat key-value serialization ---

inline const char* heading_key(Heading h) {
    switch (h) {
        case Heading::North: return "n";
        case Heading::East: return "e";
        case Heading::South: return "s";
        case Heading::West: return "w";
    }
    return "?";
}

inline Heading heading_from_key(const std::string& k) {
    if (k == "n") return Heading::North;
    if (k == "e") return Heading::East;
    if (k == "s") return Heading::South;
    if (k == "w") return Heading::West;
    throw SpecError("unknown heading '" + k + "'");
}

inline void write_spec(std::ostream& out, const GridSpec& spec) {
    out << "width " << spec.width << "\n";
    out << "height " << spec.height << "\n";
    out << "goal_x " << spec.goal.x << "\n";
    out << "goal_y " << spec.goal.y << "\n";
    out << "blocked ";
    bool first = true;
    for (const auto& b : spec.blocked) {
        if (!first) out << ";";
        out << b.x << "," << b.y;
        first = false;
    }
    out << "\n";
    out << "obstacle_column " << spec.obstacle_column << "\n";
    out << "obstacle_init_row " << spec.obstacle_init_row << "\n";
    out << "obstacle_init_dir " << (spec.obstacle_init_dir == VertDir::Up ? "up" : "down") << "\n";
    out << "agent_start_x " << spec.agent_start.x << "\n";
    out << "agent_start_y " << spec.agent_start.y << "\n";
    out << "agent_start_heading " << heading_key(spec.agent_start_heading) << "\n";
    out << "max_steps " << spec.max_steps << "\n";
    if (!spec.has_obstacle) out << "has_obstacle 0\n";
}

inline GridSpec read_spec(std::istream& in) {
    GridSpec spec;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key, value;
        ls >> key;
        std::getline(ls, value);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        if (key == "width") spec.width = std::stoi(value);
        else if (key == "height") spec.height = std::stoi(value);
        else if (key == "goal_x") spec.goal.x = std::stoi(value);
        else if (key == "goal_y") spec.goal.y = std::stoi(value);
        else if (key == "blocked") {
            std::istringstream bs(value);
            std::string cell;
            while (std::getline(bs, cell, ';')) {
                if (cell.empty()) continue;
                auto comma = cell.find(',');
                if (comma == std::string::npos) throw SpecError("malformed blocked cell '" + cell + "'");
                spec.blocked.insert({std::stoi(cell.substr(0, comma)), std::stoi(cell.substr(comma + 1))});
            }
        } else if (key == "obstacle_column") spec.obstacle_column = std::stoi(value);
        else if (key == "obstacle_init_row") spec.obstacle_init_row = std::stoi(value);
        else if (key == "obstacle_init_dir") {
            if (value == "up") spec.obstacle_init_dir = VertDir::Up;
            else if (value == "down") spec.obstacle_init_dir = VertDir::Down;
            else throw SpecError("unknown obstacle direction '" + value + "'");
        } else if (key == "agent_start_x") spec.agent_start.x = std::stoi(value);
        else if (key == "agent_start_y") spec.agent_start.y = std::stoi(value);
        else if (key == "agent_start_heading") spec.agent_start_heading = heading_from_key(value);
        else if (key == "max_steps") spec.max_steps = std::stoi(value);
        else if (key == "has_obstacle") spec.has_obstacle = std::stoi(value) != 0;
        else throw SpecError("unknown spec key '" + key + "'");
    }
    spec.validate();
    return spec;
}

}  // namespace safegrid
