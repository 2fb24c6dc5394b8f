#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "safegrid/classify.hpp"
#include "safegrid/gridworld.hpp"
#include "safegrid/reachability.hpp"
#include "safegrid/shield.hpp"
#include "safegrid/tabular.hpp"

namespace safegrid {

enum class Strategy : int { EpsilonGreedy = 0, SafeExploration = 1 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::uint64_t master_seed = 0;
    int pretrain_episodes = 4000;
    double pretrain_epsilon = 0.6;
    Algo pretrain_algorithm = Algo::QLearning;
    std::array<std::uint64_t, 3> task_seeds{1, 2, 3};
    int train_episodes = 2000;
    int train_runs = 20;
    double train_epsilon = 0.2;
    double gamma = 0.99;
    double alpha = 0.5;
    int horizon = 2;
    ClassifierKind classifier = ClassifierKind::LinearSvm;
    SvmConfig svm;
    int knn_k = 5;
    TreeConfig tree;
    Strategy strategy = Strategy::SafeExploration;

    void validate() const {
        if (pretrain_episodes < 0) throw ConfigError("pretrain_episodes must be >= 0");
        if (train_episodes < 1) throw ConfigError("train_episodes must be >= 1");
        if (train_runs < 1) throw ConfigError("train_runs must be >= 1");
        if (horizon < 0) throw ConfigError("horizon must be >= 0");
        for (double e : {pretrain_epsilon, train_epsilon})
            if (e < 0.0 || e > 1.0) throw ConfigError("epsilon must lie in [0,1]");
        if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must lie in [0,1]");
        if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in (0,1]");
    }
};

struct EpisodeRecord {
    int run_id = 0;
    int episode_idx = 0;
    int steps = 0;
    Outcome outcome = Outcome::Timeout;
    double discounted_return = 0.0;
    int shield_activations = 0;
};

struct SummaryRow {
    std::string algorithm;
    std::string task;
    std::string strategy;
    double avg_collision_rate = 0.0;
    double avg_success_rate = 0.0;
    double sum_of_reward = 0.0;
};

struct EpisodeStats {
    int steps = 0;
    Outcome outcome = Outcome::Timeout;
    int shield_activations = 0;
};

// One training episode. The learner updates only on its own transitions;
// steps taken by the safe policy are not learned from. A SARSA update is
// deferred until the next decision so that a_next is the action actually
// chosen there; if the shield takes over at that state the update falls
// back to the greedy action's value.
inline EpisodeStats run_episode(const GridSpec& spec, QTable& q, const LearnerConfig& cfg,
                                const ClassifierModel* model, Rng& rng,
                                Trajectory* traj = nullptr) {
    struct Pending {
        TabularState s;
        Action a;
        double r;
        TabularState s_next;
    };

    EnvState state = reset(spec);
    SafePlan plan;
    std::optional<Pending> pending;
    EpisodeStats stats;
    if (traj) traj->states.push_back(to_tabular(state));

    while (true) {
        TabularState s_tab = to_tabular(state);
        ShieldDecision decision;
        if (model) {
            auto [d, next_plan] =
                shield_decide(s_tab, *model, q, std::move(plan), cfg.epsilon, rng, spec);
            decision = d;
            plan = std::move(next_plan);
        } else {
            decision = {DecisionSource::Learner, select_action(q, s_tab, cfg.epsilon, rng)};
        }

        if (pending) {
            Action a_next = decision.source == DecisionSource::Learner
                                ? decision.action
                                : q.greedy_action(pending->s_next);
            sarsa_update(q, pending->s, pending->a, pending->r, pending->s_next, a_next, false, cfg);
            pending.reset();
        }

        StepResult res = step(state, decision.action, spec);
        ++stats.steps;
        TabularState next_tab = to_tabular(res.next);

        if (decision.source == DecisionSource::Learner) {
            if (cfg.algorithm == Algo::QLearning) {
                q_update(q, s_tab, decision.action, res.reward, next_tab, res.done, cfg);
            } else if (res.done) {
                sarsa_update(q, s_tab, decision.action, res.reward, next_tab, decision.action, true,
                             cfg);
            } else {
                pending = Pending{s_tab, decision.action, res.reward, next_tab};
            }
        } else {
            ++stats.shield_activations;
        }

        if (traj) traj->states.push_back(next_tab);
        state = res.next;
        if (res.done) {
            stats.outcome = res.outcome;
            if (traj) traj->outcome = res.outcome;
            return stats;
        }
    }
}

inline double terminal_reward(Outcome outcome) {
    switch (outcome) {
        case Outcome::Goal: return 1.0;
        case Outcome::Collision: return -1.0;
        default: return 0.0;
    }
}

inline double discounted_return(const EpisodeStats& stats, double gamma) {
    return std::pow(gamma, stats.steps - 1) * terminal_reward(stats.outcome);
}

// ε-greedy learning on the pre-training zone, logging every trajectory.
inline std::pair<std::vector<Trajectory>, QTable> run_pretraining(const ExperimentConfig& cfg) {
    cfg.validate();
    GridSpec spec = pretrain_spec();
    QTable q(spec);
    LearnerConfig learner{cfg.gamma, cfg.alpha, cfg.pretrain_epsilon, cfg.pretrain_algorithm};
    Rng rng(cfg.master_seed);
    std::vector<Trajectory> episodes;
    episodes.reserve(cfg.pretrain_episodes);
    for (int i = 0; i < cfg.pretrain_episodes; ++i) {
        Trajectory traj;
        run_episode(spec, q, learner, nullptr, rng, &traj);
        episodes.push_back(std::move(traj));
    }
    return {std::move(episodes), std::move(q)};
}

// Fixed per-run seed scheme: master_seed * 1000003 + task_index * 1009 + run_id,
// task_index 0-based.
inline std::uint64_t run_seed(std::uint64_t master_seed, int task_index, int run_id) {
    return master_seed * 1000003ull + static_cast<std::uint64_t>(task_index) * 1009ull +
           static_cast<std::uint64_t>(run_id);
}

inline std::vector<EpisodeRecord> run_task(const ExperimentConfig& cfg, int task_index, Algo algo,
                                           Strategy strategy, const ClassifierModel* model) {
    cfg.validate();
    if (task_index < 0 || task_index > 2) throw ConfigError("task index must be 0, 1, or 2");
    if (strategy == Strategy::SafeExploration && model == nullptr)
        throw ConfigError("safe exploration requires a fitted BRS model");

    GridSpec spec = generate_task(cfg.task_seeds[task_index]);
    LearnerConfig learner{cfg.gamma, cfg.alpha, cfg.train_epsilon, algo};
    const ClassifierModel* shield_model = strategy == Strategy::SafeExploration ? model : nullptr;

    std::vector<EpisodeRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.train_runs) * cfg.train_episodes);
    for (int run = 0; run < cfg.train_runs; ++run) {
        QTable q(spec);
        Rng rng(run_seed(cfg.master_seed, task_index, run));
        for (int episode = 0; episode < cfg.train_episodes; ++episode) {
            EpisodeStats stats = run_episode(spec, q, learner, shield_model, rng);
            records.push_back({run, episode, stats.steps, stats.outcome,
                               discounted_return(stats, cfg.gamma), stats.shield_activations});
        }
    }
    return records;
}

inline SummaryRow summarize(const std::vector<EpisodeRecord>& records, const std::string& algorithm,
                            const std::string& task, const std::string& strategy) {
    if (records.empty()) throw UsageError("summarize on empty records");
    struct RunStats {
        int episodes = 0, collisions = 0, goals = 0;
        double reward = 0.0;
    };
    std::vector<RunStats> runs;
    for (const auto& r : records) {
        if (r.run_id >= static_cast<int>(runs.size())) runs.resize(r.run_id + 1);
        auto& rs = runs[r.run_id];
        ++rs.episodes;
        if (r.outcome == Outcome::Collision) ++rs.collisions;
        if (r.outcome == Outcome::Goal) ++rs.goals;
        rs.reward += r.discounted_return;
    }
    SummaryRow row{algorithm, task, strategy, 0.0, 0.0, 0.0};
    for (const auto& rs : runs) {
        row.avg_collision_rate += static_cast<double>(rs.collisions) / rs.episodes;
        row.avg_success_rate += static_cast<double>(rs.goals) / rs.episodes;
        row.sum_of_reward += rs.reward;
    }
    double n = static_cast<double>(runs.size());
    row.avg_collision_rate /= n;
    row.avg_success_rate /= n;
    row.sum_of_reward /= n;
    return row;
}

struct CurvePoint {
    double rolling_return_mean = 0.0;
    double rolling_collision_rate = 0.0;
};

// Trailing-window statistics per episode index, averaged across runs.
inline std::vector<CurvePoint> learning_curves(const std::vector<EpisodeRecord>& records,
                                               int window = 10) {
    if (window < 1) throw UsageError("learning_curves requires window >= 1");
    int episodes = 0, runs = 0;
    for (const auto& r : records) {
        episodes = std::max(episodes, r.episode_idx + 1);
        runs = std::max(runs, r.run_id + 1);
    }
    std::vector<std::vector<const EpisodeRecord*>> by_run(runs);
    for (auto& v : by_run) v.resize(episodes, nullptr);
    for (const auto& r : records) by_run[r.run_id][r.episode_idx] = &r;

    std::vector<CurvePoint> curve(episodes);
    for (int idx = 0; idx < episodes; ++idx) {
        int lo = std::max(0, idx - window + 1);
        for (int run = 0; run < runs; ++run) {
            double ret = 0.0;
            int collisions = 0;
            for (int j = lo; j <= idx; ++j) {
                const EpisodeRecord* r = by_run[run][j];
                if (!r) throw UsageError("learning_curves: missing episode record");
                ret += r->discounted_return;
                if (r->outcome == Outcome::Collision) ++collisions;
            }
            int span = idx - lo + 1;
            curve[idx].rolling_return_mean += ret / span;
            curve[idx].rolling_collision_rate += static_cast<double>(collisions) / span;
        }
        curve[idx].rolling_return_mean /= runs;
        curve[idx].rolling_collision_rate /= runs;
    }
    return curve;
}

// --- text formats ---

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Goal: return "goal";
        case Outcome::Collision: return "collision";
        case Outcome::Timeout: return "timeout";
        default: return "running";
    }
}

inline Outcome outcome_from_name(const std::string& name) {
    if (name == "goal") return Outcome::Goal;
    if (name == "collision") return Outcome::Collision;
    if (name == "timeout") return Outcome::Timeout;
    throw SpecError("unknown outcome '" + name + "'");
}

inline void write_episodes_csv(std::ostream& out, const std::vector<EpisodeRecord>& records) {
    out << "run_id,episode_idx,steps,outcome,discounted_return,shield_activations\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& r : records)
        out << r.run_id << "," << r.episode_idx << "," << r.steps << "," << outcome_name(r.outcome)
            << "," << r.discounted_return << "," << r.shield_activations << "\n";
}

inline std::vector<EpisodeRecord> read_episodes_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) ||
        line != "run_id,episode_idx,steps,outcome,discounted_return,shield_activations")
        throw SpecError("episodes CSV: missing or malformed header");
    std::vector<EpisodeRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        EpisodeRecord r;
        std::string field;
        std::getline(ls, field, ',');
        r.run_id = std::stoi(field);
        std::getline(ls, field, ',');
        r.episode_idx = std::stoi(field);
        std::getline(ls, field, ',');
        r.steps = std::stoi(field);
        std::getline(ls, field, ',');
        r.outcome = outcome_from_name(field);
        std::getline(ls, field, ',');
        r.discounted_return = std::stod(field);
        std::getline(ls, field, ',');
        r.shield_activations = std::stoi(field);
        records.push_back(r);
    }
    return records;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "algorithm,task,strategy,avg_collision_rate,avg_success_rate,sum_of_reward\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& r : rows)
        out << r.algorithm << "," << r.task << "," << r.strategy << "," << r.avg_collision_rate
            << "," << r.avg_success_rate << "," << r.sum_of_reward << "\n";
}

inline void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "episode_idx,rolling_return_mean,rolling_collision_rate\n";
    out << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << i << "," << curve[i].rolling_return_mean << "," << curve[i].rolling_collision_rate
            << "\n";
}

// --- experiment config file (flat key-value, unknown keys rejected) ---

inline const char* algo_name(Algo a) { return a == Algo::QLearning ? "q" : "sarsa"; }

inline Algo algo_from_name(const std::string& name) {
    if (name == "q") return Algo::QLearning;
    if (name == "sarsa") return Algo::Sarsa;
    throw ConfigError("unknown algorithm '" + name + "'");
}

inline const char* strategy_name(Strategy s) {
    return s == Strategy::EpsilonGreedy ? "egreedy" : "safe";
}

inline Strategy strategy_from_name(const std::string& name) {
    if (name == "egreedy") return Strategy::EpsilonGreedy;
    if (name == "safe") return Strategy::SafeExploration;
    throw ConfigError("unknown strategy '" + name + "'");
}

inline const char* classifier_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::LinearSvm: return "svm";
        case ClassifierKind::Knn: return "knn";
        case ClassifierKind::DecisionTree: return "tree";
    }
    return "?";
}

inline ClassifierKind classifier_from_name(const std::string& name) {
    if (name == "svm") return ClassifierKind::LinearSvm;
    if (name == "knn") return ClassifierKind::Knn;
    if (name == "tree") return ClassifierKind::DecisionTree;
    throw ConfigError("unknown classifier '" + name + "'");
}

inline void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    out << std::setprecision(17);
    out << "master_seed " << cfg.master_seed << "\n";
    out << "pretrain_episodes " << cfg.pretrain_episodes << "\n";
    out << "pretrain_epsilon " << cfg.pretrain_epsilon << "\n";
    out << "pretrain_algorithm " << algo_name(cfg.pretrain_algorithm) << "\n";
    out << "task_seed_1 " << cfg.task_seeds[0] << "\n";
    out << "task_seed_2 " << cfg.task_seeds[1] << "\n";
    out << "task_seed_3 " << cfg.task_seeds[2] << "\n";
    out << "train_episodes " << cfg.train_episodes << "\n";
    out << "train_runs " << cfg.train_runs << "\n";
    out << "train_epsilon " << cfg.train_epsilon << "\n";
    out << "gamma " << cfg.gamma << "\n";
    out << "alpha " << cfg.alpha << "\n";
    out << "horizon " << cfg.horizon << "\n";
    out << "classifier " << classifier_name(cfg.classifier) << "\n";
    out << "svm_learning_rate " << cfg.svm.learning_rate << "\n";
    out << "svm_lambda " << cfg.svm.lambda << "\n";
    out << "svm_epochs " << cfg.svm.epochs << "\n";
    out << "svm_class_weighting " << (cfg.svm.class_weighting ? 1 : 0) << "\n";
    out << "svm_seed " << cfg.svm.seed << "\n";
    out << "knn_k " << cfg.knn_k << "\n";
    out << "tree_max_depth " << cfg.tree.max_depth << "\n";
    out << "tree_min_leaf " << cfg.tree.min_leaf << "\n";
    out << "tree_tie_positive " << (cfg.tree.tie_positive ? 1 : 0) << "\n";
    out << "strategy " << strategy_name(cfg.strategy) << "\n";
}

inline ExperimentConfig read_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ls(line);
        std::string key, value;
        ls >> key >> value;
        if (key.empty()) continue;
        if (value.empty()) throw ConfigError("config key '" + key + "' has no value");
        if (key == "master_seed") cfg.master_seed = std::stoull(value);
        else if (key == "pretrain_episodes") cfg.pretrain_episodes = std::stoi(value);
        else if (key == "pretrain_epsilon") cfg.pretrain_epsilon = std::stod(value);
        else if (key == "pretrain_algorithm") cfg.pretrain_algorithm = algo_from_name(value);
        else if (key == "task_seed_1") cfg.task_seeds[0] = std::stoull(value);
        else if (key == "task_seed_2") cfg.task_seeds[1] = std::stoull(value);
        else if (key == "task_seed_3") cfg.task_seeds[2] = std::stoull(value);
        else if (key == "train_episodes") cfg.train_episodes = std::stoi(value);
        else if (key == "train_runs") cfg.train_runs = std::stoi(value);
        else if (key == "train_epsilon") cfg.train_epsilon = std::stod(value);
        else if (key == "gamma") cfg.gamma = std::stod(value);
        else if (key == "alpha") cfg.alpha = std::stod(value);
        else if (key == "horizon") cfg.horizon = std::stoi(value);
        else if (key == "classifier") cfg.classifier = classifier_from_name(value);
        else if (key == "svm_learning_rate") cfg.svm.learning_rate = std::stod(value);
        else if (key == "svm_lambda") cfg.svm.lambda = std::stod(value);
        else if (key == "svm_epochs") cfg.svm.epochs = std::stoi(value);
        else if (key == "svm_class_weighting") cfg.svm.class_weighting = std::stoi(value) != 0;
        else if (key == "svm_seed") cfg.svm.seed = std::stoull(value);
        else if (key == "knn_k") cfg.knn_k = std::stoi(value);
        else if (key == "tree_max_depth") cfg.tree.max_depth = std::stoi(value);
        else if (key == "tree_min_leaf") cfg.tree.min_leaf = std::stoi(value);
        else if (key == "tree_tie_positive") cfg.tree.tie_positive = std::stoi(value) != 0;
        else if (key == "strategy") cfg.strategy = strategy_from_name(value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

}  // namespace safegrid
