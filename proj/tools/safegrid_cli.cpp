#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "safegrid/harness.hpp"

namespace fs = std::filesystem;
using namespace safegrid;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return read_config(in);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
    return out;
}

void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& episodes) {
    out << "episode_idx,step_idx,agent_x,agent_y,heading,obstacle_row,obstacle_dir,outcome\n";
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        const auto& traj = episodes[e];
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            const auto& s = traj.states[i];
            out << e << "," << i << "," << s.agent_x << "," << s.agent_y << ","
                << heading_key(s.heading) << "," << s.obstacle_row << ","
                << (s.obstacle_dir == VertDir::Up ? "up" : "down") << ","
                << outcome_name(traj.outcome) << "\n";
        }
    }
}

int cmd_pretrain(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    fs::create_directories(out_dir);
    auto [episodes, q] = run_pretraining(cfg);
    GridSpec spec = pretrain_spec();

    auto spec_out = open_out(fs::path(out_dir) / "pretrain_spec.txt");
    write_spec(spec_out, spec);
    auto traj_out = open_out(fs::path(out_dir) / "trajectories.csv");
    write_trajectories_csv(traj_out, episodes);
    auto data_out = open_out(fs::path(out_dir) / "dataset.csv");
    write_dataset(data_out, build_dataset(episodes, cfg.horizon, spec));
    auto q_out = open_out(fs::path(out_dir) / "qtable.csv");
    q.dump(q_out);
    std::cout << "pretrain: " << episodes.size() << " episodes -> " << out_dir << "\n";
    return 0;
}

int cmd_fit(const std::string& config_path, const std::string& data_path,
            const std::string& model_kind, const std::string& model_path,
            const std::string& report_path) {
    ExperimentConfig cfg = load_config(config_path);
    std::ifstream in(data_path);
    if (!in) throw ConfigError("cannot open dataset '" + data_path + "'");
    auto data = read_dataset(in);
    auto [train, test] = stratified_split(data, 0.2, cfg.master_seed);

    ClassifierKind kind = classifier_from_name(model_kind);
    ClassifierModel model;
    switch (kind) {
        case ClassifierKind::LinearSvm: model = fit_svm(train, cfg.svm); break;
        case ClassifierKind::Knn: model = fit_knn(train, cfg.knn_k); break;
        case ClassifierKind::DecisionTree: model = fit_tree(train, cfg.tree); break;
    }

    auto model_out = open_out(model_path);
    write_model(model_out, model);

    if (!report_path.empty()) {
        EvalReport report = evaluate(model, test);
        auto rep_out = open_out(report_path);
        rep_out << "model,accuracy,precision,recall,f1,tp,fp,tn,fn\n";
        rep_out << std::fixed << std::setprecision(6);
        rep_out << model_kind << "," << report.accuracy << "," << report.precision << ","
                << report.recall << "," << report.f1 << "," << report.tp << "," << report.fp << ","
                << report.tn << "," << report.fn << "\n";
        std::cout << "fit " << model_kind << ": held-out accuracy " << report.accuracy << ", f1 "
                  << report.f1 << "\n";
    }
    return 0;
}

int cmd_run(const std::string& config_path, int task, const std::string& algo_str,
            const std::string& strategy_str, const std::string& model_path,
            const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path);
    Algo algo = algo_from_name(algo_str);
    Strategy strategy = strategy_from_name(strategy_str);

    std::optional<ClassifierModel> model;
    if (strategy == Strategy::SafeExploration) {
        if (model_path.empty())
            throw ConfigError("run --strategy safe requires --model with a fitted BRS model");
        std::ifstream min(model_path);
        if (!min) throw ConfigError("cannot open model file '" + model_path + "'");
        model = read_model(min);
    }

    auto records = run_task(cfg, task - 1, algo, strategy, model ? &*model : nullptr);
    auto out = open_out(out_path);
    write_episodes_csv(out, records);
    auto row = summarize(records, algo_str, "task" + std::to_string(task), strategy_str);
    std::cout << "run " << algo_str << " task" << task << " " << strategy_str << ": collision "
              << row.avg_collision_rate << ", success " << row.avg_success_rate << ", reward "
              << row.sum_of_reward << "\n";
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_path) {
    std::vector<SummaryRow> rows;
    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        auto name = entry.path().filename().string();
        if (name.rfind("episodes_", 0) == 0 && entry.path().extension() == ".csv")
            inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw ConfigError("no episodes_*.csv files found in '" + in_dir + "'");

    fs::path out_dir = fs::path(out_path).parent_path();
    for (const auto& path : inputs) {
        // expected name: episodes_<algo>_task<N>_<strategy>.csv
        auto stem = path.stem().string();
        std::vector<std::string> parts;
        std::istringstream ss(stem);
        std::string part;
        while (std::getline(ss, part, '_')) parts.push_back(part);
        if (parts.size() != 4)
            throw ConfigError("cannot parse episodes file name '" + stem +
                              "' (expected episodes_<algo>_task<N>_<strategy>.csv)");
        std::ifstream in(path);
        auto records = read_episodes_csv(in);
        rows.push_back(summarize(records, parts[1], parts[2], parts[3]));
        auto curves = learning_curves(records);
        auto curve_out =
            open_out(out_dir / ("curves_" + parts[1] + "_" + parts[2] + "_" + parts[3] + ".csv"));
        write_curves_csv(curve_out, curves);
    }
    auto out = open_out(out_path);
    write_summary_csv(out, rows);
    std::cout << "report: " << rows.size() << " rows -> " << out_path << "\n";
    return 0;
}

// Label-soundness audit: every BRS label produced from rollout trajectories
// must name a state in the brute-force reachable set.
int cmd_oracle_check(int size, int horizon, int episodes, std::uint64_t seed) {
    GridSpec spec;
    spec.width = size;
    spec.height = size;
    spec.goal = {size - 1, size / 2};
    spec.obstacle_column = size / 2;
    spec.obstacle_init_row = 1;
    spec.obstacle_init_dir = VertDir::Down;
    spec.agent_start = {0, size / 2};
    spec.agent_start_heading = Heading::East;
    spec.max_steps = default_max_steps(size, size);
    spec.validate();

    auto oracle = brute_force_brs(spec, horizon);

    QTable q(spec);
    LearnerConfig learner{0.99, 0.5, 0.6, Algo::QLearning};
    Rng rng(seed);
    long labeled = 0, violations = 0;
    for (int e = 0; e < episodes; ++e) {
        Trajectory traj;
        run_episode(spec, q, learner, nullptr, rng, &traj);
        auto labels = brs_labels(value_trace(traj, horizon, spec));
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!labels[i]) continue;
            ++labeled;
            if (!oracle.count(traj.states[i])) ++violations;
        }
    }
    std::cout << "oracle-check: grid " << size << "x" << size << ", horizon " << horizon << ", "
              << episodes << " episodes, " << labeled << " BRS labels, " << violations
              << " oracle violations, oracle size " << oracle.size() << "\n";
    if (violations > 0) {
        std::cerr << "oracle-check failed: trajectory labels are not sound\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safe-exploration gridworld experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path, model_kind = "svm", model_path, report_path,
                              out_path, algo = "q", strategy = "egreedy", in_dir;
    int task = 1, size = 6, horizon = 2, episodes = 10000;
    std::uint64_t seed = 0;

    auto* pretrain = app.add_subcommand("pretrain", "Run pre-training and emit the labeled dataset");
    pretrain->add_option("--config", config_path, "experiment config file");
    pretrain->add_option("--out", out_dir, "output directory")->required();

    auto* fit = app.add_subcommand("fit", "Fit a BRS classifier on a dataset CSV");
    fit->add_option("--config", config_path, "experiment config file");
    fit->add_option("--data", data_path, "dataset CSV")->required();
    fit->add_option("--model", model_kind, "classifier kind: svm|knn|tree");
    fit->add_option("--out", model_path, "model output file")->required();
    fit->add_option("--report", report_path, "evaluation report CSV");

    auto* run = app.add_subcommand("run", "Train on one generated task");
    run->add_option("--config", config_path, "experiment config file");
    run->add_option("--task", task, "task number 1..3")->check(CLI::Range(1, 3));
    run->add_option("--algo", algo, "q|sarsa");
    run->add_option("--strategy", strategy, "egreedy|safe");
    run->add_option("--model", model_path, "fitted BRS model (required for safe)");
    run->add_option("--out", out_path, "episodes CSV output")->required();

    auto* report = app.add_subcommand("report", "Summarize episodes CSVs into summary and curves");
    report->add_option("--in", in_dir, "directory of episodes_*.csv files")->required();
    report->add_option("--out", out_path, "summary CSV output")->required();

    auto* oracle = app.add_subcommand("oracle-check", "Audit BRS labels against the brute-force oracle");
    oracle->add_option("--size", size, "grid side length");
    oracle->add_option("--horizon", horizon, "BRS horizon t");
    oracle->add_option("--episodes", episodes, "rollout episodes");
    oracle->add_option("--seed", seed, "rollout seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain->parsed()) return cmd_pretrain(config_path, out_dir);
        if (fit->parsed()) return cmd_fit(config_path, data_path, model_kind, model_path, report_path);
        if (run->parsed()) return cmd_run(config_path, task, algo, strategy, model_path, out_path);
        if (report->parsed()) return cmd_report(in_dir, out_path);
        if (oracle->parsed()) return cmd_oracle_check(size, horizon, episodes, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
