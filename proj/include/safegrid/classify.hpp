#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "safegrid/gridworld.hpp"
#include "safegrid/reachability.hpp"
#include "safegrid/tabular.hpp"

namespace safegrid {

// Feature layout: heading one-hot (N, E, S, W), obstacle direction
// (Up = +1, Down = -1), signed distance.
using FeatureVector = std::array<double, 6>;
inline constexpr int kDistanceFeature = 5;

struct LabeledSample {
    FeatureVector features{};
    bool label = false;  // true = BRS
};

inline FeatureVector extract_features(const TabularState& s, const GridSpec& spec) {
    FeatureVector f{};
    f[static_cast<int>(s.heading)] = 1.0;
    f[4] = s.obstacle_dir == VertDir::Up ? 1.0 : -1.0;
    f[kDistanceFeature] = signed_distance(s, spec);
    return f;
}

inline std::vector<LabeledSample> build_dataset(const std::vector<Trajectory>& episodes,
                                                int horizon, const GridSpec& spec) {
    std::vector<LabeledSample> data;
    for (const auto& traj : episodes) {
        auto values = value_trace(traj, horizon, spec);
        auto labels = brs_labels(values);
        for (std::size_t i = 0; i < traj.states.size(); ++i)
            data.push_back({extract_features(traj.states[i], spec), labels[i]});
    }
    return data;
}

enum class ClassifierKind : int { LinearSvm = 0, Knn = 1, DecisionTree = 2 };

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TreeNode {
    bool leaf = true;
    bool label = false;   // leaf only
    int feature = -1;     // split only
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::LinearSvm;
    // distance-feature standardization, shared by SVM and KNN
    double dist_mean = 0.0;
    double dist_scale = 1.0;
    // linear SVM
    FeatureVector weights{};
    double bias = 0.0;
    // KNN: standardized training set
    int k = 5;
    std::vector<LabeledSample> samples;
    // decision tree
    std::vector<TreeNode> nodes;
};

struct SvmConfig {
    double learning_rate = 0.01;
    double lambda = 0.01;
    int epochs = 50;
    bool class_weighting = true;
    std::uint64_t seed = 0;
};

struct TreeConfig {
    int max_depth = 8;
    int min_leaf = 5;
    bool tie_positive = false;
};

namespace detail {

inline void fit_standardization(const std::vector<LabeledSample>& data, ClassifierModel& m) {
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& s : data) sum += s.features[kDistanceFeature];
    m.dist_mean = sum / static_cast<double>(data.size());
    for (const auto& s : data) {
        double d = s.features[kDistanceFeature] - m.dist_mean;
        sum_sq += d * d;
    }
    double variance = sum_sq / static_cast<double>(data.size());
    m.dist_scale = variance > 0.0 ? std::sqrt(variance) : 1.0;
}

inline FeatureVector standardize(const ClassifierModel& m, FeatureVector f) {
    f[kDistanceFeature] = (f[kDistanceFeature] - m.dist_mean) / m.dist_scale;
    return f;
}

}  // namespace detail

// Class-weighted soft-margin linear SVM trained by stochastic subgradient
// descent on the hinge loss with L2 penalty. Deterministic given the seed.
inline ClassifierModel fit_svm(const std::vector<LabeledSample>& data, const SvmConfig& cfg) {
    std::size_t n_pos = 0;
    for (const auto& s : data)
        if (s.label) ++n_pos;
    std::size_t n_neg = data.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw FitError("fit_svm requires samples of both classes");

    ClassifierModel m;
    m.kind = ClassifierKind::LinearSvm;
    detail::fit_standardization(data, m);

    double n = static_cast<double>(data.size());
    double w_pos = cfg.class_weighting ? n / (2.0 * static_cast<double>(n_pos)) : 1.0;
    double w_neg = cfg.class_weighting ? n / (2.0 * static_cast<double>(n_neg)) : 1.0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed);

    // Averaged SGD: with inverse-frequency class weights the per-sample steps
    // are large and the last iterate oscillates; the iterate average converges
    // to the regularized optimum.
    FeatureVector avg_w{};
    double avg_b = 0.0;
    double count = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            const auto& s = data[idx];
            FeatureVector x = detail::standardize(m, s.features);
            double y = s.label ? 1.0 : -1.0;
            double cw = s.label ? w_pos : w_neg;
            double margin = y * (std::inner_product(x.begin(), x.end(), m.weights.begin(), 0.0) + m.bias);
            for (int j = 0; j < 6; ++j) {
                double grad = cfg.lambda * m.weights[j];
                if (margin < 1.0) grad -= cw * y * x[j];
                m.weights[j] -= cfg.learning_rate * grad;
            }
            if (margin < 1.0) m.bias += cfg.learning_rate * cw * y;
            for (int j = 0; j < 6; ++j) avg_w[j] += m.weights[j];
            avg_b += m.bias;
            count += 1.0;
        }
    }
    for (int j = 0; j < 6; ++j) m.weights[j] = avg_w[j] / count;
    m.bias = avg_b / count;
    return m;
}

inline ClassifierModel fit_knn(const std::vector<LabeledSample>& data, int k) {
    if (data.empty()) throw FitError("fit_knn on empty data");
    if (k < 1 || k % 2 == 0) throw FitError("fit_knn requires odd k >= 1");
    ClassifierModel m;
    m.kind = ClassifierKind::Knn;
    m.k = k;
    detail::fit_standardization(data, m);
    m.samples.reserve(data.size());
    for (const auto& s : data) m.samples.push_back({detail::standardize(m, s.features), s.label});
    return m;
}

namespace detail {

inline bool majority_label(const std::vector<LabeledSample>& data,
                           const std::vector<std::size_t>& idx, bool tie_positive) {
    std::size_t pos = 0;
    for (std::size_t i : idx)
        if (data[i].label) ++pos;
    std::size_t neg = idx.size() - pos;
    if (pos == neg) return tie_positive;
    return pos > neg;
}

inline double gini(std::size_t pos, std::size_t total) {
    if (total == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

inline int grow_tree(const std::vector<LabeledSample>& data, std::vector<std::size_t> idx,
                     int depth, const TreeConfig& cfg, std::vector<TreeNode>& nodes) {
    std::size_t pos = 0;
    for (std::size_t i : idx)
        if (data[i].label) ++pos;

    int node_id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[node_id].label = majority_label(data, idx, cfg.tie_positive);
    if (depth >= cfg.max_depth || pos == 0 || pos == idx.size() ||
        idx.size() < 2 * static_cast<std::size_t>(cfg.min_leaf))
        return node_id;

    double parent_impurity = gini(pos, idx.size());
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    for (int f = 0; f < 6; ++f) {
        std::vector<std::pair<double, bool>> column;
        column.reserve(idx.size());
        for (std::size_t i : idx) column.push_back({data[i].features[f], data[i].label});
        std::sort(column.begin(), column.end());
        std::size_t left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            ++left_n;
            if (column[i].second) ++left_pos;
            if (column[i].first == column[i + 1].first) continue;
            if (left_n < static_cast<std::size_t>(cfg.min_leaf) ||
                idx.size() - left_n < static_cast<std::size_t>(cfg.min_leaf))
                continue;
            double threshold = 0.5 * (column[i].first + column[i + 1].first);
            std::size_t right_n = idx.size() - left_n;
            std::size_t right_pos = pos - left_pos;
            double weighted = (static_cast<double>(left_n) * gini(left_pos, left_n) +
                               static_cast<double>(right_n) * gini(right_pos, right_n)) /
                              static_cast<double>(idx.size());
            double gain = parent_impurity - weighted;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = f;
                best_threshold = threshold;
            }
        }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        if (data[i].features[best_feature] <= best_threshold)
            left_idx.push_back(i);
        else
            right_idx.push_back(i);
    }
    nodes[node_id].leaf = false;
    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    int left = grow_tree(data, std::move(left_idx), depth + 1, cfg, nodes);
    int right = grow_tree(data, std::move(right_idx), depth + 1, cfg, nodes);
    nodes[node_id].left = left;
    nodes[node_id].right = right;
    return node_id;
}

}  // namespace detail

inline ClassifierModel fit_tree(const std::vector<LabeledSample>& data, const TreeConfig& cfg) {
    if (data.empty()) throw FitError("fit_tree on empty data");
    ClassifierModel m;
    m.kind = ClassifierKind::DecisionTree;
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    detail::grow_tree(data, std::move(idx), 0, cfg, m.nodes);
    return m;
}

inline bool predict(const ClassifierModel& m, const FeatureVector& f) {
    switch (m.kind) {
        case ClassifierKind::LinearSvm: {
            FeatureVector x = detail::standardize(m, f);
            double score =
                std::inner_product(x.begin(), x.end(), m.weights.begin(), 0.0) + m.bias;
            return score > 0.0;
        }
        case ClassifierKind::Knn: {
            FeatureVector x = detail::standardize(m, f);
            std::vector<std::pair<double, std::size_t>> dist(m.samples.size());
            for (std::size_t i = 0; i < m.samples.size(); ++i) {
                double d = 0.0;
                for (int j = 0; j < 6; ++j) {
                    double delta = x[j] - m.samples[i].features[j];
                    d += delta * delta;
                }
                dist[i] = {d, i};
            }
            std::size_t k = std::min<std::size_t>(m.k, dist.size());
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            std::size_t pos = 0;
            for (std::size_t i = 0; i < k; ++i)
                if (m.samples[dist[i].second].label) ++pos;
            return 2 * pos > k;
        }
        case ClassifierKind::DecisionTree: {
            int node = 0;
            while (!m.nodes[node].leaf)
                node = f[m.nodes[node].feature] <= m.nodes[node].threshold ? m.nodes[node].left
                                                                           : m.nodes[node].right;
            return m.nodes[node].label;
        }
    }
    return false;
}

struct EvalReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

inline EvalReport evaluate(const ClassifierModel& m, const std::vector<LabeledSample>& held_out) {
    if (held_out.empty()) throw UsageError("evaluate on empty data");
    EvalReport r;
    for (const auto& s : held_out) {
        bool pred = predict(m, s.features);
        if (pred && s.label) ++r.tp;
        else if (pred && !s.label) ++r.fp;
        else if (!pred && !s.label) ++r.tn;
        else ++r.fn;
    }
    double total = static_cast<double>(held_out.size());
    r.accuracy = static_cast<double>(r.tp + r.tn) / total;
    r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                                        : 0.0;
    return r;
}

// Stratified split: each class shuffled separately, test_fraction of each
// held out. Deterministic given the seed.
inline std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> stratified_split(
    const std::vector<LabeledSample>& data, double test_fraction, std::uint64_t seed) {
    std::vector<LabeledSample> train, test;
    Rng rng(seed);
    for (bool cls : {false, true}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data[i].label == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? test : train).push_back(data[idx[i]]);
    }
    return {std::move(train), std::move(test)};
}

// --- dataset CSV and model file I/O ---

inline constexpr const char* kDatasetHeader = "h_n,h_e,h_s,h_w,obs_dir,distance,label";

inline void write_dataset(std::ostream& out, const std::vector<LabeledSample>& data) {
    out << kDatasetHeader << "\n";
    out << std::setprecision(17);
    for (const auto& s : data) {
        for (int j = 0; j < 6; ++j) out << s.features[j] << ",";
        out << (s.label ? 1 : 0) << "\n";
    }
}

inline std::vector<LabeledSample> read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader)
        throw SpecError("dataset CSV: missing or malformed header");
    std::vector<LabeledSample> data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        LabeledSample s;
        std::string field;
        for (int j = 0; j < 6; ++j) {
            if (!std::getline(ls, field, ',')) throw SpecError("dataset CSV: short row");
            s.features[j] = std::stod(field);
        }
        if (!std::getline(ls, field, ',')) throw SpecError("dataset CSV: short row");
        s.label = std::stoi(field) != 0;
        data.push_back(s);
    }
    return data;
}

inline void write_model(std::ostream& out, const ClassifierModel& m) {
    out << std::setprecision(17);
    switch (m.kind) {
        case ClassifierKind::LinearSvm: {
            out << "kind svm\n";
            out << "dist_mean " << m.dist_mean << "\n";
            out << "dist_scale " << m.dist_scale << "\n";
            out << "weights";
            for (double w : m.weights) out << " " << w;
            out << "\n";
            out << "bias " << m.bias << "\n";
            break;
        }
        case ClassifierKind::Knn: {
            out << "kind knn\n";
            out << "dist_mean " << m.dist_mean << "\n";
            out << "dist_scale " << m.dist_scale << "\n";
            out << "k " << m.k << "\n";
            out << "samples " << m.samples.size() << "\n";
            for (const auto& s : m.samples) {
                out << "sample";
                for (double v : s.features) out << " " << v;
                out << " " << (s.label ? 1 : 0) << "\n";
            }
            break;
        }
        case ClassifierKind::DecisionTree: {
            out << "kind tree\n";
            out << "nodes " << m.nodes.size() << "\n";
            for (const auto& n : m.nodes) {
                if (n.leaf)
                    out << "leaf " << (n.label ? 1 : 0) << "\n";
                else
                    out << "split " << n.feature << " " << n.threshold << " " << n.left << " "
                        << n.right << "\n";
            }
            break;
        }
    }
}

inline ClassifierModel read_model(std::istream& in) {
    ClassifierModel m;
    std::string key;
    if (!(in >> key) || key != "kind") throw SpecError("model file: missing kind");
    std::string kind;
    in >> kind;
    if (kind == "svm") {
        m.kind = ClassifierKind::LinearSvm;
        std::string k;
        in >> k >> m.dist_mean;
        in >> k >> m.dist_scale;
        in >> k;
        for (double& w : m.weights) in >> w;
        in >> k >> m.bias;
    } else if (kind == "knn") {
        m.kind = ClassifierKind::Knn;
        std::string k;
        std::size_t count = 0;
        in >> k >> m.dist_mean;
        in >> k >> m.dist_scale;
        in >> k >> m.k;
        in >> k >> count;
        m.samples.resize(count);
        for (auto& s : m.samples) {
            int label = 0;
            in >> k;
            for (double& v : s.features) in >> v;
            in >> label;
            s.label = label != 0;
        }
    } else if (kind == "tree") {
        m.kind = ClassifierKind::DecisionTree;
        std::string k;
        std::size_t count = 0;
        in >> k >> count;
        m.nodes.resize(count);
        for (auto& n : m.nodes) {
            in >> k;
            if (k == "leaf") {
                int label = 0;
                in >> label;
                n = TreeNode{true, label != 0, -1, 0.0, -1, -1};
            } else if (k == "split") {
                n.leaf = false;
                in >> n.feature >> n.threshold >> n.left >> n.right;
            } else {
                throw SpecError("model file: unknown node tag '" + k + "'");
            }
        }
    } else {
        throw SpecError("model file: unknown kind '" + kind + "'");
    }
    if (!in) throw SpecError("model file: truncated");
    return m;
}

}  // namespace safegrid
