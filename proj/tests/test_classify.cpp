#include <gtest/gtest.h>

#include <sstream>

#include "safegrid/classify.hpp"
#include "safegrid/harness.hpp"

using namespace safegrid;

namespace {

GridSpec spec10() {
    GridSpec spec;
    spec.width = 10;
    spec.height = 10;
    spec.goal = {8, 5};
    spec.obstacle_column = 4;
    spec.obstacle_init_row = 2;
    spec.obstacle_init_dir = VertDir::Down;
    spec.agent_start = {0, 5};
    spec.agent_start_heading = Heading::East;
    spec.max_steps = 80;
    return spec;
}

LabeledSample sample(double distance, bool label, Heading h = Heading::East,
                     double obs_dir = 1.0) {
    LabeledSample s;
    s.features[static_cast<int>(h)] = 1.0;
    s.features[4] = obs_dir;
    s.features[kDistanceFeature] = distance;
    s.label = label;
    return s;
}

// Toy separable set: close-in positives, far negatives.
std::vector<LabeledSample> separable_data() {
    std::vector<LabeledSample> data;
    for (int i = 0; i < 20; ++i) {
        data.push_back(sample(0.5 + 0.05 * i, true));
        data.push_back(sample(6.0 + 0.05 * i, false));
    }
    return data;
}

}  // namespace

TEST(ExtractFeatures, MapsHeadingDirectionAndDistance) {
    auto spec = spec10();
    TabularState s{1, 1, 5, VertDir::Up, Heading::East};
    FeatureVector f = extract_features(s, spec);
    EXPECT_EQ(f, (FeatureVector{0, 1, 0, 0, 1.0, 5.0}));
}

TEST(ExtractFeatures, CoincidentCells) {
    auto spec = spec10();
    TabularState s{4, 3, 3, VertDir::Down, Heading::North};
    FeatureVector f = extract_features(s, spec);
    EXPECT_EQ(f, (FeatureVector{1, 0, 0, 0, -1.0, 0.0}));
}

TEST(ExtractFeatures, ProjectsAwayPosition) {
    auto spec = spec10();
    TabularState a{4, 8, 5, VertDir::Down, Heading::South};  // distance 3, same column
    TabularState b{7, 5, 5, VertDir::Down, Heading::South};  // distance 3, same row
    EXPECT_EQ(extract_features(a, spec), extract_features(b, spec));
}

TEST(BuildDataset, OneSamplePerState) {
    auto spec = spec10();
    Trajectory traj;
    for (int i = 0; i < 7; ++i)
        traj.states.push_back({i % spec.width, 0, 9, VertDir::Down, Heading::East});
    traj.outcome = Outcome::Timeout;
    auto data = build_dataset({traj}, 2, spec);
    EXPECT_EQ(data.size(), 7u);
}

TEST(BuildDataset, NoPositivesWithoutContact) {
    auto spec = spec10();
    Trajectory traj;
    traj.states.push_back({0, 0, 9, VertDir::Down, Heading::East});
    traj.states.push_back({1, 0, 8, VertDir::Up, Heading::East});
    traj.outcome = Outcome::Goal;
    auto data = build_dataset({traj, traj}, 2, spec);
    for (const auto& s : data) EXPECT_FALSE(s.label);
}

TEST(FitSvm, SeparatesSeparableData) {
    auto model = fit_svm(separable_data(), SvmConfig{});
    auto report = evaluate(model, separable_data());
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
}

TEST(FitSvm, HugeRegularizationShrinksWeights) {
    SvmConfig cfg;
    cfg.lambda = 1e6;
    cfg.learning_rate = 1e-7;
    cfg.epochs = 200;
    auto model = fit_svm(separable_data(), cfg);
    double norm = 0.0;
    for (double w : model.weights) norm += w * w;
    EXPECT_LT(std::sqrt(norm), 0.01);
}

TEST(FitSvm, RejectsSingleClassData) {
    std::vector<LabeledSample> data{sample(1.0, true), sample(2.0, true)};
    EXPECT_THROW(fit_svm(data, SvmConfig{}), FitError);
}

TEST(FitSvm, DeterministicGivenSeed) {
    auto a = fit_svm(separable_data(), SvmConfig{});
    auto b = fit_svm(separable_data(), SvmConfig{});
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
}

// Fitting on affinely rescaled distances gives identical predictions on
// correspondingly rescaled queries.
TEST(FitSvm, StandardizationAbsorbsAffineRescaling) {
    auto data = separable_data();
    auto rescaled = data;
    for (auto& s : rescaled)
        s.features[kDistanceFeature] = 10.0 * s.features[kDistanceFeature] + 3.0;
    auto m1 = fit_svm(data, SvmConfig{});
    auto m2 = fit_svm(rescaled, SvmConfig{});
    for (double d : {0.0, 0.7, 2.0, 4.9, 8.0}) {
        auto q1 = sample(d, false).features;
        auto q2 = sample(10.0 * d + 3.0, false).features;
        EXPECT_EQ(predict(m1, q1), predict(m2, q2)) << "distance " << d;
    }
}

TEST(FitKnn, NearestNeighborOfTrainingPointIsItself) {
    auto data = separable_data();
    auto model = fit_knn(data, 1);
    auto report = evaluate(model, data);
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
}

TEST(FitKnn, RejectsEvenK) {
    EXPECT_THROW(fit_knn(separable_data(), 2), FitError);
    EXPECT_THROW(fit_knn({}, 1), FitError);
}

TEST(FitTree, DepthZeroIsMajorityPredictor) {
    std::vector<LabeledSample> data;
    for (int i = 0; i < 10; ++i) data.push_back(sample(i, false));
    for (int i = 0; i < 3; ++i) data.push_back(sample(0.1 * i, true));
    TreeConfig cfg;
    cfg.max_depth = 0;
    auto model = fit_tree(data, cfg);
    ASSERT_EQ(model.nodes.size(), 1u);
    for (const auto& s : data) EXPECT_FALSE(predict(model, s.features));
}

TEST(FitTree, PureLabelsGiveSingleLeaf) {
    std::vector<LabeledSample> data;
    for (int i = 0; i < 10; ++i) data.push_back(sample(i, true));
    auto model = fit_tree(data, TreeConfig{});
    EXPECT_EQ(model.nodes.size(), 1u);
    EXPECT_TRUE(predict(model, sample(99.0, false).features));
}

TEST(FitTree, SplitsSeparableData) {
    TreeConfig cfg;
    cfg.min_leaf = 1;
    auto model = fit_tree(separable_data(), cfg);
    auto report = evaluate(model, separable_data());
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
}

TEST(Predict, ConstantSvmStubs) {
    ClassifierModel always_false;
    always_false.bias = -1.0;
    ClassifierModel always_true;
    always_true.bias = 1.0;
    for (double d : {0.0, 1.0, 100.0}) {
        EXPECT_FALSE(predict(always_false, sample(d, false).features));
        EXPECT_TRUE(predict(always_true, sample(d, false).features));
    }
}

TEST(Evaluate, PerfectPredictor) {
    ClassifierModel model = fit_knn(separable_data(), 1);
    auto report = evaluate(model, separable_data());
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(report.f1, 1.0);
}

TEST(Evaluate, ConfusionArithmetic) {
    // TP=3 FP=1 FN=1 TN=5 via an always-by-threshold stub on crafted data
    ClassifierModel stub;
    stub.weights[kDistanceFeature] = -1.0;
    stub.bias = 3.0;
    stub.dist_mean = 0.0;
    stub.dist_scale = 1.0;  // predict true iff distance < 3
    std::vector<LabeledSample> data;
    for (int i = 0; i < 3; ++i) data.push_back(sample(1.0, true));    // TP
    data.push_back(sample(1.5, false));                               // FP
    data.push_back(sample(5.0, true));                                // FN
    for (int i = 0; i < 5; ++i) data.push_back(sample(6.0, false));   // TN
    auto r = evaluate(stub, data);
    EXPECT_EQ(r.tp, 3);
    EXPECT_EQ(r.fp, 1);
    EXPECT_EQ(r.fn, 1);
    EXPECT_EQ(r.tn, 5);
    EXPECT_DOUBLE_EQ(r.precision, 0.75);
    EXPECT_DOUBLE_EQ(r.recall, 0.75);
    EXPECT_DOUBLE_EQ(r.f1, 0.75);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
}

TEST(Evaluate, AllNegativePredictorScoresZeroRecall) {
    ClassifierModel stub;
    stub.bias = -1.0;
    auto r = evaluate(stub, separable_data());
    EXPECT_DOUBLE_EQ(r.recall, 0.0);
    EXPECT_DOUBLE_EQ(r.f1, 0.0);
}

TEST(DatasetIo, RoundTrips) {
    auto data = separable_data();
    std::ostringstream out;
    write_dataset(out, data);
    std::istringstream in(out.str());
    auto back = read_dataset(in);
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_EQ(back[i].features, data[i].features);
        EXPECT_EQ(back[i].label, data[i].label);
    }
}

TEST(ModelIo, RoundTripsBitExactly) {
    auto data = separable_data();
    for (auto model : {fit_svm(data, SvmConfig{}), fit_knn(data, 3), fit_tree(data, TreeConfig{})}) {
        std::ostringstream out;
        write_model(out, model);
        std::istringstream in(out.str());
        auto back = read_model(in);
        std::ostringstream out2;
        write_model(out2, back);
        EXPECT_EQ(out.str(), out2.str());
        for (const auto& s : data) EXPECT_EQ(predict(back, s.features), predict(model, s.features));
    }
}

TEST(StratifiedSplit, PreservesClassBalance) {
    std::vector<LabeledSample> data;
    for (int i = 0; i < 80; ++i) data.push_back(sample(5.0 + i * 0.01, false));
    for (int i = 0; i < 20; ++i) data.push_back(sample(0.5 + i * 0.01, true));
    auto [train, test] = stratified_split(data, 0.2, 9);
    EXPECT_EQ(train.size(), 80u);
    EXPECT_EQ(test.size(), 20u);
    auto positives = [](const std::vector<LabeledSample>& v) {
        std::size_t n = 0;
        for (const auto& s : v)
            if (s.label) ++n;
        return n;
    };
    EXPECT_EQ(positives(train), 16u);
    EXPECT_EQ(positives(test), 4u);
}
