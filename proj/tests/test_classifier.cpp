#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "mpsts/classifier.hpp"
#include "mpsts/trainer.hpp"
#include "oracles.hpp"

using namespace mpsts;

namespace {

ModelBundle raw_bundle(MPS m) {
    Preprocessor p;
    p.lo = -1.0;
    p.hi = 1.0;
    TrainConfig c;
    c.d = m.phys_dim();
    return ModelBundle(std::move(m), p, c);
}

Dataset two_class_nts(Index per_class, std::uint64_t seed) {
    NTSParams p;
    p.tau_choices = {20.0, 30.0};
    p.m_choices = {0.0};
    p.T = 40;
    p.N = 2 * per_class;
    p.seed = seed;
    return generate_nts(p);
}

}  // namespace

TEST_CASE("scores are normalized Born densities") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ModelBundle b = raw_bundle(oracle::random_raw(4, 3, 3, 3, seed));
        const std::vector<double> x{0.1, -0.5, 0.9, 0.3};
        const Prediction pr = predict(b, Eigen::Map<const Eigen::VectorXd>(x.data(), 4));
        CHECK(std::abs(pr.scores.sum() - 1.0) <= 1e-12);
        const Eigen::VectorXd f = oracle::dense_overlap(b.mps, x);
        const Eigen::VectorXd ref = f.array().square().matrix() / f.squaredNorm();
        CHECK((pr.scores - ref).cwiseAbs().maxCoeff() <= 1e-10);
        Index best = 0;
        ref.maxCoeff(&best);
        CHECK(pr.label == best + 1);
    }
}

TEST_CASE("ties go to the lowest label") {
    Eigen::VectorXd s(3);
    s << 0.25, 0.375, 0.375;
    CHECK(argmax_lowest(s) == 1);
    s << 0.5, 0.5, 0.0;
    CHECK(argmax_lowest(s) == 0);

    // Two identical label slices give an exact tie.
    MPS m = oracle::random_raw(3, 2, 2, 1, 4);
    Tensor last = m.site(2);
    std::vector<double> twice(last.values().begin(), last.values().end());
    twice.insert(twice.end(), last.values().begin(), last.values().end());
    std::vector<Tensor> sites = m.sites();
    sites[2] = Tensor(Shape{2, last.extent(1), last.extent(2), last.extent(3)}, std::move(twice));
    const Prediction pr = predict(raw_bundle(MPS(sites, 2)), Eigen::Vector3d(0.2, 0.4, -0.1));
    CHECK(pr.scores(0) == pr.scores(1));
    CHECK(pr.label == 1);
}

TEST_CASE("positive rescaling leaves predictions unchanged") {
    const MPS m = oracle::random_raw(4, 3, 2, 2, 8);
    std::vector<Tensor> sites = m.sites();
    for (auto& s : sites) s *= 3.7;
    const ModelBundle a = raw_bundle(m), b = raw_bundle(MPS(sites, m.label_site()));
    const Eigen::Vector4d x(0.3, -0.2, 0.8, -0.9);
    CHECK(predict(a, x).label == predict(b, x).label);
    CHECK((predict(a, x).scores - predict(b, x).scores).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("single-class models and bad input are refused") {
    const ModelBundle one = raw_bundle(oracle::random_raw(3, 2, 2, 1, 1));
    CHECK_THROWS_AS(predict(one, Eigen::Vector3d::Zero()), ConfigError);
    const ModelBundle two = raw_bundle(oracle::random_raw(3, 2, 2, 2, 1));
    CHECK_THROWS_AS(predict(two, Eigen::Vector4d::Zero()), DimensionError);
    Dataset empty;
    empty.values.resize(0, 3);
    CHECK_THROWS_AS(evaluate_accuracy(two, empty), DomainError);
}

TEST_CASE("accuracy and its complement under swapped labels") {
    std::vector<Prediction> preds(4);
    const std::vector<int> predicted{1, 2, 2, 1};
    for (std::size_t i = 0; i < 4; ++i) {
        preds[i].label = predicted[i];
        preds[i].scores = Eigen::Vector2d(0.5, 0.5);
    }
    const std::vector<int> truth{1, 2, 1, 1};
    std::vector<int> swapped;
    for (int l : truth) swapped.push_back(3 - l);
    CHECK(accuracy(preds, truth) == doctest::Approx(0.75));
    CHECK(accuracy(preds, swapped) == doctest::Approx(1.0 - 0.75));
    CHECK(accuracy(preds, predicted) == 1.0);
}

TEST_CASE("two-period NTS is separable") {
    const Dataset train = two_class_nts(40, 1);
    TrainConfig c;
    c.d = 5;
    c.chi_max = 20;
    c.n_sweeps = 5;
    c.eta = 0.3;
    c.preprocess = PreprocessKind::RobustSigmoid;
    const FitResult r = fit(train, c);
    CHECK(r.bundle.mps.label_dim() == 2);
    CHECK(evaluate_accuracy(r.bundle, train) >= 0.95);
    const Dataset test = two_class_nts(40, 2);
    const auto preds = predict_all(r.bundle, test);
    CHECK(accuracy(preds, test.labels) >= 0.9);
    std::ostringstream csv;
    write_predictions_csv(preds, csv);
    const std::string text = csv.str();
    CHECK(text.rfind("instance_id,predicted_label,score_1,score_2\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == test.size() + 1);
}
