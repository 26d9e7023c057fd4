#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <limits>
#include <random>

#include "mpsts/sampler.hpp"
#include "mpsts/trainer.hpp"
#include "oracles.hpp"

using namespace mpsts;

namespace {

ModelBundle toy_bundle(const MPS& m) {
    Preprocessor p;
    p.lo = -1.0;
    p.hi = 1.0;
    TrainConfig c;
    c.d = m.phys_dim();
    c.chi_init = 1;
    return ModelBundle(canonicalize(m, m.length() - 1), p, c);
}

/// F(x) by composite Simpson rules on [-1, x] and [-1, 1].
double dense_cdf(const Eigen::MatrixXd& rho, double x) {
    const auto simpson = [&](double b) {
        const int n = 20000;
        const double h = (b + 1.0) / n;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const Eigen::VectorXd phi = legendre_basis(-1.0 + i * h, rho.rows());
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * phi.dot(rho * phi);
        }
        return acc * h / 3.0;
    };
    return simpson(x) / simpson(1.0);
}

RDM random_rdm(Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) a(i, j) = normal(rng);
    return RDM::from_unnormalized(a * a.transpose());
}

}  // namespace

TEST_CASE("inverse_cdf_sample endpoints and symmetry") {
    const FeatureMap fmap(5);
    const RDM r = random_rdm(5, 1);
    CHECK(inverse_cdf_sample(fmap, r, 0.0) == -1.0);
    CHECK(inverse_cdf_sample(fmap, r, 1.0) == 1.0);
    const Eigen::VectorXd phi = legendre_basis(0.0, 5);
    const RDM sym = RDM::from_unnormalized(phi * phi.transpose());
    CHECK(std::abs(inverse_cdf_sample(fmap, sym, 0.5)) <= 2.0 / 512);
}

TEST_CASE("inverse_cdf_sample round trip against a dense CDF") {
    const FeatureMap fmap(6);
    const RDM r = random_rdm(6, 7);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double u = uniform(rng);
        const double x = inverse_cdf_sample(fmap, r, u);
        CHECK(std::abs(conditional_cdf(fmap, r, x) - u) <= 1e-6);
        if (i < 10) CHECK(std::abs(dense_cdf(r.matrix, x) - u) <= 1e-6);
    }
}

TEST_CASE("plain inverse transform sampling reproduces the joint density") {
    const MPS raw = oracle::random_raw(2, 2, 2, 1, 11);
    const ModelBundle bundle = toy_bundle(raw);
    SamplerConfig cfg;
    cfg.alpha = std::numeric_limits<double>::infinity();
    cfg.max_rejections = 1;
    cfg.seed = 5;
    cfg.n_trajectories = 10000;
    const SampledDataset s = generate_dataset(bundle, cfg);
    REQUIRE(s.data.size() == 10000);

    const int bins = 5;
    const Eigen::MatrixXd expected = oracle::born_cell_probabilities(bundle.mps, bins, 200);
    CHECK(std::abs(expected.sum() - 1.0) <= 1e-5);

    Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(bins, bins);
    for (Index n = 0; n < s.data.size(); ++n) {
        const auto cell = [&](double x) { return std::min(bins - 1, static_cast<int>((x + 1.0) / 2.0 * bins)); };
        observed(cell(s.data.values(n, 0)), cell(s.data.values(n, 1))) += 1.0;
    }
    double chi2 = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            const double e = expected(i, j) * 10000.0;
            chi2 += (observed(i, j) - e) * (observed(i, j) - e) / e;
        }
    const boost::math::chi_squared dist(bins * bins - 1);
    CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("every accepted value respects the rejection bound") {
    const MPS raw = oracle::random_raw(6, 4, 3, 1, 2);
    const ModelBundle bundle = toy_bundle(raw);
    SamplerConfig cfg;
    cfg.alpha = 2.0;
    for (Index i = 0; i < 30; ++i) {
        const Trajectory tr = sample_trajectory(bundle, cfg, i);
        ConditionalWalker walker(bundle.mps, MaskVector::Constant(6, false), Eigen::VectorXd::Zero(6));
        for (Index t = 0; t < 6; ++t) {
            const GridDistribution dist(bundle.feature_map(), walker.rdm().matrix);
            const double m = dist.median();
            CHECK(std::abs(tr.encoded(t) - m) <= cfg.alpha * dist.wmad(m));
            if (tr.fallback(t)) CHECK(tr.encoded(t) == m);
            walker.advance(tr.encoded(t));
        }
    }
}

TEST_CASE("tiny alpha exhausts the budget and falls back to the median") {
    const ModelBundle bundle = toy_bundle(oracle::random_raw(3, 3, 2, 1, 4));
    SamplerConfig cfg;
    cfg.alpha = 1e-12;
    cfg.max_rejections = 3;
    cfg.n_trajectories = 4;
    const SampledDataset s = generate_dataset(bundle, cfg);
    for (Index t = 0; t < 3; ++t) {
        CHECK(s.fallbacks_per_site[static_cast<std::size_t>(t)] == 4);
        CHECK(s.rejections_per_site[static_cast<std::size_t>(t)] == 12);
    }
}

TEST_CASE("determinism, independent streams and shapes") {
    const ModelBundle bundle = toy_bundle(oracle::random_raw(5, 3, 3, 1, 9));
    SamplerConfig cfg;
    cfg.seed = 42;
    cfg.n_trajectories = 3;
    const SampledDataset a = generate_dataset(bundle, cfg);
    const SampledDataset b = generate_dataset(bundle, cfg);
    CHECK(a.data.values == b.data.values);
    CHECK(a.data.values.rows() == 3);
    CHECK(a.data.values.cols() == 5);
    CHECK(sample_trajectory(bundle, cfg, 1).series == a.data.values.row(1).transpose());
    cfg.seed = 43;
    const SampledDataset c = generate_dataset(bundle, cfg);
    CHECK(c.data.values != a.data.values);
    CHECK(a.data.values.row(0) != a.data.values.row(1));
    cfg.n_trajectories = 0;
    CHECK(generate_dataset(bundle, cfg).data.size() == 0);
}

TEST_CASE("conditioned sampling keeps the prefix") {
    const ModelBundle bundle = toy_bundle(oracle::random_raw(6, 3, 3, 1, 5));
    SamplerConfig cfg;
    Eigen::VectorXd prefix(3);
    prefix << 0.2, -0.4, 0.7;
    for (Index i = 0; i < 5; ++i) {
        const Trajectory tr = sample_trajectory(bundle, cfg, i, prefix);
        CHECK(tr.series.head(3) == prefix);
        CHECK(tr.series.size() == 6);
    }
    CHECK_THROWS_AS(sample_trajectory(bundle, cfg, 0, Eigen::VectorXd::Zero(7)), DimensionError);
}

TEST_CASE("invalid sampler settings") {
    SamplerConfig cfg;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.alpha = 2.0;
    cfg.max_rejections = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("trajectories from an NTS model track the training mean") {
    NTSParams p;
    p.T = 24;
    p.N = 150;
    p.seed = 3;
    const Dataset train = generate_nts(p);
    TrainConfig c;
    c.d = 6;
    c.chi_max = 12;
    c.n_sweeps = 4;
    c.eta = 0.1;
    const FitResult fit_result = fit(train, c);
    SamplerConfig cfg;
    cfg.n_trajectories = 300;
    cfg.seed = 8;
    const SampledDataset s = generate_dataset(fit_result.bundle, cfg);
    const Eigen::RowVectorXd ms = s.data.values.colwise().mean();
    const Eigen::RowVectorXd mt = train.values.colwise().mean();
    Index outside = 0;
    for (Index t = 0; t < p.T; ++t) {
        const double vs = (s.data.values.col(t).array() - ms(t)).square().sum() / (cfg.n_trajectories - 1);
        const double vt = (train.values.col(t).array() - mt(t)).square().sum() / (p.N - 1);
        const double se = std::sqrt(vs / cfg.n_trajectories + vt / p.N);
        if (std::abs(ms(t) - mt(t)) > 3.0 * se) ++outside;
    }
    CHECK(outside == 0);
}
