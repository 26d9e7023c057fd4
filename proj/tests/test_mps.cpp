#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mpsts/mps.hpp"
#include "oracles.hpp"

using namespace mpsts;

namespace {

std::vector<double> random_point(Index T, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(T));
    for (double& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("random_init shapes, determinism and norm") {
    const MPS m = random_init(3, 2, 2, 1, 42);
    CHECK(m.site(0).shape() == Shape{1, 1, 2, 2});
    CHECK(m.site(1).shape() == Shape{1, 2, 2, 2});
    CHECK(m.site(2).shape() == Shape{1, 2, 2, 1});
    CHECK(m.label_site() == 2);
    CHECK(norm_squared(m) == doctest::Approx(1.0).epsilon(1e-10));

    const MPS again = random_init(3, 2, 2, 1, 42);
    for (Index t = 0; t < 3; ++t) CHECK(m.site(t).values() == again.site(t).values());

    const MPS labelled = random_init(5, 3, 4, 3, 1);
    CHECK(labelled.label_dim() == 3);
    CHECK(labelled.site(4).extent(0) == 3);
    CHECK(norm_squared(labelled) == doctest::Approx(1.0).epsilon(1e-10));
    for (Index t = 0; t < 4; ++t) CHECK(is_left_orthogonal(labelled.site(t)));
}

TEST_CASE("canonicalize produces isometries around the center") {
    for (Index center = 0; center < 4; ++center) {
        const MPS raw = oracle::random_raw(4, 3, 3, 2, 7 + static_cast<std::uint64_t>(center));
        const MPS c = canonicalize(raw, center);
        REQUIRE(c.ortho_center() == center);
        for (Index t = 0; t < center; ++t) CHECK(is_left_orthogonal(c.site(t)));
        for (Index t = center + 1; t < 4; ++t) CHECK(is_right_orthogonal(c.site(t)));
        CHECK(norm_squared(c) == doctest::Approx(1.0).epsilon(1e-10));

        // Only the renormalization differs from the raw state.
        const auto w0 = oracle::dense_state(raw);
        const auto w1 = oracle::dense_state(c);
        const double scale = std::sqrt(norm_squared(raw));
        for (std::size_t i = 0; i < w0.size(); ++i) CHECK(std::abs(w0[i] / scale - w1[i]) <= 1e-10);

        const MPS twice = canonicalize(c, center);
        CHECK(norm_squared(twice) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("overlap on a single site") {
    Tensor a(Shape{1, 1, 3, 1}, {0.5, -1.0, 2.0});
    const MPS m(std::vector<Tensor>{a, Tensor(Shape{1, 1, 3, 1}, {1.0, 0.0, 0.0})}, 1);
    const std::vector<double> x{0.4, 0.0};
    const auto enc = encode_series(x, 3);
    const Eigen::VectorXd v = enc.values.row(0).transpose();
    const double expected = (0.5 * v(0) - 1.0 * v(1) + 2.0 * v(2)) * enc.values(1, 0);
    CHECK(overlap(m, enc)(0) == doctest::Approx(expected));
}

TEST_CASE("overlap and density match the dense oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Index T = 2 + trial % 3, d = 1 + trial % 3, chi = 1 + trial % 4, L = 1 + trial % 2;
        const MPS m = canonicalize(oracle::random_raw(T, d, chi, L, 100 + static_cast<std::uint64_t>(trial)), T - 1);
        const auto x = random_point(T, rng);
        const auto enc = encode_series(x, d);
        const Eigen::VectorXd f = overlap(m, enc);
        const Eigen::VectorXd ref = oracle::dense_overlap(m, x);
        CHECK((f - ref).cwiseAbs().maxCoeff() <= 1e-10);
        const Eigen::VectorXd p = density(m, enc);
        CHECK((p - f.cwiseAbs2()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(p.minCoeff() >= 0.0);

        const MPS moved = canonicalize(m, 0);
        CHECK((density(moved, enc) - p).cwiseAbs().maxCoeff() <= 1e-10);
    }
    const MPS m = random_init(3, 2, 2, 1, 1);
    CHECK_THROWS_AS(overlap(m, encode_series(std::vector<double>{0.1, 0.2}, 2)), DimensionError);
    CHECK_THROWS_AS(overlap(m, encode_series(std::vector<double>{0.1, 0.2, 0.3}, 3)), DimensionError);
}

TEST_CASE("overlap is linear in a site tensor") {
    const MPS m = oracle::random_raw(3, 2, 2, 1, 9);
    const auto enc = encode_series(std::vector<double>{0.1, -0.4, 0.7}, 2);
    MPS scaled = m;
    scaled.set_site(1, 3.0 * m.site(1));
    CHECK(overlap(scaled, enc)(0) == doctest::Approx(3.0 * overlap(m, enc)(0)));
}

TEST_CASE("density integrates to one") {
    for (Index d : {2, 3, 4}) {
        const MPS m = random_init(3, d, 3, 1, static_cast<std::uint64_t>(d));
        const auto rule = gauss_legendre(d + 1);
        const Index n = rule.nodes.size();
        double total = 0.0;
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                for (Index k = 0; k < n; ++k) {
                    const std::vector<double> x{rule.nodes(i), rule.nodes(j), rule.nodes(k)};
                    total += rule.weights(i) * rule.weights(j) * rule.weights(k) * density(m, encode_series(x, d))(0);
                }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("long chains do not underflow") {
    const MPS m = random_init(400, 4, 4, 1, 11);
    const auto enc = encode_series(std::vector<double>(400, 0.95), 4);
    const auto o = overlap_scaled(m, enc);
    CHECK(std::isfinite(o.log_scale));
    CHECK(std::abs(o.values(0)) > 0.0);
}

TEST_CASE("class_slice keeps one normalized class") {
    const MPS m = random_init(4, 2, 3, 3, 5);
    const auto enc = encode_series(std::vector<double>{0.1, 0.2, -0.3, 0.4}, 2);
    const Eigen::VectorXd f = overlap(m, enc);
    for (Index l = 0; l < 3; ++l) {
        const MPS s = class_slice(m, l);
        CHECK(s.label_dim() == 1);
        CHECK(norm_squared(s) == doctest::Approx(1.0).epsilon(1e-10));
        const double ratio = overlap(s, enc)(0) / f(l);
        CHECK(ratio > 0.0);
    }
    CHECK_THROWS_AS(class_slice(m, 3), DomainError);
}

TEST_CASE("validation rejects inconsistent chains") {
    CHECK_THROWS_AS(MPS(std::vector<Tensor>{Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 3, 2, 1})}, 1), DimensionError);
    CHECK_THROWS_AS(MPS(std::vector<Tensor>{Tensor(Shape{2, 1, 2, 2}), Tensor(Shape{1, 2, 2, 1})}, 1), DimensionError);
}
