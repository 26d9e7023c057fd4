#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mpsts/tensor.hpp"

using namespace mpsts;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = normal(rng);
    return t;
}

double reconstruction_error2(const Tensor& m, const SvdResult<double>& r) {
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(r.s.data(), static_cast<Index>(r.s.size()));
    const Eigen::MatrixXd rec = r.u.matrix() * s.asDiagonal() * r.v.matrix().transpose();
    return (m.matrix() - rec).squaredNorm();
}

}  // namespace

TEST_CASE("tensor construction and indexing") {
    Tensor t(Shape{2, 3, 4});
    CHECK(t.size() == 24);
    t(1, 2, 3) = 5.0;
    CHECK(t[23] == 5.0);
    CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>(3)), DimensionError);
}

TEST_CASE("permute is a transpose copy") {
    const Tensor a = random_tensor({2, 3, 4}, 1);
    const Tensor p = a.permuted({2, 0, 1});
    CHECK(p.shape() == Shape{4, 2, 3});
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index k = 0; k < 4; ++k) CHECK(p(k, i, j) == a(i, j, k));
}

TEST_CASE("contract examples") {
    const Tensor eye(Shape{2, 2}, {1, 0, 0, 1});
    const Tensor v(Shape{2}, {3, 4});
    const Tensor r = contract(eye, v, {{1, 0}});
    CHECK(r.shape() == Shape{2});
    CHECK(r[0] == 3.0);
    CHECK(r[1] == 4.0);

    const Tensor a(Shape{2}, {1, 2});
    const Tensor s = contract(a, v, {{0, 0}});
    CHECK(s.rank() == 0);
    CHECK(s[0] == 11.0);

    CHECK_THROWS_AS(contract(eye, Tensor(Shape{3}), {{1, 0}}), DimensionError);
}

TEST_CASE("contract matches loop oracle and is bilinear") {
    const Tensor a = random_tensor({2, 3, 4}, 2);
    const Tensor b = random_tensor({4, 5}, 3);
    const Tensor c = contract(a, b, {{2, 0}});
    REQUIRE(c.shape() == Shape{2, 3, 5});
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index l = 0; l < 5; ++l) {
                double sum = 0.0;
                for (Index k = 0; k < 4; ++k) sum += a(i, j, k) * b(k, l);
                CHECK(c(i, j, l) == doctest::Approx(sum).epsilon(1e-14));
            }

    const Tensor c2 = contract(2.5 * a, b, {{2, 0}});
    for (Index i = 0; i < c.size(); ++i) CHECK(std::abs(c2[i] - 2.5 * c[i]) <= 1e-12 * std::abs(2.5 * c[i]) + 1e-15);
}

TEST_CASE("svd_truncate examples") {
    const Tensor m(Shape{3, 3}, {3, 0, 0, 0, 2, 0, 0, 0, 1});
    const auto r = svd_truncate(m, 2);
    REQUIRE(r.s.size() == 2);
    CHECK(r.s[0] == doctest::Approx(3.0));
    CHECK(r.s[1] == doctest::Approx(2.0));
    CHECK(r.report.discarded_weight == doctest::Approx(1.0));
    CHECK(r.report.kept == 2);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Tensor a = random_tensor({6, 4}, 10 + seed);
        const auto full = svd_truncate(a, 4, 0.0);
        CHECK(std::sqrt(reconstruction_error2(a, full)) <= 1e-12 * a.norm());
        CHECK((full.u.matrix().transpose() * full.u.matrix() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);
        CHECK((full.v.matrix().transpose() * full.v.matrix() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);

        const auto cut = svd_truncate(a, 2, 0.0);
        // Eckart-Young: the tail of the full spectrum.
        const double tail = full.s[2] * full.s[2] + full.s[3] * full.s[3];
        CHECK(cut.report.discarded_weight == doctest::Approx(tail).epsilon(1e-10));
        CHECK(std::abs(reconstruction_error2(a, cut) - cut.report.discarded_weight) <= 1e-10 * a.squared_norm());
        for (std::size_t i = 1; i < cut.report.spectrum.size(); ++i)
            CHECK(cut.report.spectrum[i] <= cut.report.spectrum[i - 1]);
    }

    Tensor bad(Shape{2, 2});
    bad[1] = std::nan("");
    CHECK_THROWS_AS(svd_truncate(bad, 2), NumericError);
}

TEST_CASE("svd cutoff drops numerically zero directions") {
    const Tensor m(Shape{3, 2}, {1, 1, 1, 1, 1, 1});
    const auto r = svd_truncate(m, 2);
    CHECK(r.report.kept == 1);
}

TEST_CASE("randomized svd reports its exact reconstruction error") {
    const Tensor a = random_tensor({80, 90}, 7);
    const auto r = svd_truncate_randomized(a, 8, 0.0, 99);
    CHECK(r.report.kept == 8);
    CHECK(std::abs(reconstruction_error2(a, r) - r.report.discarded_weight) <= 1e-10 * a.squared_norm());
    const auto exact = svd_truncate(a, 8, 0.0);
    CHECK(r.report.discarded_weight >= exact.report.discarded_weight - 1e-9);
    CHECK(r.report.discarded_weight <= 1.05 * exact.report.discarded_weight);
}

TEST_CASE("qr_orthogonalize") {
    const Tensor eye(Shape{2, 2}, {1, 0, 0, 1});
    const auto qi = qr_orthogonalize(eye);
    CHECK((qi.q.matrix() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);
    CHECK((qi.r.matrix() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);

    const Tensor perm(Shape{2, 2}, {0, 1, 1, 0});
    const auto qp = qr_orthogonalize(perm);
    CHECK((qp.q.matrix().transpose() * qp.q.matrix() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);

    const Tensor m = random_tensor({5, 3}, 4);
    const auto qr = qr_orthogonalize(m);
    CHECK((qr.q.matrix() * qr.r.matrix() - m.matrix()).norm() <= 1e-12);
    CHECK((qr.q.matrix().transpose() * qr.q.matrix() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-12);
}
