#pragma once

// Brute-force references used only by the tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mpsts/mps.hpp"
#include "mpsts/trainer.hpp"

namespace oracle {

using mpsts::Index;

/// Full amplitude tensor as a flat vector indexed [label][s_1]...[s_T].
inline std::vector<double> dense_state(const mpsts::MPS& mps) {
    const Index T = mps.length(), d = mps.phys_dim(), L = mps.label_dim();
    Index configs = 1;
    for (Index t = 0; t < T; ++t) configs *= d;
    std::vector<double> out(static_cast<std::size_t>(L * configs), 0.0);
    std::vector<Index> s(static_cast<std::size_t>(T), 0);
    for (Index l = 0; l < L; ++l) {
        for (Index c = 0; c < configs; ++c) {
            Index rem = c;
            for (Index t = T - 1; t >= 0; --t) {
                s[static_cast<std::size_t>(t)] = rem % d;
                rem /= d;
            }
            Eigen::MatrixXd row = Eigen::MatrixXd::Ones(1, 1);
            for (Index t = 0; t < T; ++t) {
                const auto& a = mps.site(t);
                const Index lab = t == mps.label_site() ? l : 0;
                Eigen::MatrixXd m(a.extent(1), a.extent(3));
                for (Index i = 0; i < a.extent(1); ++i)
                    for (Index j = 0; j < a.extent(3); ++j) m(i, j) = a(lab, i, s[static_cast<std::size_t>(t)], j);
                row = row * m;
            }
            out[static_cast<std::size_t>(l * configs + c)] = row(0, 0);
        }
    }
    return out;
}

/// Product of the feature vectors for one configuration index.
inline double feature_product(const std::vector<Eigen::VectorXd>& phis, Index config, Index d) {
    double p = 1.0;
    for (Index t = static_cast<Index>(phis.size()) - 1; t >= 0; --t) {
        p *= phis[static_cast<std::size_t>(t)](config % d);
        config /= d;
    }
    return p;
}

/// Label-resolved overlaps by explicit summation over all configurations.
inline Eigen::VectorXd dense_overlap(const mpsts::MPS& mps, const std::vector<double>& x) {
    const Index d = mps.phys_dim(), L = mps.label_dim();
    const auto w = dense_state(mps);
    std::vector<Eigen::VectorXd> phis;
    for (double v : x) phis.push_back(mpsts::legendre_basis(v, d));
    const Index configs = static_cast<Index>(w.size()) / L;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(L);
    for (Index l = 0; l < L; ++l)
        for (Index c = 0; c < configs; ++c) f(l) += w[static_cast<std::size_t>(l * configs + c)] * feature_product(phis, c, d);
    return f;
}

/// Reduced density matrix of site `site` (label 0) with the sites in
/// `fixed` contracted against phi(x_t) and every other site traced.
/// Unnormalized.
inline Eigen::MatrixXd dense_rdm(const mpsts::MPS& mps, Index site, const std::vector<Index>& fixed,
                                 const std::vector<double>& x) {
    const Index T = mps.length(), d = mps.phys_dim();
    const auto w = dense_state(mps);
    std::vector<Eigen::VectorXd> phis(static_cast<std::size_t>(T));
    for (Index t : fixed) phis[static_cast<std::size_t>(t)] = mpsts::legendre_basis(x[static_cast<std::size_t>(t)], d);
    // Reduce the fixed sites into an amplitude over the free ones.
    const Index configs = static_cast<Index>(w.size()) / mps.label_dim();
    std::vector<Index> free_sites;
    for (Index t = 0; t < T; ++t)
        if (std::find(fixed.begin(), fixed.end(), t) == fixed.end()) free_sites.push_back(t);
    Index free_configs = 1;
    for (std::size_t i = 0; i < free_sites.size(); ++i) free_configs *= d;
    std::vector<double> amp(static_cast<std::size_t>(free_configs), 0.0);
    std::vector<Index> s(static_cast<std::size_t>(T));
    for (Index c = 0; c < configs; ++c) {
        Index rem = c;
        for (Index t = T - 1; t >= 0; --t) {
            s[static_cast<std::size_t>(t)] = rem % d;
            rem /= d;
        }
        double coeff = w[static_cast<std::size_t>(c)];
        for (Index t : fixed) coeff *= phis[static_cast<std::size_t>(t)](s[static_cast<std::size_t>(t)]);
        Index fc = 0;
        for (Index t : free_sites) fc = fc * d + s[static_cast<std::size_t>(t)];
        amp[static_cast<std::size_t>(fc)] += coeff;
    }
    const auto pos = static_cast<Index>(std::find(free_sites.begin(), free_sites.end(), site) - free_sites.begin());
    const Index nfree = static_cast<Index>(free_sites.size());
    Index stride = 1;
    for (Index i = pos + 1; i < nfree; ++i) stride *= d;
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(d, d);
    for (Index fc = 0; fc < free_configs; ++fc) {
        const Index si = (fc / stride) % d;
        const Index base = fc - si * stride;
        for (Index sj = 0; sj < d; ++sj)
            rho(si, sj) += amp[static_cast<std::size_t>(fc)] * amp[static_cast<std::size_t>(base + sj * stride)];
    }
    return rho;
}

/// Random MPS with arbitrary (non-canonical) Gaussian entries.
inline mpsts::MPS random_raw(Index T, Index d, Index chi, Index L, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<mpsts::Tensor> sites;
    for (Index t = 0; t < T; ++t) {
        const Index cl = t == 0 ? 1 : chi, cr = t == T - 1 ? 1 : chi;
        mpsts::Tensor s(mpsts::Shape{t == T - 1 ? L : 1, cl, d, cr});
        for (double& v : s.data()) v = normal(rng);
        sites.push_back(std::move(s));
    }
    return mpsts::MPS(std::move(sites), T - 1);
}

/// Environment of bond (t, t+1) by explicit chain products.
inline mpsts::BondEnvironment environment(const mpsts::MPS& m, Index t, const std::vector<mpsts::EncodedSeries>& batch,
                                          std::vector<Index> labels) {
    const Index N = static_cast<Index>(batch.size()), d = m.phys_dim();
    mpsts::BondEnvironment env;
    env.left.resize(N, m.site(t).extent(1));
    env.right.resize(N, m.site(t + 1).extent(3));
    env.phi_left.resize(N, d);
    env.phi_right.resize(N, d);
    for (Index n = 0; n < N; ++n) {
        const auto& e = batch[static_cast<std::size_t>(n)];
        Eigen::RowVectorXd l = Eigen::RowVectorXd::Ones(1);
        for (Index i = 0; i < t; ++i) {
            const mpsts::Tensor& a = m.site(i);
            Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(a.extent(1), a.extent(3));
            for (Index x = 0; x < a.extent(1); ++x)
                for (Index s = 0; s < d; ++s)
                    for (Index y = 0; y < a.extent(3); ++y) mat(x, y) += a(0, x, s, y) * e.values(i, s);
            l = l * mat;
        }
        Eigen::VectorXd r = Eigen::VectorXd::Ones(1);
        for (Index i = m.length() - 1; i > t + 1; --i) {
            const mpsts::Tensor& a = m.site(i);
            Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(a.extent(1), a.extent(3));
            for (Index x = 0; x < a.extent(1); ++x)
                for (Index s = 0; s < d; ++s)
                    for (Index y = 0; y < a.extent(3); ++y) mat(x, y) += a(0, x, s, y) * e.values(i, s);
            r = mat * r;
        }
        env.left.row(n) = l;
        env.right.row(n) = r.transpose();
        env.phi_left.row(n) = e.values.row(t);
        env.phi_right.row(n) = e.values.row(t + 1);
    }
    env.labels = std::move(labels);
    return env;
}

/// Mean NLL of a bond tensor by explicit index sums.
inline double bond_loss(const mpsts::Tensor& b, const mpsts::BondEnvironment& env) {
    double sum = 0.0;
    const Index N = env.left.rows();
    for (Index n = 0; n < N; ++n) {
        const Index l = env.labels.empty() ? 0 : env.labels[static_cast<std::size_t>(n)];
        double f = 0.0;
        for (Index a = 0; a < b.extent(1); ++a)
            for (Index s = 0; s < b.extent(2); ++s)
                for (Index s2 = 0; s2 < b.extent(3); ++s2)
                    for (Index c = 0; c < b.extent(4); ++c)
                        f += env.left(n, a) * env.phi_left(n, s) * env.phi_right(n, s2) * env.right(n, c) * b(l, a, s, s2, c);
        sum += std::log(f * f);
    }
    return -sum / static_cast<double>(N);
}

inline double relative_gradient_error(const mpsts::Tensor& bond, const mpsts::BondEnvironment& env) {
    const mpsts::Tensor g = mpsts::bond_gradient(bond, env);
    mpsts::Tensor fd(bond.shape());
    const double h = 1e-5;
    for (Index i = 0; i < bond.size(); ++i) {
        auto at = [&](double offset) {
            mpsts::Tensor shifted = bond;
            shifted[i] += offset;
            return bond_loss(shifted, env);
        };
        // Fourth-order central stencil.
        fd[i] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
    }
    double diff = 0.0;
    for (Index i = 0; i < bond.size(); ++i) diff += (g[i] - fd[i]) * (g[i] - fd[i]);
    return std::sqrt(diff) / g.norm();
}

/// Born probabilities of a bins x bins partition of [-1,1]^2 for a T = 2,
/// L = 1 model, by a midpoint rule with `fine` points per cell side.
inline Eigen::MatrixXd born_cell_probabilities(const mpsts::MPS& mps, int bins, int fine) {
    const Index d = mps.phys_dim();
    const auto w = dense_state(mps);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bins, bins);
    const double h = 2.0 / (bins * fine);
    for (int i = 0; i < bins * fine; ++i) {
        const Eigen::VectorXd p1 = mpsts::legendre_basis(-1.0 + (i + 0.5) * h, d);
        for (int j = 0; j < bins * fine; ++j) {
            const Eigen::VectorXd p2 = mpsts::legendre_basis(-1.0 + (j + 0.5) * h, d);
            double f = 0.0;
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b) f += w[static_cast<std::size_t>(a * d + b)] * p1(a) * p2(b);
            out(i / fine, j / fine) += f * f * h * h;
        }
    }
    return out;
}

}  // namespace oracle
