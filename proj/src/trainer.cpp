#include "mpsts/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mpsts/errors.hpp"

namespace mpsts {

namespace {

/// out(n, i * b.cols() + j) = a(n, i) * b(n, j)
RowMatrix<double> row_kron(const RowMatrix<double>& a, const RowMatrix<double>& b) {
    RowMatrix<double> out(a.rows(), a.cols() * b.cols());
    for (Index n = 0; n < a.rows(); ++n)
        for (Index i = 0; i < a.cols(); ++i) out.row(n).segment(i * b.cols(), b.cols()) = a(n, i) * b.row(n);
    return out;
}

void normalize_rows(RowMatrix<double>& m) {
    for (Index n = 0; n < m.rows(); ++n) {
        const double s = m.row(n).cwiseAbs().maxCoeff();
        if (s > 0.0 && std::isfinite(s)) m.row(n) /= s;
    }
}

Eigen::Map<const RowMatrix<double>> label_slice(const Tensor& site, Index label, Index rows, Index cols) {
    return {site.data().data() + label * rows * cols, rows, cols};
}

RowMatrix<double> advance_left(const RowMatrix<double>& env, const Tensor& site, const RowMatrix<double>& phi) {
    const Index cl = site.extent(1), d = site.extent(2), cr = site.extent(3);
    RowMatrix<double> out = row_kron(env, phi) * label_slice(site, 0, cl * d, cr);
    normalize_rows(out);
    return out;
}

RowMatrix<double> advance_right(const RowMatrix<double>& env, const Tensor& site, const RowMatrix<double>& phi) {
    const Index cl = site.extent(1), d = site.extent(2), cr = site.extent(3);
    RowMatrix<double> out = row_kron(phi, env) * label_slice(site, 0, cl, d * cr).transpose();
    normalize_rows(out);
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<Index> zero_based(std::span<const int> labels, Index n, Index classes) {
    std::vector<Index> out;
    if (labels.empty()) return out;
    if (static_cast<Index>(labels.size()) != n) throw DimensionError("labels: one label per instance required");
    out.reserve(labels.size());
    for (int l : labels) {
        if (l < 1 || l > classes) {
            throw DomainError("label " + std::to_string(l) + " outside [1, " + std::to_string(classes) + "]");
        }
        out.push_back(l - 1);
    }
    return out;
}

}  // namespace

double nll_loss(const MPS& mps, const std::vector<EncodedSeries>& batch, std::span<const int> labels) {
    if (batch.empty()) throw DomainError("nll_loss: empty batch");
    const auto lab = zero_based(labels, static_cast<Index>(batch.size()), mps.label_dim());
    double sum = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const ScaledOverlap o = overlap_scaled(mps, batch[n]);
        const double v = std::abs(o.values(lab.empty() ? 0 : lab[n]));
        if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
        sum += 2.0 * (std::log(v) + o.log_scale);
    }
    return -sum / static_cast<double>(batch.size());
}

Tensor merge_bond(const MPS& mps, Index t) {
    if (t < 0 || t + 1 >= mps.length()) throw DomainError("merge_bond: bond index out of range");
    if (mps.label_site() != t && mps.label_site() != t + 1) throw DomainError("merge_bond: label is not on the bond");
    const Tensor& a = mps.site(t);
    const Tensor& b = mps.site(t + 1);
    const Index la = a.extent(0), lb = b.extent(0), L = std::max(la, lb);
    const Index cl = a.extent(1), d = a.extent(2), cm = a.extent(3), cr = b.extent(3);
    Tensor out(Shape{L, cl, d, d, cr});
    for (Index l = 0; l < L; ++l) {
        Eigen::Map<RowMatrix<double>> o(out.data().data() + l * cl * d * d * cr, cl * d, d * cr);
        o.noalias() = label_slice(a, la > 1 ? l : 0, cl * d, cm) * label_slice(b, lb > 1 ? l : 0, cm, d * cr);
    }
    return out;
}

namespace {

void check_environment(const Tensor& bond, const BondEnvironment& env) {
    if (bond.rank() != 5) throw DimensionError("bond tensor must be rank 5");
    const Index N = env.left.rows();
    if (N == 0) throw DomainError("bond environment: empty batch");
    if (env.phi_left.rows() != N || env.phi_right.rows() != N || env.right.rows() != N) {
        throw DimensionError("bond environment: inconsistent instance counts");
    }
    if (env.left.cols() != bond.extent(1) || env.phi_left.cols() != bond.extent(2) ||
        env.phi_right.cols() != bond.extent(3) || env.right.cols() != bond.extent(4)) {
        throw DimensionError("bond environment: extents do not match bond " + shape_string(bond.shape()));
    }
    if (!env.labels.empty() && static_cast<Index>(env.labels.size()) != N) {
        throw DimensionError("bond environment: one label per instance required");
    }
    for (Index l : env.labels)
        if (l < 0 || l >= bond.extent(0)) throw DomainError("bond environment: label out of range");
}

/// Rows of the batch grouped by label.
std::vector<std::vector<Index>> rows_by_label(const BondEnvironment& env, Index L) {
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(L));
    for (Index n = 0; n < env.left.rows(); ++n)
        groups[static_cast<std::size_t>(env.labels.empty() ? 0 : env.labels[static_cast<std::size_t>(n)])].push_back(n);
    return groups;
}

}  // namespace

Eigen::VectorXd bond_overlaps(const Tensor& bond, const BondEnvironment& env) {
    check_environment(bond, env);
    const Index L = bond.extent(0), rows = bond.extent(1) * bond.extent(2), cols = bond.extent(3) * bond.extent(4);
    const RowMatrix<double> P = row_kron(env.left, env.phi_left);
    const RowMatrix<double> Q = row_kron(env.phi_right, env.right);
    Eigen::VectorXd f(env.left.rows());
    const auto groups = rows_by_label(env, L);
    for (Index l = 0; l < L; ++l) {
        const auto& idx = groups[static_cast<std::size_t>(l)];
        if (idx.empty()) continue;
        const RowMatrix<double> Pl = P(idx, Eigen::placeholders::all);
        const RowMatrix<double> Ql = Q(idx, Eigen::placeholders::all);
        const Eigen::VectorXd fl = (Pl * label_slice(bond, l, rows, cols)).cwiseProduct(Ql).rowwise().sum();
        f(idx) = fl;
    }
    return f;
}

Tensor bond_gradient(const Tensor& bond, const BondEnvironment& env) {
    check_environment(bond, env);
    const Index L = bond.extent(0), rows = bond.extent(1) * bond.extent(2), cols = bond.extent(3) * bond.extent(4);
    const auto N = static_cast<double>(env.left.rows());
    const RowMatrix<double> P = row_kron(env.left, env.phi_left);
    const RowMatrix<double> Q = row_kron(env.phi_right, env.right);
    Tensor grad(bond.shape());
    const auto groups = rows_by_label(env, L);
    for (Index l = 0; l < L; ++l) {
        const auto& idx = groups[static_cast<std::size_t>(l)];
        if (idx.empty()) continue;
        const RowMatrix<double> Pl = P(idx, Eigen::placeholders::all);
        const RowMatrix<double> Ql = Q(idx, Eigen::placeholders::all);
        const Eigen::VectorXd f = (Pl * label_slice(bond, l, rows, cols)).cwiseProduct(Ql).rowwise().sum();
        if ((f.array() == 0.0).any()) throw NumericError("bond_gradient: an instance has zero overlap");
        const Eigen::VectorXd w = f.cwiseInverse() * (-2.0 / N);
        Eigen::Map<RowMatrix<double>> g(grad.data().data() + l * rows * cols, rows, cols);
        g.noalias() = Pl.transpose() * w.asDiagonal() * Ql;
    }
    if (!grad.all_finite()) throw NumericError("bond_gradient: non-finite gradient");
    return grad;
}

std::optional<Tensor> tsgo_update(const Tensor& bond, const Tensor& gradient, double eta) {
    if (bond.shape() != gradient.shape()) throw DimensionError("tsgo_update: gradient shape differs from bond");
    const double gn = gradient.norm();
    if (!(gn > 0.0) || !std::isfinite(gn)) return std::nullopt;
    Tensor out = bond;
    auto o = out.data();
    const auto g = gradient.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= eta * g[i] / gn;
    const double n = out.norm();
    if (!(n > 0.0) || !std::isfinite(n)) return std::nullopt;
    out *= 1.0 / n;
    return out;
}

BondSplit split_bond(const Tensor& bond, Index chi_max, double cutoff, SweepDirection direction, std::uint64_t seed,
                     bool normalize) {
    if (bond.rank() != 5) throw DimensionError("split_bond: bond tensor must be rank 5");
    const Index L = bond.extent(0), cl = bond.extent(1), d1 = bond.extent(2), d2 = bond.extent(3), cr = bond.extent(4);
    const bool to_right = direction == SweepDirection::LeftToRight;
    const Tensor m = to_right ? bond.permuted({1, 2, 0, 3, 4}).reshaped(Shape{cl * d1, L * d2 * cr})
                              : bond.reshaped(Shape{L * cl * d1, d2 * cr});
    SvdResult<double> svd = seed != 0 ? svd_truncate_randomized(m, chi_max, cutoff, seed) : svd_truncate(m, chi_max, cutoff);
    const Index k = svd.report.kept;
    Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(svd.s.data(), k);
    if (normalize) {
        const double sn = s.norm();
        if (!(sn > 0.0)) throw NumericError("split_bond: bond tensor vanished");
        s /= sn;
    }

    BondSplit out;
    out.report = svd.report;
    if (to_right) {
        out.left = svd.u.reshaped(Shape{1, cl, d1, k});
        const RowMatrix<double> sv = s.asDiagonal() * svd.v.matrix().transpose();
        out.right = Tensor::from_matrix(sv).reshaped(Shape{k, L, d2, cr}).permuted({1, 0, 2, 3});
    } else {
        const RowMatrix<double> us = svd.u.matrix() * s.asDiagonal();
        out.left = Tensor::from_matrix(us).reshaped(Shape{L, cl, d1, k});
        const RowMatrix<double> vt = svd.v.matrix().transpose();
        out.right = Tensor::from_matrix(vt).reshaped(Shape{1, k, d2, cr});
    }
    return out;
}

std::pair<MPS, TrainReport> train_mps(MPS init, const std::vector<EncodedSeries>& batch, std::span<const int> labels,
                                      const TrainConfig& config) {
    config.validate();
    if (batch.empty()) throw DomainError("train: empty training set");
    const Index T = init.length(), d = init.phys_dim(), N = static_cast<Index>(batch.size());
    if (T < 2) throw DomainError("train: need at least 2 sites");
    if (init.label_site() != T - 1) throw DomainError("train: label must start on the rightmost site");
    for (Index n = 0; n < N; ++n) {
        if (batch[static_cast<std::size_t>(n)].length() != T || batch[static_cast<std::size_t>(n)].dim() != d) {
            throw DimensionError("train: instance " + std::to_string(n) + " has the wrong length or dimension");
        }
    }
    const std::vector<Index> lab0 = zero_based(labels, N, init.label_dim());

    std::vector<RowMatrix<double>> phi(static_cast<std::size_t>(T), RowMatrix<double>(N, d));
    for (Index n = 0; n < N; ++n)
        for (Index t = 0; t < T; ++t) phi[static_cast<std::size_t>(t)].row(n) = batch[static_cast<std::size_t>(n)].values.row(t);

    MPS mps = init.ortho_center() == T - 1 ? std::move(init) : canonicalize(std::move(init), T - 1);
    TrainReport report;
    report.initial_loss = nll_loss(mps, batch, labels);
    report.final_loss = report.initial_loss;

    const RowMatrix<double> ones = RowMatrix<double>::Ones(N, 1);
    std::vector<RowMatrix<double>> left(static_cast<std::size_t>(T), ones);
    std::vector<RowMatrix<double>> right(static_cast<std::size_t>(T + 1), ones);
    for (Index t = 0; t + 1 < T; ++t) {
        left[static_cast<std::size_t>(t + 1)] =
            advance_left(left[static_cast<std::size_t>(t)], mps.site(t), phi[static_cast<std::size_t>(t)]);
    }

    auto update = [&](Index t, SweepDirection dir, Index sweep) {
        Tensor bond = merge_bond(mps, t);
        BondEnvironment env{left[static_cast<std::size_t>(t)], phi[static_cast<std::size_t>(t)],
                            phi[static_cast<std::size_t>(t + 1)], right[static_cast<std::size_t>(t + 2)], lab0};
        try {
            const Tensor grad = bond_gradient(bond, env);
            if (auto next = tsgo_update(bond, grad, config.eta)) bond = std::move(*next);
            else ++report.skipped_updates;
        } catch (const NumericError&) {
            ++report.skipped_updates;
        }
        std::uint64_t key = splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(sweep)));
        key = splitmix64(key ^ (static_cast<std::uint64_t>(t) << 1 | (dir == SweepDirection::LeftToRight ? 1u : 0u)));
        BondSplit split = split_bond(bond, config.chi_max, config.cutoff, dir, key | 1u);
        report.max_discarded_weight = std::max(report.max_discarded_weight, split.report.discarded_weight);
        return split;
    };

    for (Index sweep = 0; sweep < config.n_sweeps; ++sweep) {
        for (Index t = T - 2; t >= 0; --t) {
            BondSplit s = update(t, SweepDirection::RightToLeft, sweep);
            mps.set_pair(t, std::move(s.left), std::move(s.right), t, t);
            right[static_cast<std::size_t>(t + 1)] = advance_right(right[static_cast<std::size_t>(t + 2)], mps.site(t + 1),
                                                                    phi[static_cast<std::size_t>(t + 1)]);
        }
        for (Index t = 0; t + 1 < T; ++t) {
            BondSplit s = update(t, SweepDirection::LeftToRight, sweep);
            mps.set_pair(t, std::move(s.left), std::move(s.right), t + 1, t + 1);
            left[static_cast<std::size_t>(t + 1)] =
                advance_left(left[static_cast<std::size_t>(t)], mps.site(t), phi[static_cast<std::size_t>(t)]);
        }
        const double loss = nll_loss(mps, batch, labels);
        const double previous = report.final_loss;
        report.loss_per_sweep.push_back(loss);
        report.final_loss = loss;
        report.sweeps_run = sweep + 1;
        if (config.loss_tolerance && previous - loss < *config.loss_tolerance) break;
    }
    mps.validate();
    return {std::move(mps), report};
}

FitResult fit(const Dataset& train, const TrainConfig& config) {
    config.validate();
    train.validate();
    if (train.size() == 0) throw DomainError("fit: empty training set");
    for (Index n = 0; n < train.size(); ++n) {
        if (!train.values.row(n).allFinite() || (train.has_mask() && !train.mask.row(n).all())) {
            throw DomainError("fit: instance " + std::to_string(n) + " has missing or non-finite values");
        }
    }
    const Preprocessor pre = fit_preprocessor(train.values, config.preprocess);
    std::vector<EncodedSeries> batch;
    batch.reserve(static_cast<std::size_t>(train.size()));
    for (Index n = 0; n < train.size(); ++n) {
        const Eigen::VectorXd row = train.values.row(n).transpose();
        try {
            const PreprocessedSeries p = apply_preprocessor(pre, std::span<const double>(row.data(), row.size()));
            batch.push_back(encode_series(std::span<const double>(p.values.data(), p.values.size()), config.d));
        } catch (const Error& e) {
            throw DomainError("fit: instance " + std::to_string(n) + " cannot be encoded: " + e.what());
        }
    }
    const Index L = train.has_labels() ? train.num_classes() : 1;
    MPS init = random_init(train.length(), config.d, config.chi_init, L, config.seed);
    auto [mps, report] = train_mps(std::move(init), batch, train.labels, config);
    return {ModelBundle(std::move(mps), pre, config), report};
}

void write_loss_csv(const TrainReport& report, std::ostream& out) {
    out << "sweep,loss\n";
    for (std::size_t i = 0; i < report.loss_per_sweep.size(); ++i) {
        out << (i + 1) << ',' << format_double(report.loss_per_sweep[i]) << '\n';
    }
}

}  // namespace mpsts
