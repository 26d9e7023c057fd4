#include "mpsts/mps.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mpsts {

MPS::MPS(std::vector<Tensor> sites, Index label_site, std::optional<Index> ortho_center)
    : sites_(std::move(sites)), label_site_(label_site), center_(ortho_center) {
    validate();
}

Index MPS::max_bond_dim() const {
    Index m = 1;
    for (const Tensor& s : sites_) m = std::max(m, s.extent(3));
    return m;
}

void MPS::set_site(Index t, Tensor tensor) {
    sites_.at(static_cast<std::size_t>(t)) = std::move(tensor);
    center_.reset();
}

void MPS::set_pair(Index t, Tensor left, Tensor right, Index label_site, std::optional<Index> center) {
    sites_.at(static_cast<std::size_t>(t)) = std::move(left);
    sites_.at(static_cast<std::size_t>(t + 1)) = std::move(right);
    label_site_ = label_site;
    center_ = center;
}

void MPS::validate() const {
    if (sites_.empty()) throw DimensionError("MPS: no sites");
    if (label_site_ < 0 || label_site_ >= length()) throw DimensionError("MPS: label site out of range");
    const Index d = sites_.front().extent(2);
    for (Index t = 0; t < length(); ++t) {
        const Tensor& s = site(t);
        if (s.rank() != 4) throw DimensionError("MPS: site " + std::to_string(t) + " is not rank 4");
        if (s.extent(2) != d) throw DimensionError("MPS: physical dimension mismatch at site " + std::to_string(t));
        if (t != label_site_ && s.extent(0) != 1) {
            throw DimensionError("MPS: label index found off the label site at " + std::to_string(t));
        }
        const Index left = t == 0 ? 1 : site(t - 1).extent(3);
        if (s.extent(1) != left) throw DimensionError("MPS: bond mismatch at site " + std::to_string(t));
    }
    if (sites_.back().extent(3) != 1) throw DimensionError("MPS: right boundary bond must be 1");
    if (center_ && (*center_ < 0 || *center_ >= length())) throw DimensionError("MPS: center out of range");
}

namespace {

Index capped_power(Index base, Index exp, Index cap) {
    Index v = 1;
    for (Index i = 0; i < exp && v < cap; ++i) v *= base;
    return std::min(v, cap);
}

/// Left-orthogonalizes site t and pushes R into site t+1.
void push_right(std::vector<Tensor>& sites, std::size_t t) {
    Tensor& a = sites[t];
    const Shape sh = a.shape();
    const auto qr = qr_orthogonalize(Tensor(Shape{sh[0] * sh[1] * sh[2], sh[3]}, a.values()));
    const Index k = qr.q.extent(1);
    a = qr.q.reshaped(Shape{sh[0], sh[1], sh[2], k});

    Tensor& next = sites[t + 1];
    const Shape nsh = next.shape();
    Tensor out(Shape{nsh[0], k, nsh[2], nsh[3]});
    RowMatrix<double> r = qr.r.matrix();
    r /= r.norm();
    for (Index l = 0; l < nsh[0]; ++l) {
        Eigen::Map<const RowMatrix<double>> in(next.data().data() + l * nsh[1] * nsh[2] * nsh[3], nsh[1],
                                               nsh[2] * nsh[3]);
        Eigen::Map<RowMatrix<double>> o(out.data().data() + l * k * nsh[2] * nsh[3], k, nsh[2] * nsh[3]);
        o.noalias() = r * in;
    }
    next = std::move(out);
}

/// Right-orthogonalizes site t and pushes R^T into site t-1.
void push_left(std::vector<Tensor>& sites, std::size_t t) {
    Tensor& a = sites[t];
    const Shape sh = a.shape();
    const Tensor m = a.permuted({1, 0, 2, 3}).reshaped(Shape{sh[1], sh[0] * sh[2] * sh[3]});
    const Tensor mt = Tensor::from_matrix(m.matrix().transpose());
    const auto qr = qr_orthogonalize(mt);
    const Index k = qr.q.extent(1);
    const Tensor qt = Tensor::from_matrix(qr.q.matrix().transpose());
    a = qt.reshaped(Shape{k, sh[0], sh[2], sh[3]}).permuted({1, 0, 2, 3});

    Tensor& prev = sites[t - 1];
    const Shape psh = prev.shape();
    Tensor out(Shape{psh[0], psh[1], psh[2], k});
    RowMatrix<double> r = qr.r.matrix();
    r /= r.norm();
    out.matrix(3).noalias() = prev.matrix(3) * r.transpose();
    prev = std::move(out);
}

}  // namespace

MPS random_init(Index length, Index d, Index chi_init, Index labels, std::uint64_t seed) {
    if (length < 2) throw DomainError("random_init: need at least 2 sites");
    if (d < 1 || chi_init < 1 || labels < 1) throw DomainError("random_init: d, chi_init and L must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Index> bonds(static_cast<std::size_t>(length + 1), 1);
    for (Index t = 1; t < length; ++t) {
        const Index left_cap = capped_power(d, t, chi_init);
        const Index right_cap = std::min(chi_init, capped_power(d, length - t, chi_init) * labels);
        bonds[static_cast<std::size_t>(t)] = std::min({chi_init, left_cap, right_cap});
    }
    std::vector<Tensor> sites;
    sites.reserve(static_cast<std::size_t>(length));
    for (Index t = 0; t < length; ++t) {
        const Index lab = (t == length - 1) ? labels : 1;
        Tensor s(Shape{lab, bonds[static_cast<std::size_t>(t)], d, bonds[static_cast<std::size_t>(t + 1)]});
        for (double& v : s.data()) v = normal(rng);
        sites.push_back(std::move(s));
    }
    return canonicalize(MPS(std::move(sites), length - 1), length - 1);
}

MPS canonicalize(MPS mps, Index center) {
    if (center < 0 || center >= mps.length()) throw DomainError("canonicalize: center out of range");
    std::vector<Tensor> sites = mps.sites();
    for (Index t = 0; t < center; ++t) push_right(sites, static_cast<std::size_t>(t));
    for (Index t = mps.length() - 1; t > center; --t) push_left(sites, static_cast<std::size_t>(t));
    Tensor& c = sites[static_cast<std::size_t>(center)];
    const double n = c.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("canonicalize: MPS has zero or non-finite norm");
    c *= 1.0 / n;
    return MPS(std::move(sites), mps.label_site(), center);
}

double norm_squared(const MPS& mps) {
    // Left transfer matrix, label traced on the label site.
    Eigen::MatrixXd env = Eigen::MatrixXd::Ones(1, 1);
    for (Index t = 0; t < mps.length(); ++t) {
        const Tensor& a = mps.site(t);
        const Index lab = a.extent(0), cl = a.extent(1), d = a.extent(2), cr = a.extent(3);
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(cr, cr);
        for (Index l = 0; l < lab; ++l) {
            for (Index s = 0; s < d; ++s) {
                Eigen::MatrixXd as(cl, cr);
                for (Index i = 0; i < cl; ++i)
                    for (Index j = 0; j < cr; ++j) as(i, j) = a(l, i, s, j);
                next.noalias() += as.transpose() * env * as;
            }
        }
        env = std::move(next);
    }
    return env(0, 0);
}

bool is_left_orthogonal(const Tensor& site, double tol) {
    const Shape& sh = site.shape();
    const auto m = Eigen::Map<const RowMatrix<double>>(site.data().data(), sh[0] * sh[1] * sh[2], sh[3]);
    return (m.transpose() * m - Eigen::MatrixXd::Identity(sh[3], sh[3])).cwiseAbs().maxCoeff() <= tol;
}

bool is_right_orthogonal(const Tensor& site, double tol) {
    const Shape& sh = site.shape();
    const Tensor p = site.permuted({1, 0, 2, 3});
    const auto m = p.matrix(1);
    return (m * m.transpose() - Eigen::MatrixXd::Identity(sh[1], sh[1])).cwiseAbs().maxCoeff() <= tol;
}

ScaledOverlap overlap_scaled(const MPS& mps, const EncodedSeries& enc) {
    if (enc.length() != mps.length()) {
        throw DimensionError("overlap: series length " + std::to_string(enc.length()) + " vs MPS length " +
                             std::to_string(mps.length()));
    }
    if (enc.dim() != mps.phys_dim()) throw DimensionError("overlap: feature dimension mismatch");

    // Rows index the label once it has been passed.
    RowMatrix<double> v = RowMatrix<double>::Ones(1, 1);
    double log_scale = 0.0;
    for (Index t = 0; t < mps.length(); ++t) {
        const Tensor& a = mps.site(t);
        const Index lab = a.extent(0), cl = a.extent(1), d = a.extent(2), cr = a.extent(3);
        const Eigen::VectorXd phi = enc.values.row(t).transpose();
        RowMatrix<double> next = RowMatrix<double>::Zero(std::max(lab, v.rows()), cr);
        for (Index l = 0; l < lab; ++l) {
            Eigen::Map<const RowMatrix<double>> slice(a.data().data() + l * cl * d * cr, cl, d * cr);
            // (rows x d*cr) then contract the physical index.
            const RowMatrix<double> w = v * slice;
            for (Index r = 0; r < w.rows(); ++r) {
                Eigen::Map<const RowMatrix<double>> wr(w.data() + r * d * cr, d, cr);
                next.row(lab > 1 ? l : r) = phi.transpose() * wr;
            }
        }
        v = std::move(next);
        const double scale = v.cwiseAbs().maxCoeff();
        if (scale > 0.0 && std::isfinite(scale)) {
            v /= scale;
            log_scale += std::log(scale);
        }
    }
    ScaledOverlap out;
    out.values = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    out.log_scale = log_scale;
    return out;
}

Eigen::VectorXd overlap(const MPS& mps, const EncodedSeries& enc) { return overlap_scaled(mps, enc).unscaled(); }

Eigen::VectorXd density(const MPS& mps, const EncodedSeries& enc) {
    const ScaledOverlap o = overlap_scaled(mps, enc);
    return (o.values.array().square() * std::exp(2.0 * o.log_scale)).matrix();
}

MPS class_slice(const MPS& mps, Index label) {
    if (label < 0 || label >= mps.label_dim()) throw DomainError("class_slice: label out of range");
    std::vector<Tensor> sites = mps.sites();
    Tensor& s = sites[static_cast<std::size_t>(mps.label_site())];
    const Shape sh = s.shape();
    const Index block = sh[1] * sh[2] * sh[3];
    std::vector<double> slice(s.values().begin() + label * block, s.values().begin() + (label + 1) * block);
    s = Tensor(Shape{1, sh[1], sh[2], sh[3]}, std::move(slice));
    return canonicalize(MPS(std::move(sites), mps.label_site()), mps.length() - 1);
}

}  // namespace mpsts
