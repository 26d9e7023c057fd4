#pragma once

// Dense row-major tensors and the matrix decompositions used to manipulate
// matrix-product states. Everything here is templated on the scalar type; the
// rest of the library instantiates it with double only.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpsts/errors.hpp"

namespace mpsts {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

inline Index shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

template <typename Scalar>
class DenseTensor {
public:
    using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
    using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

    /// Rank-0 tensor holding a single zero.
    DenseTensor() : data_(1, Scalar(0)) {}

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        check_extents();
        data_.assign(static_cast<std::size_t>(shape_size(shape_)), Scalar(0));
    }

    DenseTensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_extents();
        if (static_cast<Index>(data_.size()) != shape_size(shape_)) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
        }
    }

    static DenseTensor scalar(Scalar value) {
        DenseTensor t;
        t.data_[0] = value;
        return t;
    }

    template <typename Derived>
    static DenseTensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
        DenseTensor t(Shape{m.rows(), m.cols()});
        t.matrix() = m;
        return t;
    }

    [[nodiscard]] Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] Index extent(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(data_.size()); }

    [[nodiscard]] std::span<Scalar> data() noexcept { return data_; }
    [[nodiscard]] std::span<const Scalar> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<Scalar>& values() const noexcept { return data_; }

    [[nodiscard]] Scalar& operator[](Index flat) { return data_[static_cast<std::size_t>(flat)]; }
    [[nodiscard]] Scalar operator[](Index flat) const { return data_[static_cast<std::size_t>(flat)]; }

    template <typename... Ix>
    [[nodiscard]] Scalar& operator()(Ix... ix) {
        return data_[static_cast<std::size_t>(offset({static_cast<Index>(ix)...}))];
    }
    template <typename... Ix>
    [[nodiscard]] Scalar operator()(Ix... ix) const {
        return data_[static_cast<std::size_t>(offset({static_cast<Index>(ix)...}))];
    }

    /// View as a matrix whose rows fuse the first `row_axes` indices.
    [[nodiscard]] MatrixMap matrix(Index row_axes = 1) {
        auto [r, c] = split_extents(row_axes);
        return MatrixMap(data_.data(), r, c);
    }
    [[nodiscard]] ConstMatrixMap matrix(Index row_axes = 1) const {
        auto [r, c] = split_extents(row_axes);
        return ConstMatrixMap(data_.data(), r, c);
    }

    [[nodiscard]] DenseTensor reshaped(Shape shape) const {
        if (shape_size(shape) != size()) {
            throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        }
        return DenseTensor(std::move(shape), data_);
    }

    /// Transpose-copy: result axis i is input axis perm[i].
    [[nodiscard]] DenseTensor permuted(const std::vector<Index>& perm) const {
        const std::size_t r = shape_.size();
        if (perm.size() != r) throw DimensionError("permutation rank mismatch");
        std::vector<bool> seen(r, false);
        for (Index p : perm) {
            if (p < 0 || static_cast<std::size_t>(p) >= r || seen[static_cast<std::size_t>(p)]) {
                throw DimensionError("invalid permutation");
            }
            seen[static_cast<std::size_t>(p)] = true;
        }
        Shape out_shape(r);
        for (std::size_t i = 0; i < r; ++i) out_shape[i] = shape_[static_cast<std::size_t>(perm[i])];
        DenseTensor out(out_shape);
        if (r == 0) {
            out.data_ = data_;
            return out;
        }
        const Shape in_strides = strides(shape_);
        Shape stride_in_out_order(r);
        for (std::size_t i = 0; i < r; ++i) stride_in_out_order[i] = in_strides[static_cast<std::size_t>(perm[i])];

        std::vector<Index> counter(r, 0);
        Index src = 0;
        for (Index dst = 0; dst < out.size(); ++dst) {
            out.data_[static_cast<std::size_t>(dst)] = data_[static_cast<std::size_t>(src)];
            for (std::size_t ax = r; ax-- > 0;) {
                if (++counter[ax] < out_shape[ax]) {
                    src += stride_in_out_order[ax];
                    break;
                }
                src -= stride_in_out_order[ax] * (out_shape[ax] - 1);
                counter[ax] = 0;
            }
        }
        return out;
    }

    [[nodiscard]] Scalar squared_norm() const {
        Scalar s(0);
        for (const Scalar& v : data_) s += v * v;
        return s;
    }
    [[nodiscard]] Scalar norm() const { return std::sqrt(squared_norm()); }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
    }

    DenseTensor& operator*=(Scalar alpha) {
        for (Scalar& v : data_) v *= alpha;
        return *this;
    }
    friend DenseTensor operator*(Scalar alpha, DenseTensor t) { return t *= alpha; }

    static Shape strides(const Shape& shape) {
        Shape s(shape.size(), 1);
        for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
        return s;
    }

private:
    void check_extents() const {
        for (Index e : shape_) {
            if (e < 1) throw DimensionError("tensor extents must be >= 1, got " + shape_string(shape_));
        }
    }

    [[nodiscard]] Index offset(std::initializer_list<Index> ix) const {
        if (ix.size() != shape_.size()) throw DimensionError("index rank mismatch");
        Index off = 0;
        std::size_t axis = 0;
        for (Index i : ix) {
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    [[nodiscard]] std::pair<Index, Index> split_extents(Index row_axes) const {
        if (row_axes < 0 || row_axes > rank()) throw DimensionError("bad matrix split");
        Index rows = 1;
        for (Index i = 0; i < row_axes; ++i) rows *= shape_[static_cast<std::size_t>(i)];
        return {rows, size() / rows};
    }

    Shape shape_;
    std::vector<Scalar> data_;
};

using Tensor = DenseTensor<double>;

/// Sums over the paired axes (axis of `a`, axis of `b`). Result axes are the
/// unpaired axes of `a` followed by the unpaired axes of `b`.
template <typename Scalar>
DenseTensor<Scalar> contract(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b,
                             const std::vector<std::pair<Index, Index>>& axes) {
    std::vector<bool> a_paired(static_cast<std::size_t>(a.rank()), false);
    std::vector<bool> b_paired(static_cast<std::size_t>(b.rank()), false);
    for (auto [ia, ib] : axes) {
        if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank()) {
            throw DimensionError("contraction axis out of range");
        }
        if (a_paired[static_cast<std::size_t>(ia)] || b_paired[static_cast<std::size_t>(ib)]) {
            throw DimensionError("contraction axis paired twice");
        }
        if (a.extent(ia) != b.extent(ib)) {
            throw DimensionError("contraction extent mismatch: " + std::to_string(a.extent(ia)) + " vs " +
                                 std::to_string(b.extent(ib)));
        }
        a_paired[static_cast<std::size_t>(ia)] = true;
        b_paired[static_cast<std::size_t>(ib)] = true;
    }

    std::vector<Index> perm_a, perm_b;
    Shape out_shape;
    Index free_a = 1, free_b = 1, inner = 1;
    for (Index i = 0; i < a.rank(); ++i) {
        if (!a_paired[static_cast<std::size_t>(i)]) {
            perm_a.push_back(i);
            out_shape.push_back(a.extent(i));
            free_a *= a.extent(i);
        }
    }
    for (auto [ia, ib] : axes) {
        perm_a.push_back(ia);
        perm_b.push_back(ib);
        inner *= a.extent(ia);
    }
    for (Index i = 0; i < b.rank(); ++i) {
        if (!b_paired[static_cast<std::size_t>(i)]) {
            perm_b.push_back(i);
            out_shape.push_back(b.extent(i));
            free_b *= b.extent(i);
        }
    }

    const DenseTensor<Scalar> ap = a.permuted(perm_a);
    const DenseTensor<Scalar> bp = b.permuted(perm_b);
    using ConstMap = Eigen::Map<const RowMatrix<Scalar>>;
    ConstMap am(ap.data().data(), free_a, inner);
    ConstMap bm(bp.data().data(), inner, free_b);

    DenseTensor<Scalar> out = out_shape.empty() ? DenseTensor<Scalar>() : DenseTensor<Scalar>(out_shape);
    Eigen::Map<RowMatrix<Scalar>> om(out.data().data(), free_a, free_b);
    om.noalias() = am * bm;
    return out;
}

struct TruncationReport {
    Index kept = 0;
    double discarded_weight = 0.0;
    std::vector<double> spectrum;
};

template <typename Scalar>
struct SvdResult {
    DenseTensor<Scalar> u;  // rows x kept, orthonormal columns
    std::vector<Scalar> s;  // kept singular values, non-increasing
    DenseTensor<Scalar> v;  // cols x kept, orthonormal columns
    TruncationReport report;
};

namespace detail {

template <typename Scalar>
void require_finite(const DenseTensor<Scalar>& m, const char* what) {
    if (!m.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
}

template <typename Scalar>
void require_matrix(const DenseTensor<Scalar>& m, const char* what) {
    if (m.rank() != 2) throw DimensionError(std::string(what) + ": expected a rank-2 tensor");
}

/// Number of singular values to keep given the full squared weight.
template <typename Scalar>
Index kept_count(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& sv, double total_weight, Index chi_max,
                 double cutoff) {
    Index count = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        const double w = static_cast<double>(sv(i) * sv(i));
        if (w > 0.0 && (total_weight <= 0.0 || w / total_weight > cutoff)) ++count;
    }
    return std::max<Index>(1, std::min(count, chi_max));
}

template <typename Scalar>
SvdResult<Scalar> assemble(const RowMatrix<Scalar>& u, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& sv,
                           const RowMatrix<Scalar>& v, Index kept, double total_weight) {
    SvdResult<Scalar> out;
    out.u = DenseTensor<Scalar>::from_matrix(u.leftCols(kept));
    out.v = DenseTensor<Scalar>::from_matrix(v.leftCols(kept));
    out.s.assign(sv.data(), sv.data() + kept);
    double kept_weight = 0.0;
    for (Index i = 0; i < kept; ++i) kept_weight += static_cast<double>(sv(i) * sv(i));
    out.report.kept = kept;
    out.report.discarded_weight = std::max(0.0, total_weight - kept_weight);
    out.report.spectrum.assign(out.s.begin(), out.s.end());
    return out;
}

}  // namespace detail

/// Truncated SVD m ~ U diag(S) V^T keeping at most `chi_max` singular values
/// and dropping those with sigma^2 / sum(sigma^2) <= cutoff.
template <typename Scalar>
SvdResult<Scalar> svd_truncate(const DenseTensor<Scalar>& m, Index chi_max, double cutoff = 1e-12) {
    detail::require_matrix(m, "svd_truncate");
    detail::require_finite(m, "svd_truncate");
    if (chi_max < 1) throw DomainError("svd_truncate: chi_max must be >= 1");
    if (cutoff < 0.0) throw DomainError("svd_truncate: cutoff must be >= 0");

    const RowMatrix<Scalar> a = m.matrix();
    Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(a, Eigen::ComputeThinU |
                                                                                     Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("svd_truncate: decomposition failed");
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sv = svd.singularValues();
    const double total = static_cast<double>(sv.squaredNorm());
    const Index kept = detail::kept_count(sv, total, chi_max, cutoff);
    return detail::assemble<Scalar>(svd.matrixU(), sv, svd.matrixV(), kept, total);
}

/// Randomized range-finder SVD (Halko-Martinsson-Tropp) for the leading
/// `chi_max` triplets. U diag(S) V^T is the orthogonal projection of m onto
/// span(U), so the reported discarded weight ||m||^2 - sum S^2 equals the
/// reconstruction error exactly; only optimality of span(U) is approximate.
/// Falls back to the exact SVD when the sketch would not be much smaller than m.
template <typename Scalar>
SvdResult<Scalar> svd_truncate_randomized(const DenseTensor<Scalar>& m, Index chi_max, double cutoff,
                                          std::uint64_t seed, Index oversample = 10, int power_iters = 2) {
    detail::require_matrix(m, "svd_truncate_randomized");
    const Index rows = m.extent(0), cols = m.extent(1);
    const Index sketch = chi_max + oversample;
    if (2 * sketch > std::min(rows, cols)) return svd_truncate(m, chi_max, cutoff);
    detail::require_finite(m, "svd_truncate_randomized");
    if (chi_max < 1) throw DomainError("svd_truncate_randomized: chi_max must be >= 1");

    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const auto a = m.matrix();
    const double total = static_cast<double>(a.squaredNorm());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat omega(cols, sketch);
    for (Index j = 0; j < sketch; ++j)
        for (Index i = 0; i < cols; ++i) omega(i, j) = static_cast<Scalar>(normal(rng));

    Mat y = a * omega;
    Mat q = Eigen::HouseholderQR<Mat>(y).householderQ() * Mat::Identity(rows, sketch);
    for (int it = 0; it < power_iters; ++it) {
        Mat z = a.transpose() * q;
        Mat qz = Eigen::HouseholderQR<Mat>(z).householderQ() * Mat::Identity(cols, sketch);
        y.noalias() = a * qz;
        q = Eigen::HouseholderQR<Mat>(y).householderQ() * Mat::Identity(rows, sketch);
    }
    const Mat small = q.transpose() * a;
    Eigen::BDCSVD<Mat> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("svd_truncate_randomized: decomposition failed");
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sv = svd.singularValues();
    const Index kept = detail::kept_count(sv, total, chi_max, cutoff);
    const RowMatrix<Scalar> u = q * svd.matrixU();
    return detail::assemble<Scalar>(u, sv, svd.matrixV(), kept, total);
}

template <typename Scalar>
struct QrResult {
    DenseTensor<Scalar> q;  // rows x k, orthonormal columns, k = min(rows, cols)
    DenseTensor<Scalar> r;  // k x cols
};

/// Thin QR factorization m = Q R.
template <typename Scalar>
QrResult<Scalar> qr_orthogonalize(const DenseTensor<Scalar>& m) {
    detail::require_matrix(m, "qr_orthogonalize");
    detail::require_finite(m, "qr_orthogonalize");
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Index rows = m.extent(0), cols = m.extent(1), k = std::min(rows, cols);
    const Mat a = m.matrix();
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(rows, k);
    Mat r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    // Fix the sign gauge so that diag(R) >= 0; the identity then maps to itself.
    for (Index i = 0; i < k; ++i) {
        if (r(i, i) < Scalar(0)) {
            r.row(i) *= Scalar(-1);
            q.col(i) *= Scalar(-1);
        }
    }
    return {DenseTensor<Scalar>::from_matrix(q), DenseTensor<Scalar>::from_matrix(r)};
}

}  // namespace mpsts
