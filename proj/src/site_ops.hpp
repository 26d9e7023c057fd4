#pragma once

#include <Eigen/Dense>

#include "mpsts/tensor.hpp"

namespace mpsts::site_ops {

using SliceMap = Eigen::Map<const RowMatrix<double>, 0, Eigen::OuterStride<>>;

/// A[0, :, s, :] as a chi_left x chi_right view.
inline SliceMap slice(const Tensor& site, Index s) {
    const Index cl = site.extent(1), d = site.extent(2), cr = site.extent(3);
    return SliceMap(site.data().data() + s * cr, cl, cr, Eigen::OuterStride<>(d * cr));
}

/// sum_s A_s^T E A_s
inline Eigen::MatrixXd transfer_left(const Tensor& site, const Eigen::MatrixXd& e) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(site.extent(3), site.extent(3));
    for (Index s = 0; s < site.extent(2); ++s) {
        const auto a = slice(site, s);
        out.noalias() += a.transpose() * (e * a);
    }
    return out;
}

/// sum_s A_s E A_s^T
inline Eigen::MatrixXd transfer_right(const Tensor& site, const Eigen::MatrixXd& e) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(site.extent(1), site.extent(1));
    for (Index s = 0; s < site.extent(2); ++s) {
        const auto a = slice(site, s);
        out.noalias() += a * (e * a.transpose());
    }
    return out;
}

/// sum_s phi_s A_s
inline Eigen::MatrixXd contract_feature(const Tensor& site, const Eigen::VectorXd& phi) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(site.extent(1), site.extent(3));
    for (Index s = 0; s < site.extent(2); ++s) out += phi(s) * slice(site, s);
    return out;
}

}  // namespace mpsts::site_ops
