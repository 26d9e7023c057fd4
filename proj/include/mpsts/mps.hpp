#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "mpsts/encoding.hpp"
#include "mpsts/tensor.hpp"

namespace mpsts {

/// Open-boundary matrix-product state over T sites.
///
/// Every site is stored as a rank-4 tensor (label, chi_left, d, chi_right).
/// The label extent is 1 on every site except `label_site()`, where it is L.
/// Left/right orthogonality treats the label index as part of the fused
/// (label, chi_left, d) row index, so the norm sums over labels.
class MPS {
public:
    MPS() = default;
    MPS(std::vector<Tensor> sites, Index label_site, std::optional<Index> ortho_center = std::nullopt);

    [[nodiscard]] Index length() const noexcept { return static_cast<Index>(sites_.size()); }
    [[nodiscard]] Index phys_dim() const noexcept { return sites_.empty() ? 0 : sites_.front().extent(2); }
    [[nodiscard]] Index label_dim() const { return sites_.at(static_cast<std::size_t>(label_site_)).extent(0); }
    [[nodiscard]] Index label_site() const noexcept { return label_site_; }
    [[nodiscard]] std::optional<Index> ortho_center() const noexcept { return center_; }
    /// Extent of the bond to the right of site t.
    [[nodiscard]] Index bond_dim(Index t) const { return site(t).extent(3); }
    [[nodiscard]] Index max_bond_dim() const;

    [[nodiscard]] const Tensor& site(Index t) const { return sites_.at(static_cast<std::size_t>(t)); }
    [[nodiscard]] const std::vector<Tensor>& sites() const noexcept { return sites_; }

    /// Replaces a site; clears the orthogonality center.
    void set_site(Index t, Tensor tensor);
    /// Replaces two adjacent sites and moves the label (used by the sweep).
    void set_pair(Index t, Tensor left, Tensor right, Index label_site, std::optional<Index> center);
    void set_center(std::optional<Index> center) noexcept { center_ = center; }

    /// Throws DimensionError if the chain is inconsistent.
    void validate() const;

private:
    std::vector<Tensor> sites_;
    Index label_site_ = 0;
    std::optional<Index> center_;
};

/// Random Gaussian MPS with the label on the rightmost site, left-canonical
/// with the orthogonality center on the rightmost site and unit norm.
MPS random_init(Index length, Index d, Index chi_init, Index labels, std::uint64_t seed);

/// Mixed-canonical form centered on `center`, normalized to unit norm.
MPS canonicalize(MPS mps, Index center);

/// <W|W>, summed over the label index.
double norm_squared(const MPS& mps);

/// Left-orthogonal check: sum over (label, chi_left, d) of A A equals identity.
bool is_left_orthogonal(const Tensor& site, double tol = 1e-10);
/// Right-orthogonal check: sum over (label, d, chi_right) of A A equals identity.
bool is_right_orthogonal(const Tensor& site, double tol = 1e-10);

/// Label-resolved overlap expressed as values * exp(log_scale) to survive
/// long chains without under/overflow.
struct ScaledOverlap {
    Eigen::VectorXd values;
    double log_scale = 0.0;
    [[nodiscard]] Eigen::VectorXd unscaled() const { return values * std::exp(log_scale); }
};

ScaledOverlap overlap_scaled(const MPS& mps, const EncodedSeries& enc);

/// f^l = W^l . Phi(x) for every label l.
Eigen::VectorXd overlap(const MPS& mps, const EncodedSeries& enc);

/// Born-rule densities |f^l|^2 (unnormalized across labels).
Eigen::VectorXd density(const MPS& mps, const EncodedSeries& enc);

/// The single-class model for label `label` (0-based), normalized and
/// left-canonical with the center on the rightmost site.
MPS class_slice(const MPS& mps, Index label);

}  // namespace mpsts
