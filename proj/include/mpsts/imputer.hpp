#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "mpsts/data.hpp"
#include "mpsts/encoding.hpp"
#include "mpsts/model_io.hpp"
#include "mpsts/mps.hpp"

namespace mpsts {

inline constexpr double kProbabilityFloor = 1e-14;

/// d x d symmetric positive semidefinite unit-trace single-site state.
struct RDM {
    Eigen::MatrixXd matrix;

    /// Symmetrizes and rescales to unit trace.
    static RDM from_unnormalized(const Eigen::MatrixXd& m);
    [[nodiscard]] bool is_valid(double tol = 1e-10) const;
};

/// An MPS with some sites measured (projected and removed). The remaining
/// tensors form a normalized state over the unmeasured sites.
class ConditionedState {
public:
    /// Uses class `label` (1-based) of a label-indexed model.
    explicit ConditionedState(const MPS& mps, int label = 1);

    [[nodiscard]] Index length() const noexcept { return static_cast<Index>(slot_.size()); }
    [[nodiscard]] Index remaining() const noexcept { return static_cast<Index>(sites_.size()); }
    [[nodiscard]] bool measured(Index site) const { return slot_.at(static_cast<std::size_t>(site)) < 0; }
    /// The scalar left once every site is measured.
    [[nodiscard]] double amplitude() const noexcept { return scalar_; }
    /// <psi|psi> over the unmeasured sites (amplitude^2 when none remain).
    [[nodiscard]] double norm_squared() const;

    friend RDM single_site_rdm(const ConditionedState& state, Index site);
    friend ConditionedState project_site(const ConditionedState& state, Index site, double x);

private:
    ConditionedState() = default;
    [[nodiscard]] Index slot(Index site) const;

    std::vector<Tensor> sites_;  // (1, chi_l, d, chi_r) per unmeasured site
    std::vector<Index> slot_;    // original site -> position in sites_, -1 if measured
    double scalar_ = 1.0;
};

/// Reduced density matrix of an unmeasured site, all other unmeasured sites traced.
RDM single_site_rdm(const ConditionedState& state, Index site);

/// phi(x)^T rho phi(x) for an unmeasured site.
double marginal_density(const ConditionedState& state, Index site, double x);

/// Projects `site` onto x, rescales by 1/sqrt(P(x)) and removes it.
/// Throws ProbabilityError when P(x) is below the floor.
ConditionedState project_site(const ConditionedState& state, Index site, double x);

/// F(x) for the distribution phi^T rho phi on the feature map's grid.
double conditional_cdf(const FeatureMap& fmap, const RDM& rdm, double x);

struct MedianEstimate {
    double x = 0.0;
    double wmad = 0.0;
};
MedianEstimate median_estimate(const FeatureMap& fmap, const RDM& rdm);

/// Left-to-right conditioning cascade over a left-canonical single-class
/// MPS. Sites flagged in `conditioned` are projected onto their values in
/// the right environments; every other site to the right of the walker is
/// traced. `advance` fixes the current site and moves one step right.
class ConditionalWalker {
public:
    ConditionalWalker(const MPS& mps, const MaskVector& conditioned, const Eigen::VectorXd& values);

    [[nodiscard]] Index position() const noexcept { return t_; }
    [[nodiscard]] Index length() const noexcept { return static_cast<Index>(sites_.size()); }
    /// State of the current site given everything fixed so far and the
    /// conditioned sites to the right.
    [[nodiscard]] RDM rdm() const;
    /// Fixes the current site to x; returns its conditional density.
    double advance(double x);

private:
    std::vector<Tensor> sites_;
    std::vector<Eigen::MatrixXd> env_;  // env_[t]: sites t..T-1, unit trace
    Eigen::RowVectorXd v_;
    Index t_ = 0;
    Index d_ = 0;
};

struct ImputationResult {
    Eigen::VectorXd series;       // data domain
    MaskVector imputed_mask;
    Eigen::VectorXd uncertainty;  // WMAD at imputed sites, NaN elsewhere
    bool uncertainty_in_encoding_domain = false;
    double conditional_log_density = 0.0;
    Eigen::VectorXd encoded;      // encoding-domain values after imputation
};

/// Sequential median imputation of every unobserved site, earliest first.
ImputationResult impute(const ModelBundle& bundle, const Eigen::VectorXd& series, const MaskVector& observed,
                        int label = 1);

/// The single-class, left-canonical MPS used for conditioning.
MPS conditioning_model(const MPS& mps, int label = 1);

}  // namespace mpsts
