#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mpsts/config.hpp"
#include "mpsts/data.hpp"
#include "mpsts/model_io.hpp"
#include "mpsts/mps.hpp"

namespace mpsts {

struct TrainReport {
    double initial_loss = 0.0;
    std::vector<double> loss_per_sweep;
    double final_loss = 0.0;
    Index sweeps_run = 0;
    Index skipped_updates = 0;
    double max_discarded_weight = 0.0;
};

/// -(1/N) sum_n log |W^{l_n} . Phi(x_n)|^2 with 1-based labels (an empty
/// label list means every instance belongs to class 1). Returns +inf when
/// some instance has zero overlap.
double nll_loss(const MPS& mps, const std::vector<EncodedSeries>& batch, std::span<const int> labels = {});

/// Per-instance data seen by one two-site bond (t, t+1). Row n of `left`
/// holds the contraction of sites 0..t-1 with instance n, row n of `right`
/// sites t+2..T-1. Rows may carry arbitrary positive scale factors.
struct BondEnvironment {
    RowMatrix<double> left;       // N x chi_left
    RowMatrix<double> phi_left;   // N x d, features at site t
    RowMatrix<double> phi_right;  // N x d, features at site t+1
    RowMatrix<double> right;      // N x chi_right
    std::vector<Index> labels;    // 0-based, empty = all class 0
};

/// Two sites merged into the bond tensor (L, chi_left, d, d, chi_right).
/// The label must sit on one of the two sites.
Tensor merge_bond(const MPS& mps, Index t);

/// Label-resolved overlaps f_n = W^{l_n}.Phi(x_n) of every instance, up to
/// the row scales of the environment.
Eigen::VectorXd bond_overlaps(const Tensor& bond, const BondEnvironment& env);

/// Gradient of the mean NLL with respect to the bond tensor. Throws
/// NumericError if any overlap vanishes or the result is not finite.
Tensor bond_gradient(const Tensor& bond, const BondEnvironment& env);

/// B - eta g/|g| rescaled to unit norm; empty when the gradient is zero.
std::optional<Tensor> tsgo_update(const Tensor& bond, const Tensor& gradient, double eta);

enum class SweepDirection { LeftToRight, RightToLeft };

struct BondSplit {
    Tensor left;   // (L or 1, chi_left, d, k)
    Tensor right;  // (1 or L, k, d, chi_right)
    TruncationReport report;
};

/// SVD split of a bond tensor. Singular values and the label index go to
/// the right site when sweeping left-to-right and to the left site
/// otherwise; the moving center is rescaled to unit norm. A non-zero
/// `seed` allows a randomized SVD when chi_max is much smaller than the
/// matrix.
BondSplit split_bond(const Tensor& bond, Index chi_max, double cutoff, SweepDirection direction,
                     std::uint64_t seed = 0, bool normalize = true);

/// Two-site sweeps starting from `init` (label and center on the rightmost
/// site). Labels are 1-based; empty means a single class.
std::pair<MPS, TrainReport> train_mps(MPS init, const std::vector<EncodedSeries>& batch, std::span<const int> labels,
                                      const TrainConfig& config);

struct FitResult {
    ModelBundle bundle;
    TrainReport report;
};

/// Fits the preprocessor on `train`, encodes every instance and trains.
/// Instances that cannot be encoded are rejected with their index.
FitResult fit(const Dataset& train, const TrainConfig& config);

void write_loss_csv(const TrainReport& report, std::ostream& out);

}  // namespace mpsts
