#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mpsts/tensor.hpp"

namespace mpsts {

using MaskVector = Eigen::Array<bool, Eigen::Dynamic, 1>;
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// N x T amplitudes with optional 1-based labels and an observation mask
/// (true = observed). An empty mask means everything is observed.
struct Dataset {
    Eigen::MatrixXd values;
    std::vector<int> labels;
    MaskMatrix mask;

    [[nodiscard]] Index size() const noexcept { return values.rows(); }
    [[nodiscard]] Index length() const noexcept { return values.cols(); }
    [[nodiscard]] bool has_labels() const noexcept { return !labels.empty(); }
    [[nodiscard]] bool has_mask() const noexcept { return mask.size() != 0; }
    [[nodiscard]] int num_classes() const;
    [[nodiscard]] MaskVector observed(Index row) const;
    [[nodiscard]] Dataset subset(const std::vector<Index>& rows) const;

    /// Throws DimensionError/DomainError when labels or mask are inconsistent.
    void validate() const;
};

/// Header `x1,...,xT[,label]`; `NaN` or an empty cell marks a missing value.
Dataset read_csv(std::istream& in);
Dataset read_csv(const std::string& path);
/// Unobserved entries are written as NaN.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);

struct NTSParams {
    std::vector<double> tau_choices{20.0};
    std::vector<double> m_choices{3.0};
    double sigma = 0.1;
    Index T = 100;
    Index N = 100;
    std::uint64_t seed = 1;
    /// Empty: phase uniform on [0, 2 pi). Otherwise drawn from this set.
    std::vector<double> phases;
};

/// x_t = sin(2 pi t / tau + psi) + m t / T + sigma n_t for t = 1..T. When
/// more than one period is offered the label is 1 + the period's index.
Dataset generate_nts(const NTSParams& params);

/// One contiguous block of round(pct T) missing samples per instance.
Dataset mask_contiguous(const Dataset& data, double pct_missing, std::uint64_t seed);
Index missing_block_length(Index T, double pct_missing);

/// Mean |actual - imputed| over entries where `observed` is false.
double mae(const Eigen::VectorXd& actual, const Eigen::VectorXd& imputed, const MaskVector& observed);

/// Fills unobserved entries from the training instance nearest in Euclidean
/// distance over the observed positions (ties go to the lowest index).
Eigen::VectorXd nn1_impute(const Dataset& train, const Eigen::VectorXd& instance, const MaskVector& observed);

struct Split {
    std::vector<Index> train;
    std::vector<Index> test;
};

/// `n_folds` random train/test splits of all instances keeping `n_train`
/// training instances (class proportions preserved when stratified).
std::vector<Split> resample_folds(Index n_instances, Index n_train, const std::vector<int>& labels, Index n_folds,
                                  bool stratified, std::uint64_t seed);
/// Shuffled k-fold partition used for cross-validation.
std::vector<Split> kfold(Index n_instances, Index k, std::uint64_t seed);

struct SearchSpace {
    Index d_min = 5, d_max = 15;
    double eta_min = 0.001, eta_max = 0.5;
    Index chi_min = 20, chi_max = 40;
    Index n_samples = 10;
    Index folds = 5;
    void validate() const;
};

struct TrialPoint {
    Index d = 0;
    double eta = 0.0;
    Index chi_max = 0;
};

struct TrialRecord {
    Index trial_id = 0;
    TrialPoint point;
    Index fold = 0;
    double objective = 0.0;  // NaN when the trial failed
};

struct SearchResult {
    TrialPoint best;
    double best_objective = 0.0;
    std::vector<TrialRecord> log;
};

/// n x dims Latin hypercube on [0,1)^dims.
Eigen::MatrixXd latin_hypercube(Index n, Index dims, std::uint64_t seed);
TrialPoint lhs_point(const SearchSpace& space, const Eigen::RowVectorXd& unit);

using Objective = std::function<double(const TrialPoint&, Index fold)>;

/// Minimizes the fold-mean objective over a Latin hypercube of the space.
/// A trial whose objective throws or returns a non-finite value is marked
/// failed and skipped.
SearchResult lhs_search(const SearchSpace& space, const Objective& objective, std::uint64_t seed);

void write_trial_log(const std::vector<TrialRecord>& log, std::ostream& out);

}  // namespace mpsts
