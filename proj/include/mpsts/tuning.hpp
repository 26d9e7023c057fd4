#pragma once

#include <Eigen/Dense>

#include <vector>

#include "mpsts/config.hpp"
#include "mpsts/data.hpp"
#include "mpsts/model_io.hpp"

namespace mpsts {

/// 5%, 15%, ..., 95%.
std::vector<double> default_missing_grid();

TrainConfig with_point(TrainConfig base, const TrialPoint& point);

/// Per-instance MAE at one missing fraction, for the MPS and, when a
/// training set is given, for the 1-NN baseline. Instances whose
/// imputation raises a ProbabilityError are left out of `mps` and counted.
struct ImputationScores {
    double pct = 0.0;
    std::vector<double> mps;
    std::vector<double> nn1;
    Index failures = 0;

    [[nodiscard]] double mps_mean() const;
    [[nodiscard]] double nn1_mean() const;
};

ImputationScores score_imputation(const ModelBundle& bundle, const Dataset& truth, double pct, std::uint64_t mask_seed,
                                  const Dataset* nn1_train = nullptr);

/// Mean MPS MAE over several missing fractions.
double mean_imputation_mae(const ModelBundle& bundle, const Dataset& truth, const std::vector<double>& pcts,
                           std::uint64_t mask_seed);

/// Cross-validated objectives for lhs_search. Fold f trains on the other
/// folds of a shuffled k-fold partition (k = max(2, folds)).
Objective imputation_objective(const Dataset& train, const TrainConfig& base, Index folds, std::vector<double> pcts,
                               std::uint64_t seed);
/// 1 - validation accuracy.
Objective classification_objective(const Dataset& train, const TrainConfig& base, Index folds, std::uint64_t seed);

}  // namespace mpsts
