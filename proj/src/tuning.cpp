#include "mpsts/tuning.hpp"

#include <algorithm>
#include <numeric>

#include "mpsts/classifier.hpp"
#include "mpsts/errors.hpp"
#include "mpsts/imputer.hpp"
#include "mpsts/trainer.hpp"

namespace mpsts {

std::vector<double> default_missing_grid() {
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) out.push_back(0.05 + 0.1 * i);
    return out;
}

TrainConfig with_point(TrainConfig base, const TrialPoint& point) {
    base.d = point.d;
    base.eta = point.eta;
    base.chi_max = point.chi_max;
    base.chi_init = std::min(base.chi_init, base.chi_max);
    return base;
}

namespace {

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("mean of an empty score list");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<Split> cv_splits(Index n, Index folds, std::uint64_t seed) { return kfold(n, std::max<Index>(2, folds), seed); }

}  // namespace

double ImputationScores::mps_mean() const { return mean_of(mps); }
double ImputationScores::nn1_mean() const { return mean_of(nn1); }

ImputationScores score_imputation(const ModelBundle& bundle, const Dataset& truth, double pct, std::uint64_t mask_seed,
                                  const Dataset* nn1_train) {
    const Dataset masked = mask_contiguous(truth, pct, mask_seed);
    ImputationScores out;
    out.pct = pct;
    for (Index n = 0; n < truth.size(); ++n) {
        const Eigen::VectorXd actual = truth.values.row(n).transpose();
        const MaskVector observed = masked.observed(n);
        try {
            const ImputationResult r = impute(bundle, actual, observed);
            out.mps.push_back(mae(actual, r.series, observed));
        } catch (const ProbabilityError&) {
            ++out.failures;
        }
        if (nn1_train) out.nn1.push_back(mae(actual, nn1_impute(*nn1_train, actual, observed), observed));
    }
    return out;
}

double mean_imputation_mae(const ModelBundle& bundle, const Dataset& truth, const std::vector<double>& pcts,
                           std::uint64_t mask_seed) {
    if (pcts.empty()) throw DomainError("mean_imputation_mae: no missing fractions");
    double sum = 0.0;
    for (std::size_t i = 0; i < pcts.size(); ++i) {
        const ImputationScores s = score_imputation(bundle, truth, pcts[i], mask_seed + i);
        if (s.failures > 0) throw NumericError("imputation failed on " + std::to_string(s.failures) + " instances");
        sum += s.mps_mean();
    }
    return sum / static_cast<double>(pcts.size());
}

Objective imputation_objective(const Dataset& train, const TrainConfig& base, Index folds, std::vector<double> pcts,
                               std::uint64_t seed) {
    auto splits = cv_splits(train.size(), folds, seed);
    return [train, base, splits = std::move(splits), pcts = std::move(pcts), seed](const TrialPoint& p, Index fold) {
        const Split& s = splits.at(static_cast<std::size_t>(fold));
        const FitResult fr = fit(train.subset(s.train), with_point(base, p));
        return mean_imputation_mae(fr.bundle, train.subset(s.test), pcts, seed);
    };
}

Objective classification_objective(const Dataset& train, const TrainConfig& base, Index folds, std::uint64_t seed) {
    if (!train.has_labels()) throw DomainError("classification objective: training data has no labels");
    auto splits = cv_splits(train.size(), folds, seed);
    return [train, base, splits = std::move(splits)](const TrialPoint& p, Index fold) {
        const Split& s = splits.at(static_cast<std::size_t>(fold));
        const FitResult fr = fit(train.subset(s.train), with_point(base, p));
        return 1.0 - evaluate_accuracy(fr.bundle, train.subset(s.test));
    };
}

}  // namespace mpsts
