#include "mpsts/classifier.hpp"

#include <cmath>
#include <ostream>

#include "mpsts/config.hpp"
#include "mpsts/errors.hpp"

namespace mpsts {

Index argmax_lowest(const Eigen::VectorXd& scores) {
    Index best = 0;
    for (Index l = 1; l < scores.size(); ++l)
        if (scores(l) > scores(best)) best = l;
    return best;
}

Prediction predict(const ModelBundle& bundle, const Eigen::VectorXd& series) {
    const MPS& mps = bundle.mps;
    if (mps.label_dim() < 2) throw ConfigError("predict: model has a single class");
    if (series.size() != mps.length()) {
        throw DimensionError("predict: series length " + std::to_string(series.size()) + " but model length " +
                             std::to_string(mps.length()));
    }
    if (!series.allFinite()) throw NumericError("predict: series has non-finite values");
    const PreprocessedSeries p =
        apply_preprocessor(bundle.preprocessor, std::span<const double>(series.data(), series.size()));
    const EncodedSeries enc = encode_series(std::span<const double>(p.values.data(), p.values.size()), mps.phys_dim());
    const ScaledOverlap o = overlap_scaled(mps, enc);
    Eigen::VectorXd scores = o.values.array().square().matrix();
    const double total = scores.sum();
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("predict: every class has zero density");
    scores /= total;
    return {static_cast<int>(argmax_lowest(scores)) + 1, scores};
}

std::vector<Prediction> predict_all(const ModelBundle& bundle, const Dataset& data) {
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(data.size()));
    for (Index n = 0; n < data.size(); ++n) out.push_back(predict(bundle, data.values.row(n).transpose()));
    return out;
}

double accuracy(const std::vector<Prediction>& predictions, const std::vector<int>& labels) {
    if (predictions.empty()) throw DomainError("accuracy: empty test set");
    if (labels.size() != predictions.size()) throw DimensionError("accuracy: one label per prediction required");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i].label == labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate_accuracy(const ModelBundle& bundle, const Dataset& test) {
    if (test.size() == 0) throw DomainError("evaluate_accuracy: empty test set");
    if (!test.has_labels()) throw DomainError("evaluate_accuracy: test set has no labels");
    return accuracy(predict_all(bundle, test), test.labels);
}

void write_predictions_csv(const std::vector<Prediction>& predictions, std::ostream& out) {
    const Index L = predictions.empty() ? 0 : predictions.front().scores.size();
    out << "instance_id,predicted_label";
    for (Index l = 1; l <= L; ++l) out << ",score_" << l;
    out << '\n';
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out << i << ',' << predictions[i].label;
        for (Index l = 0; l < predictions[i].scores.size(); ++l) out << ',' << format_double(predictions[i].scores(l));
        out << '\n';
    }
}

}  // namespace mpsts
