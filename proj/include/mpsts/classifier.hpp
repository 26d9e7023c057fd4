#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

#include "mpsts/data.hpp"
#include "mpsts/model_io.hpp"

namespace mpsts {

struct Prediction {
    int label = 1;             // 1-based
    Eigen::VectorXd scores;    // |f^l|^2 normalized to sum 1
};

/// Scores every class of a label-indexed model. ConfigError for L = 1.
Prediction predict(const ModelBundle& bundle, const Eigen::VectorXd& series);

/// Index of the largest score, lowest index on ties (0-based).
Index argmax_lowest(const Eigen::VectorXd& scores);

std::vector<Prediction> predict_all(const ModelBundle& bundle, const Dataset& data);

/// Fraction of labelled instances predicted correctly.
double evaluate_accuracy(const ModelBundle& bundle, const Dataset& test);
double accuracy(const std::vector<Prediction>& predictions, const std::vector<int>& labels);

/// instance_id,predicted_label,score_1..score_L
void write_predictions_csv(const std::vector<Prediction>& predictions, std::ostream& out);

}  // namespace mpsts
