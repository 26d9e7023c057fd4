#pragma once

#include <Eigen/Dense>

#include <iosfwd>

#include "mpsts/data.hpp"
#include "mpsts/imputer.hpp"
#include "mpsts/model_io.hpp"

namespace mpsts {

inline constexpr double kEigenvalueFloor = 1e-12;

/// Von Neumann entropy of a single-site state, in nats.
double see(const RDM& rdm);

/// Row k: entropy of every site after measuring sites 0..k-1 (NaN for
/// measured sites). residual(k) is the mean over the unmeasured sites.
struct SEEProfile {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd residual;
};

SEEProfile conditional_see_profile(const ModelBundle& bundle, const Eigen::VectorXd& series, int label = 1);

struct MeanProfile {
    SEEProfile profile;
    Index used = 0;
    Index skipped = 0;
};

/// Elementwise mean over instances; instances whose projection fails are
/// skipped. DomainError when none succeed.
MeanProfile dataset_mean_profile(const ModelBundle& bundle, const Dataset& data, int label = 1);

/// k,site,see (measured entries omitted)
void write_profile_csv(const SEEProfile& profile, std::ostream& out);
/// k,residual
void write_residual_csv(const SEEProfile& profile, std::ostream& out);

}  // namespace mpsts
