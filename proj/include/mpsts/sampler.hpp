#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mpsts/data.hpp"
#include "mpsts/imputer.hpp"
#include "mpsts/model_io.hpp"

namespace mpsts {

struct SamplerConfig {
    double alpha = 2.0;  // may be +inf
    Index max_rejections = 100;
    std::uint64_t seed = 1;
    Index n_trajectories = 0;

    void validate() const;
};

/// x with F(x) = u under phi^T rho phi.
double inverse_cdf_sample(const FeatureMap& fmap, const RDM& rdm, double u);

struct Trajectory {
    Eigen::VectorXd series;   // data domain
    Eigen::VectorXd encoded;  // encoding domain
    std::vector<Index> rejections;  // rejected draws per site
    MaskVector fallback;            // true where the median was used
};

/// Draws one trajectory. `index` selects an independent random stream
/// derived from config.seed. A non-empty `prefix` fixes the first
/// prefix.size() values (data domain), which are returned unchanged.
Trajectory sample_trajectory(const ModelBundle& bundle, const SamplerConfig& config, Index index = 0,
                             const Eigen::VectorXd& prefix = {}, int label = 1);

struct SampledDataset {
    Dataset data;
    std::vector<Index> rejections_per_site;
    std::vector<Index> fallbacks_per_site;
};

/// config.n_trajectories trajectories, trajectory i drawn from stream i.
SampledDataset generate_dataset(const ModelBundle& bundle, const SamplerConfig& config,
                                const Eigen::VectorXd& prefix = {}, int label = 1);

/// site,rejections,fallbacks
void write_sampler_metadata(const SampledDataset& sampled, std::ostream& out);

}  // namespace mpsts
