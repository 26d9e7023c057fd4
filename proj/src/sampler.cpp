#include "mpsts/sampler.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "mpsts/errors.hpp"

namespace mpsts {

void SamplerConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("sampler: alpha must be > 0");
    if (max_rejections < 1) throw ConfigError("sampler: max_rejections must be >= 1");
    if (n_trajectories < 0) throw ConfigError("sampler: n_trajectories must be >= 0");
}

double inverse_cdf_sample(const FeatureMap& fmap, const RDM& rdm, double u) {
    return GridDistribution(fmap, rdm.matrix).inverse_cdf(u);
}

namespace {

struct Prepared {
    MPS model;
    const MPS* mps = nullptr;
    Eigen::VectorXd prefix_encoded;
    PreprocessedSeries prep;
};

Prepared prepare(const ModelBundle& bundle, const Eigen::VectorXd& prefix, int label) {
    Prepared p;
    const MPS& mps = bundle.mps;
    const Index T = mps.length();
    if (prefix.size() > T) throw DimensionError("sampler: prefix longer than the model");
    if (!prefix.allFinite()) throw NumericError("sampler: prefix values must be finite");
    const bool direct = mps.label_dim() == 1 && mps.ortho_center() == T - 1;
    if (!direct) p.model = conditioning_model(mps, label);
    p.mps = direct ? &mps : &p.model;
    if (prefix.size() > 0) {
        p.prep = apply_preprocessor(bundle.preprocessor, std::span<const double>(prefix.data(), prefix.size()));
        p.prefix_encoded = p.prep.values;
    }
    return p;
}

ConditionalWalker make_walker(const Prepared& p) {
    const Index T = p.mps->length();
    const Index k = p.prefix_encoded.size();
    MaskVector conditioned = MaskVector::Constant(T, false);
    Eigen::VectorXd values = Eigen::VectorXd::Zero(T);
    conditioned.head(k).setConstant(true);
    values.head(k) = p.prefix_encoded;
    return ConditionalWalker(*p.mps, conditioned, values);
}

Trajectory run(const ModelBundle& bundle, const SamplerConfig& config, Index index, const Eigen::VectorXd& prefix,
               const Prepared& p, ConditionalWalker walker) {
    const Index T = p.mps->length();
    const Index k = prefix.size();
    const FeatureMap& fmap = bundle.feature_map();
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    Trajectory out;
    out.series.resize(T);
    out.encoded.resize(T);
    out.rejections.assign(static_cast<std::size_t>(T), 0);
    out.fallback = MaskVector::Constant(T, false);
    for (Index t = 0; t < k; ++t) {
        out.series(t) = prefix(t);
        out.encoded(t) = p.prefix_encoded(t);
        walker.advance(p.prefix_encoded(t));
    }
    for (Index t = k; t < T; ++t) {
        const GridDistribution dist(fmap, walker.rdm().matrix);
        const double m = dist.median();
        const double bound = config.alpha * dist.wmad(m);
        double x = m;
        bool accepted = false;
        for (Index draw = 0; draw < config.max_rejections; ++draw) {
            const double candidate = dist.inverse_cdf(uniform(rng));
            if (std::abs(candidate - m) <= bound) {
                x = candidate;
                accepted = true;
                break;
            }
            ++out.rejections[static_cast<std::size_t>(t)];
        }
        out.fallback(t) = !accepted;
        out.encoded(t) = x;
        out.series(t) = invert_preprocessor(bundle.preprocessor, p.prep.unrepair(x, bundle.preprocessor.a));
        walker.advance(x);
    }
    return out;
}

}  // namespace

Trajectory sample_trajectory(const ModelBundle& bundle, const SamplerConfig& config, Index index,
                             const Eigen::VectorXd& prefix, int label) {
    config.validate();
    const Prepared p = prepare(bundle, prefix, label);
    return run(bundle, config, index, prefix, p, make_walker(p));
}

SampledDataset generate_dataset(const ModelBundle& bundle, const SamplerConfig& config, const Eigen::VectorXd& prefix,
                                int label) {
    config.validate();
    const Index T = bundle.mps.length();
    SampledDataset out;
    out.data.values.resize(config.n_trajectories, T);
    out.rejections_per_site.assign(static_cast<std::size_t>(T), 0);
    out.fallbacks_per_site.assign(static_cast<std::size_t>(T), 0);
    if (config.n_trajectories == 0) return out;
    const Prepared p = prepare(bundle, prefix, label);
    const ConditionalWalker walker = make_walker(p);
    for (Index i = 0; i < config.n_trajectories; ++i) {
        const Trajectory tr = run(bundle, config, i, prefix, p, walker);
        out.data.values.row(i) = tr.series.transpose();
        for (Index t = 0; t < T; ++t) {
            out.rejections_per_site[static_cast<std::size_t>(t)] += tr.rejections[static_cast<std::size_t>(t)];
            if (tr.fallback(t)) ++out.fallbacks_per_site[static_cast<std::size_t>(t)];
        }
    }
    return out;
}

void write_sampler_metadata(const SampledDataset& sampled, std::ostream& out) {
    out << "site,rejections,fallbacks\n";
    for (std::size_t t = 0; t < sampled.rejections_per_site.size(); ++t) {
        out << t << ',' << sampled.rejections_per_site[t] << ',' << sampled.fallbacks_per_site[t] << '\n';
    }
}

}  // namespace mpsts
