#include "mpsts/imputer.hpp"

#include <cmath>
#include <limits>

#include "mpsts/errors.hpp"
#include "site_ops.hpp"

namespace mpsts {

using namespace site_ops;

namespace {

void unit_trace(Eigen::MatrixXd& m) {
    const double tr = m.trace();
    if (tr > 0.0 && std::isfinite(tr)) m /= tr;
}

}  // namespace

RDM RDM::from_unnormalized(const Eigen::MatrixXd& m) {
    const double tr = m.trace();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw NumericError("RDM: non-positive or non-finite trace");
    RDM r;
    r.matrix = (0.5 * (m + m.transpose())) / tr;
    return r;
}

bool RDM::is_valid(double tol) const {
    if (matrix.rows() != matrix.cols() || !matrix.allFinite()) return false;
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(matrix.trace() - 1.0) > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

MPS conditioning_model(const MPS& mps, int label) {
    if (label < 1 || label > mps.label_dim()) throw DomainError("class label " + std::to_string(label) + " out of range");
    if (mps.label_dim() > 1) return class_slice(mps, label - 1);
    if (mps.ortho_center() == mps.length() - 1) return mps;
    return canonicalize(mps, mps.length() - 1);
}

ConditionedState::ConditionedState(const MPS& mps, int label) {
    const MPS m = conditioning_model(mps, label);
    sites_ = m.sites();
    slot_.resize(sites_.size());
    for (std::size_t t = 0; t < slot_.size(); ++t) slot_[t] = static_cast<Index>(t);
}

Index ConditionedState::slot(Index site) const {
    if (site < 0 || site >= length()) throw DomainError("site " + std::to_string(site) + " out of range");
    const Index p = slot_[static_cast<std::size_t>(site)];
    if (p < 0) throw DomainError("site " + std::to_string(site) + " is already measured");
    return p;
}

double ConditionedState::norm_squared() const {
    if (sites_.empty()) return scalar_ * scalar_;
    Eigen::MatrixXd e = Eigen::MatrixXd::Ones(1, 1);
    for (const Tensor& s : sites_) e = transfer_left(s, e);
    return e(0, 0) * scalar_ * scalar_;
}

RDM single_site_rdm(const ConditionedState& state, Index site) {
    const Index p = state.slot(site);
    Eigen::MatrixXd left = Eigen::MatrixXd::Ones(1, 1);
    for (Index i = 0; i < p; ++i) {
        left = transfer_left(state.sites_[static_cast<std::size_t>(i)], left);
        unit_trace(left);
    }
    Eigen::MatrixXd right = Eigen::MatrixXd::Ones(1, 1);
    for (Index i = state.remaining() - 1; i > p; --i) {
        right = transfer_right(state.sites_[static_cast<std::size_t>(i)], right);
        unit_trace(right);
    }
    const Tensor& a = state.sites_[static_cast<std::size_t>(p)];
    const Index d = a.extent(2);
    std::vector<Eigen::MatrixXd> sandwiched;
    for (Index s = 0; s < d; ++s) sandwiched.emplace_back(left * slice(a, s) * right);
    Eigen::MatrixXd rho(d, d);
    for (Index s = 0; s < d; ++s)
        for (Index s2 = 0; s2 < d; ++s2) rho(s, s2) = slice(a, s).cwiseProduct(sandwiched[static_cast<std::size_t>(s2)]).sum();
    return RDM::from_unnormalized(rho);
}

double marginal_density(const ConditionedState& state, Index site, double x) {
    const RDM r = single_site_rdm(state, site);
    const Eigen::VectorXd phi = legendre_basis(x, r.matrix.rows());
    return phi.dot(r.matrix * phi);
}

ConditionedState project_site(const ConditionedState& state, Index site, double x) {
    const Index p = state.slot(site);
    const double prob = marginal_density(state, site, x);
    if (!(prob >= kProbabilityFloor)) {
        throw ProbabilityError("site " + std::to_string(site) + ": observed value has near-zero probability", static_cast<int>(site));
    }
    const Tensor& a = state.sites_[static_cast<std::size_t>(p)];
    Eigen::MatrixXd m = contract_feature(a, legendre_basis(x, a.extent(2))) / std::sqrt(prob);
    // The conditional norm scales with the state's own norm; keep it at one.
    m /= std::sqrt(state.norm_squared());

    ConditionedState out;
    out.slot_ = state.slot_;
    out.scalar_ = state.scalar_;
    out.slot_[static_cast<std::size_t>(site)] = -1;
    for (Index& s : out.slot_)
        if (s > p) --s;
    const Index n = state.remaining();
    for (Index i = 0; i < n; ++i)
        if (i != p) out.sites_.push_back(state.sites_[static_cast<std::size_t>(i)]);

    if (n == 1) {
        out.scalar_ *= m(0, 0);
    } else if (p > 0) {
        Tensor& left = out.sites_[static_cast<std::size_t>(p - 1)];
        const Shape sh = left.shape();
        Tensor merged(Shape{1, sh[1], sh[2], m.cols()});
        merged.matrix(3).noalias() = left.matrix(3) * m;
        left = std::move(merged);
    } else {
        Tensor& right = out.sites_[0];
        const Shape sh = right.shape();
        Tensor merged(Shape{1, m.rows(), sh[2], sh[3]});
        Eigen::Map<RowMatrix<double>>(merged.data().data(), m.rows(), sh[2] * sh[3]).noalias() =
            m * Eigen::Map<const RowMatrix<double>>(right.data().data(), sh[1], sh[2] * sh[3]);
        right = std::move(merged);
    }
    return out;
}

double conditional_cdf(const FeatureMap& fmap, const RDM& rdm, double x) {
    return GridDistribution(fmap, rdm.matrix).cdf(x);
}

MedianEstimate median_estimate(const FeatureMap& fmap, const RDM& rdm) {
    const GridDistribution dist(fmap, rdm.matrix);
    MedianEstimate e;
    e.x = dist.median();
    e.wmad = dist.wmad(e.x);
    return e;
}

ConditionalWalker::ConditionalWalker(const MPS& mps, const MaskVector& conditioned, const Eigen::VectorXd& values)
    : sites_(mps.sites()), d_(mps.phys_dim()) {
    const Index T = mps.length();
    if (mps.label_dim() != 1) throw DomainError("conditional walker: model must carry a single class");
    if (mps.ortho_center() != T - 1) throw DomainError("conditional walker: model must be left-canonical");
    if (conditioned.size() != T || values.size() != T) throw DimensionError("conditional walker: mask length mismatch");
    env_.assign(static_cast<std::size_t>(T + 1), Eigen::MatrixXd::Ones(1, 1));
    for (Index t = T - 1; t > 0; --t) {
        const Tensor& a = sites_[static_cast<std::size_t>(t)];
        const Eigen::MatrixXd& e = env_[static_cast<std::size_t>(t + 1)];
        Eigen::MatrixXd next;
        if (conditioned(t)) {
            const Eigen::MatrixXd m = contract_feature(a, legendre_basis(values(t), d_));
            next = m * e * m.transpose();
        } else {
            next = transfer_right(a, e);
        }
        const double tr = next.trace();
        if (!(tr > 0.0) || !std::isfinite(tr)) {
            throw ProbabilityError("site " + std::to_string(t) + ": observed value has zero probability", static_cast<int>(t));
        }
        env_[static_cast<std::size_t>(t)] = next / tr;
    }
    v_ = Eigen::RowVectorXd::Ones(1);
}

RDM ConditionalWalker::rdm() const {
    if (t_ >= length()) throw DomainError("conditional walker: past the last site");
    const Tensor& a = sites_[static_cast<std::size_t>(t_)];
    const Index cl = a.extent(1), cr = a.extent(3);
    const Eigen::RowVectorXd w = v_ * Eigen::Map<const RowMatrix<double>>(a.data().data(), cl, d_ * cr);
    const Eigen::Map<const RowMatrix<double>> W(w.data(), d_, cr);
    const Eigen::MatrixXd rho = W * env_[static_cast<std::size_t>(t_ + 1)] * W.transpose();
    if (!(rho.trace() > 0.0) || !std::isfinite(rho.trace())) {
        throw ProbabilityError("site " + std::to_string(t_) + ": conditional state vanished", static_cast<int>(t_));
    }
    return RDM::from_unnormalized(rho);
}

double ConditionalWalker::advance(double x) {
    if (t_ >= length()) throw DomainError("conditional walker: past the last site");
    const Tensor& a = sites_[static_cast<std::size_t>(t_)];
    const Index cl = a.extent(1), cr = a.extent(3);
    const Eigen::RowVectorXd w = v_ * Eigen::Map<const RowMatrix<double>>(a.data().data(), cl, d_ * cr);
    const Eigen::Map<const RowMatrix<double>> W(w.data(), d_, cr);
    const Eigen::MatrixXd& e = env_[static_cast<std::size_t>(t_ + 1)];
    const double z = (W * e).cwiseProduct(W).sum();
    const Eigen::RowVectorXd next = legendre_basis(x, d_).transpose() * W;
    const double p = next.dot(next * e) / z;
    const double n = next.norm();
    v_ = n > 0.0 ? Eigen::RowVectorXd(next / n) : next;
    ++t_;
    return p;
}

ImputationResult impute(const ModelBundle& bundle, const Eigen::VectorXd& series, const MaskVector& observed, int label) {
    const MPS& mps = bundle.mps;
    const Index T = mps.length();
    if (series.size() != T || observed.size() != T) {
        throw DimensionError("impute: series length " + std::to_string(series.size()) + " but model length " +
                             std::to_string(T));
    }
    std::vector<double> obs_values;
    for (Index t = 0; t < T; ++t) {
        if (!observed(t)) continue;
        if (!std::isfinite(series(t))) throw NumericError("impute: observed value at site " + std::to_string(t) + " is not finite");
        obs_values.push_back(series(t));
    }
    if (obs_values.empty()) throw UnsupportedError("impute: series has no observed values");

    const Preprocessor& pre = bundle.preprocessor;
    const PreprocessedSeries prep = apply_preprocessor(pre, obs_values);
    ImputationResult out;
    out.series = series;
    out.imputed_mask = MaskVector::Constant(T, false);
    out.uncertainty = Eigen::VectorXd::Constant(T, std::numeric_limits<double>::quiet_NaN());
    out.uncertainty_in_encoding_domain = pre.kind != PreprocessKind::MinMax;
    out.encoded = Eigen::VectorXd::Zero(T);
    for (Index t = 0, k = 0; t < T; ++t)
        if (observed(t)) out.encoded(t) = prep.values(k++);
    if (static_cast<Index>(obs_values.size()) == T) return out;

    const bool direct = mps.label_dim() == 1 && mps.ortho_center() == T - 1;
    const MPS model = direct ? MPS() : conditioning_model(mps, label);
    const MPS& m = direct ? mps : model;
    ConditionalWalker walker(m, observed, out.encoded);
    const FeatureMap& fmap = bundle.feature_map();
    const double slope = (pre.hi - pre.lo) / (pre.b - pre.a) / prep.scale;

    for (Index t = 0; t < T; ++t) {
        const RDM rho = walker.rdm();
        if (observed(t)) {
            const Eigen::VectorXd phi = legendre_basis(out.encoded(t), fmap.dim());
            const double p = phi.dot(rho.matrix * phi);
            if (!(p >= kProbabilityFloor)) {
                throw ProbabilityError("site " + std::to_string(t) + ": observed value has near-zero probability", static_cast<int>(t));
            }
            out.conditional_log_density += std::log(p);
            walker.advance(out.encoded(t));
            continue;
        }
        const GridDistribution dist(fmap, rho.matrix);
        const double x = dist.median();
        const double wmad = dist.wmad(x);
        out.encoded(t) = x;
        out.imputed_mask(t) = true;
        out.conditional_log_density += std::log(dist.pdf(x));
        out.series(t) = invert_preprocessor(pre, prep.unrepair(x, pre.a));
        out.uncertainty(t) = out.uncertainty_in_encoding_domain ? wmad : wmad * slope;
        walker.advance(x);
    }
    return out;
}

}  // namespace mpsts
