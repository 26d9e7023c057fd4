#include "mpsts/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace mpsts {

Eigen::VectorXd legendre_basis(double x, Index d) {
    if (d < 1) throw DomainError("legendre_basis: d must be >= 1");
    if (!(x >= -1.0 && x <= 1.0)) {
        throw DomainError("legendre_basis: x = " + std::to_string(x) + " outside [-1, 1]");
    }
    Eigen::VectorXd out(d);
    // Three-term recurrence: (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}.
    double p_prev = 0.0;
    double p = 1.0;
    for (Index n = 0; n < d; ++n) {
        out(n) = std::sqrt((2.0 * static_cast<double>(n) + 1.0) / 2.0) * p;
        const double nd = static_cast<double>(n);
        const double p_next = ((2.0 * nd + 1.0) * x * p - nd * p_prev) / (nd + 1.0);
        p_prev = p;
        p = p_next;
    }
    return out;
}

QuadratureRule gauss_legendre(Index n) {
    if (n < 1) throw DomainError("gauss_legendre: n must be >= 1");
    QuadratureRule rule{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    if (n == 1) {
        rule.nodes(0) = 0.0;
        rule.weights(0) = 2.0;
        return rule;
    }
    const double nd = static_cast<double>(n);
    for (Index i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (Index k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = nd * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged root for the weight.
        double p0 = 1.0, p1 = x;
        for (Index k = 2; k <= n; ++k) {
            const double kd = static_cast<double>(k);
            const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
            p0 = p1;
            p1 = p2;
        }
        dp = nd * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes(n - 1 - i) = x;  // ascending
        rule.weights(n - 1 - i) = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

QuadratureRule composite_gauss_legendre(Index panels, Index order) {
    const QuadratureRule base = gauss_legendre(order);
    QuadratureRule rule{Eigen::VectorXd(panels * order), Eigen::VectorXd(panels * order)};
    const double h = 2.0 / static_cast<double>(panels);
    for (Index p = 0; p < panels; ++p) {
        const double left = -1.0 + h * static_cast<double>(p);
        for (Index q = 0; q < order; ++q) {
            rule.nodes(p * order + q) = left + 0.5 * h * (base.nodes(q) + 1.0);
            rule.weights(p * order + q) = 0.5 * h * base.weights(q);
        }
    }
    return rule;
}

FeatureMap::FeatureMap(Index d, Index grid_nodes) : d_(d) {
    if (d < 1) throw DomainError("FeatureMap: d must be >= 1");
    if (grid_nodes < kPanelOrder || grid_nodes % kPanelOrder != 0) {
        throw DomainError("FeatureMap: grid size must be a positive multiple of " + std::to_string(kPanelOrder));
    }
    grid_ = composite_gauss_legendre(grid_nodes / kPanelOrder, kPanelOrder);
    exact_rule_ = gauss_legendre(std::max<Index>(d, 2));

    const Index g = grid_.nodes.size();
    grid_basis_.resize(g, d);
    for (Index k = 0; k < g; ++k) grid_basis_.row(k) = legendre_basis(grid_.nodes(k), d).transpose();

    cdf_moments_.resize(g, d * d);
    Eigen::MatrixXd acc(d, d);
    for (Index k = 0; k < g; ++k) {
        const double half = 0.5 * (grid_.nodes(k) + 1.0);
        acc.setZero();
        for (Index q = 0; q < exact_rule_.nodes.size(); ++q) {
            const double y = -1.0 + half * (exact_rule_.nodes(q) + 1.0);
            const Eigen::VectorXd phi = legendre_basis(y, d);
            acc.noalias() += (half * exact_rule_.weights(q)) * phi * phi.transpose();
        }
        cdf_moments_.row(k) = Eigen::Map<const Eigen::RowVectorXd>(acc.data(), d * d);
    }
}

GridDistribution::GridDistribution(const FeatureMap& fmap, const Eigen::MatrixXd& rho) : fmap_(&fmap), rho_(rho) {
    const Index d = fmap.dim();
    if (rho.rows() != d || rho.cols() != d) throw DimensionError("GridDistribution: rho must be d x d");
    if (!rho.allFinite()) throw NumericError("GridDistribution: non-finite density matrix");
    // int phi phi^T = I, so the unnormalized mass is the trace.
    z_ = rho.trace();
    if (!(z_ > 0.0)) throw NumericError("GridDistribution: density matrix has non-positive trace");

    const Eigen::MatrixXd& basis = fmap.grid_basis();
    pdf_ = ((basis * rho).cwiseProduct(basis)).rowwise().sum() / z_;
    const Eigen::MatrixXd sym = 0.5 * (rho + rho.transpose());
    cdf_ = fmap.cdf_moments() * Eigen::Map<const Eigen::VectorXd>(sym.data(), d * d) / z_;
}

double GridDistribution::pdf(double x) const {
    const Eigen::VectorXd phi = legendre_basis(std::clamp(x, -1.0, 1.0), fmap_->dim());
    return phi.dot(rho_ * phi) / z_;
}

double GridDistribution::cdf(double x) const {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const QuadratureRule& rule = fmap_->exact_rule();
    const double half = 0.5 * (x + 1.0);
    double acc = 0.0;
    for (Index q = 0; q < rule.nodes.size(); ++q) {
        const double y = -1.0 + half * (rule.nodes(q) + 1.0);
        const Eigen::VectorXd phi = legendre_basis(y, fmap_->dim());
        acc += half * rule.weights(q) * phi.dot(rho_ * phi);
    }
    return acc / z_;
}

double GridDistribution::median() const {
    const Eigen::VectorXd& nodes = fmap_->grid().nodes;
    Index best = 0;
    double best_gap = std::abs(cdf_(0) - 0.5);
    for (Index k = 1; k < cdf_.size(); ++k) {
        const double gap = std::abs(cdf_(k) - 0.5);
        if (gap < best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    return nodes(best);
}

double GridDistribution::wmad(double center) const {
    const Eigen::VectorXd& nodes = fmap_->grid().nodes;
    const Eigen::VectorXd& weights = fmap_->grid().weights;
    const Index g = nodes.size();
    Eigen::VectorXd mass = pdf_.cwiseMax(0.0).cwiseProduct(weights);
    const double total = mass.sum();
    if (!(total > 0.0)) return 0.0;
    mass /= total;

    std::vector<Index> order(static_cast<std::size_t>(g));
    std::iota(order.begin(), order.end(), Index{0});
    std::vector<double> dev(static_cast<std::size_t>(g));
    for (Index k = 0; k < g; ++k) dev[static_cast<std::size_t>(k)] = std::abs(nodes(k) - center);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return dev[static_cast<std::size_t>(i)] < dev[static_cast<std::size_t>(j)]; });
    double cumulative = 0.0;
    for (Index k : order) {
        cumulative += mass(k);
        if (cumulative >= 0.5) return dev[static_cast<std::size_t>(k)];
    }
    return dev[static_cast<std::size_t>(order.back())];
}

double GridDistribution::mean() const {
    const QuadratureRule& grid = fmap_->grid();
    return (grid.weights.array() * grid.nodes.array() * pdf_.array()).sum();
}

double GridDistribution::mode() const {
    Index best = 0;
    pdf_.maxCoeff(&best);
    return fmap_->grid().nodes(best);
}

double GridDistribution::inverse_cdf(double u) const {
    if (u <= 0.0) return -1.0;
    if (u >= 1.0) return 1.0;
    const Eigen::VectorXd& nodes = fmap_->grid().nodes;
    const Index g = nodes.size();

    // Bracket on the augmented table (-1, 0), (x_k, F_k), (1, 1).
    auto node_x = [&](Index i) { return i == 0 ? -1.0 : (i == g + 1 ? 1.0 : nodes(i - 1)); };
    auto node_f = [&](Index i) { return i == 0 ? 0.0 : (i == g + 1 ? 1.0 : cdf_(i - 1)); };
    Index hi_i = 1;
    while (hi_i < g + 1 && node_f(hi_i) < u) ++hi_i;
    double lo = node_x(hi_i - 1), hi = node_x(hi_i);
    const double flo = node_f(hi_i - 1), fhi = node_f(hi_i);
    double x = (fhi > flo) ? lo + (u - flo) * (hi - lo) / (fhi - flo) : 0.5 * (lo + hi);

    // The table and the exact CDF agree to round-off; widen if they do not.
    if (cdf(lo) > u) lo = -1.0;
    if (cdf(hi) < u) hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double f = cdf(x) - u;
        if (std::abs(f) < 1e-14) break;
        if (f < 0.0) lo = x; else hi = x;
        const double slope = pdf(x);
        double next = (slope > 0.0) ? x - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-15) break;
        x = next;
    }
    return x;
}

std::string to_string(PreprocessKind kind) {
    return kind == PreprocessKind::MinMax ? "min-max" : "robust-sigmoid";
}

PreprocessKind preprocess_kind_from_string(const std::string& name) {
    if (name == "min-max" || name == "minmax") return PreprocessKind::MinMax;
    if (name == "robust-sigmoid" || name == "robust-sigmoid-min-max") return PreprocessKind::RobustSigmoid;
    throw ConfigError("unknown preprocessing kind '" + name + "'");
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

double sigmoid(const Preprocessor& p, double x) {
    return 1.0 / (1.0 + std::exp(-(x - p.median) / (p.iqr / kIqrScale)));
}

double forward(const Preprocessor& p, double x) {
    const double s = p.kind == PreprocessKind::RobustSigmoid ? sigmoid(p, x) : x;
    return (p.b - p.a) * (s - p.lo) / (p.hi - p.lo) + p.a;
}

}  // namespace

Preprocessor fit_preprocessor(const Eigen::MatrixXd& train, PreprocessKind kind, double a, double b) {
    if (train.size() == 0) throw DomainError("fit_preprocessor: empty training data");
    if (!train.allFinite()) throw NumericError("fit_preprocessor: training data must be finite");
    if (!(b > a)) throw DomainError("fit_preprocessor: target range must satisfy a < b");
    Preprocessor p;
    p.kind = kind;
    p.a = a;
    p.b = b;
    if (kind == PreprocessKind::RobustSigmoid) {
        std::vector<double> v(train.data(), train.data() + train.size());
        std::sort(v.begin(), v.end());
        p.median = quantile_sorted(v, 0.5);
        p.iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
        if (!(p.iqr > 0.0)) throw DegenerateDataError("fit_preprocessor: interquartile range is zero");
        p.lo = std::numeric_limits<double>::infinity();
        p.hi = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < train.size(); ++i) {
            const double s = sigmoid(p, train.data()[i]);
            p.lo = std::min(p.lo, s);
            p.hi = std::max(p.hi, s);
        }
    } else {
        p.lo = train.minCoeff();
        p.hi = train.maxCoeff();
    }
    if (!(p.hi > p.lo)) throw DegenerateDataError("fit_preprocessor: training data has zero range");
    return p;
}

PreprocessedSeries apply_preprocessor(const Preprocessor& p, std::span<const double> series) {
    PreprocessedSeries out;
    out.values.resize(static_cast<Index>(series.size()));
    if (series.empty()) return out;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isfinite(series[i])) throw NumericError("apply_preprocessor: non-finite input");
        out.values(static_cast<Index>(i)) = forward(p, series[i]);
    }
    Eigen::VectorXd& y = out.values;
    Index argmin = 0;
    const double mn = y.minCoeff(&argmin);
    if (mn < p.a) {
        out.shift = p.a - mn;
        y.array() += out.shift;
        y(argmin) = p.a;
    }
    Index argmax = 0;
    const double mx = y.maxCoeff(&argmax);
    if (mx > p.b) {
        out.scale = (p.b - p.a) / (mx - p.a);
        y = (p.a + (y.array() - p.a) * out.scale).matrix();
        y(argmax) = p.b;
    }
    y = y.cwiseMax(p.a).cwiseMin(p.b);
    return out;
}

double invert_preprocessor(const Preprocessor& p, double value) {
    const double s = (value - p.a) * (p.hi - p.lo) / (p.b - p.a) + p.lo;
    if (p.kind == PreprocessKind::MinMax) return s;
    if (!(s > 0.0 && s < 1.0)) {
        throw DomainError("invert_preprocessor: value at sigmoid saturation cannot be inverted");
    }
    return p.median + (p.iqr / kIqrScale) * std::log(s / (1.0 - s));
}

Eigen::VectorXd invert_preprocessor(const Preprocessor& p, std::span<const double> series) {
    Eigen::VectorXd out(static_cast<Index>(series.size()));
    for (std::size_t i = 0; i < series.size(); ++i) out(static_cast<Index>(i)) = invert_preprocessor(p, series[i]);
    return out;
}

double inverse_slope(const Preprocessor& p, double y) {
    const double ds_dy = (p.hi - p.lo) / (p.b - p.a);
    if (p.kind == PreprocessKind::MinMax) return ds_dy;
    const double s = (y - p.a) * ds_dy + p.lo;
    return (p.iqr / kIqrScale) * ds_dy / (s * (1.0 - s));
}

EncodedSeries encode_series(std::span<const double> x, Index d) {
    EncodedSeries enc;
    const auto t = static_cast<Index>(x.size());
    enc.values.resize(t, d);
    enc.source = Eigen::Map<const Eigen::VectorXd>(x.data(), t);
    for (Index i = 0; i < t; ++i) enc.values.row(i) = legendre_basis(x[static_cast<std::size_t>(i)], d).transpose();
    return enc;
}

double encoding_error(double x, Index d, CentralStatistic statistic, Index grid_nodes) {
    const FeatureMap fmap(d, grid_nodes);
    const Eigen::VectorXd phi = fmap(x);
    const GridDistribution dist(fmap, phi * phi.transpose());
    double estimate = 0.0;
    switch (statistic) {
        case CentralStatistic::Mean: estimate = dist.mean(); break;
        case CentralStatistic::Median: estimate = dist.median(); break;
        case CentralStatistic::Mode: estimate = dist.mode(); break;
    }
    return std::abs(x - estimate);
}

}  // namespace mpsts
