#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "mpsts/tensor.hpp"

namespace mpsts {

/// Orthonormal Legendre features on [-1, 1]:
/// entry i is sqrt((2i+1)/2) P_i(x) for i = 0..d-1.
Eigen::VectorXd legendre_basis(double x, Index d);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
QuadratureRule gauss_legendre(Index n);

/// Composite Gauss-Legendre rule over [-1, 1]: `panels` equal panels with an
/// `order`-point rule each. Nodes are increasing.
QuadratureRule composite_gauss_legendre(Index panels, Index order);

inline constexpr Index kDefaultGridNodes = 512;
inline constexpr Index kPanelOrder = 8;

/// Legendre feature map of physical dimension d together with the fixed
/// evaluation grid used for every density integral, CDF and median.
class FeatureMap {
public:
    explicit FeatureMap(Index d, Index grid_nodes = kDefaultGridNodes);

    [[nodiscard]] Index dim() const noexcept { return d_; }
    [[nodiscard]] Index grid_size() const noexcept { return grid_.nodes.size(); }
    [[nodiscard]] double lower() const noexcept { return -1.0; }
    [[nodiscard]] double upper() const noexcept { return 1.0; }

    [[nodiscard]] Eigen::VectorXd operator()(double x) const { return legendre_basis(x, d_); }

    [[nodiscard]] const QuadratureRule& grid() const noexcept { return grid_; }
    /// Basis evaluated on the grid, one row per node (G x d).
    [[nodiscard]] const Eigen::MatrixXd& grid_basis() const noexcept { return grid_basis_; }
    /// Row k holds vec(int_{-1}^{x_k} phi phi^T), row-major d*d.
    [[nodiscard]] const Eigen::MatrixXd& cdf_moments() const noexcept { return cdf_moments_; }
    /// Rule exact for polynomial integrands up to degree 2(d-1) on any interval.
    [[nodiscard]] const QuadratureRule& exact_rule() const noexcept { return exact_rule_; }

private:
    Index d_;
    QuadratureRule grid_;
    QuadratureRule exact_rule_;
    Eigen::MatrixXd grid_basis_;
    Eigen::MatrixXd cdf_moments_;
};

/// A single-site distribution pdf(x) = phi(x)^T rho phi(x) / Z on [-1, 1]
/// tabulated on a feature map's grid.
class GridDistribution {
public:
    GridDistribution(const FeatureMap& fmap, const Eigen::MatrixXd& rho);

    [[nodiscard]] const FeatureMap& feature_map() const noexcept { return *fmap_; }
    [[nodiscard]] double normalization() const noexcept { return z_; }

    [[nodiscard]] const Eigen::VectorXd& pdf_nodes() const noexcept { return pdf_; }
    [[nodiscard]] const Eigen::VectorXd& cdf_nodes() const noexcept { return cdf_; }

    [[nodiscard]] double pdf(double x) const;
    /// Exact (to round-off) F(x) for any x in [-1, 1].
    [[nodiscard]] double cdf(double x) const;

    /// Grid node minimizing |F - 1/2|, ties toward smaller x.
    [[nodiscard]] double median() const;
    /// Weighted median of |x_k - center| with weights proportional to the
    /// probability mass at each grid node.
    [[nodiscard]] double wmad(double center) const;
    [[nodiscard]] double mean() const;
    /// Grid node with the largest density.
    [[nodiscard]] double mode() const;

    /// x with F(x) = u: grid bracket plus linear interpolation, then polished
    /// with safeguarded Newton steps on the exact CDF.
    [[nodiscard]] double inverse_cdf(double u) const;

private:
    const FeatureMap* fmap_;
    Eigen::MatrixXd rho_;
    double z_ = 1.0;
    Eigen::VectorXd pdf_;
    Eigen::VectorXd cdf_;
};

enum class PreprocessKind { MinMax, RobustSigmoid };

std::string to_string(PreprocessKind kind);
PreprocessKind preprocess_kind_from_string(const std::string& name);

/// Fitted amplitude transform into the encoding range [a, b].
struct Preprocessor {
    PreprocessKind kind = PreprocessKind::MinMax;
    double median = 0.0;  // robust sigmoid only
    double iqr = 1.0;     // robust sigmoid only
    double lo = 0.0;      // minimum of the (sigmoid-transformed) training data
    double hi = 1.0;      // maximum of the (sigmoid-transformed) training data
    double a = -1.0;
    double b = 1.0;
};

inline constexpr double kIqrScale = 1.35;

/// Fits on every entry of a training matrix (rows are instances).
Preprocessor fit_preprocessor(const Eigen::MatrixXd& train, PreprocessKind kind, double a = -1.0, double b = 1.0);

/// Output of `apply_preprocessor`, with the out-of-range repair recorded so
/// that y_final = a + (y + shift - a) * scale can be undone.
struct PreprocessedSeries {
    Eigen::VectorXd values;
    double shift = 0.0;
    double scale = 1.0;
    [[nodiscard]] bool repaired() const noexcept { return shift != 0.0 || scale != 1.0; }
    /// Maps a value in the repaired range back to the unrepaired encoding range.
    [[nodiscard]] double unrepair(double y, double a) const { return (y - a) / scale + a - shift; }
};

PreprocessedSeries apply_preprocessor(const Preprocessor& p, std::span<const double> series);
Eigen::VectorXd invert_preprocessor(const Preprocessor& p, std::span<const double> series);
double invert_preprocessor(const Preprocessor& p, double value);
/// Derivative of the inverse map at y (data units per encoding unit).
double inverse_slope(const Preprocessor& p, double y);

/// T x d product-state representation of one series.
struct EncodedSeries {
    RowMatrix<double> values;
    Eigen::VectorXd source;
    [[nodiscard]] Index length() const noexcept { return values.rows(); }
    [[nodiscard]] Index dim() const noexcept { return values.cols(); }
};

EncodedSeries encode_series(std::span<const double> x, Index d);

enum class CentralStatistic { Mean, Median, Mode };

/// |x - statistic| of the pure-state density (phi(y)^T phi(x))^2 over [-1, 1].
double encoding_error(double x, Index d, CentralStatistic statistic, Index grid_nodes = kDefaultGridNodes);

}  // namespace mpsts
