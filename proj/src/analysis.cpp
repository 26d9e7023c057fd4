#include "mpsts/analysis.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "mpsts/config.hpp"
#include "mpsts/errors.hpp"
#include "site_ops.hpp"

namespace mpsts {

using namespace site_ops;

double see(const RDM& rdm) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rdm.matrix, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double l = eig.eigenvalues()(i);
        if (l > kEigenvalueFloor) s -= l * std::log(l);
    }
    return s;
}

namespace {

/// rho(s, s') = <A_s, E A_s' R> with E the left and R the right environment.
RDM site_state(const Tensor& site, const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
    const Index d = site.extent(2);
    Eigen::MatrixXd rho(d, d);
    for (Index sp = 0; sp < d; ++sp) {
        const Eigen::MatrixXd c = left * slice(site, sp) * right;
        for (Index s = 0; s < d; ++s) rho(s, sp) = slice(site, s).cwiseProduct(c).sum();
    }
    return RDM::from_unnormalized(rho);
}

}  // namespace

SEEProfile conditional_see_profile(const ModelBundle& bundle, const Eigen::VectorXd& series, int label) {
    const MPS& src = bundle.mps;
    const Index T = src.length();
    if (series.size() != T) {
        throw DimensionError("see profile: series length " + std::to_string(series.size()) + " but model length " +
                             std::to_string(T));
    }
    if (!series.allFinite()) throw NumericError("see profile: series has non-finite values");
    const bool direct = src.label_dim() == 1 && src.ortho_center() == T - 1;
    const MPS model = direct ? MPS() : conditioning_model(src, label);
    const MPS& mps = direct ? src : model;
    const Index d = mps.phys_dim();

    const PreprocessedSeries p = apply_preprocessor(bundle.preprocessor, std::span<const double>(series.data(), series.size()));

    // right[t]: sites t..T-1 traced.
    std::vector<Eigen::MatrixXd> right(static_cast<std::size_t>(T + 1), Eigen::MatrixXd::Ones(1, 1));
    for (Index t = T - 1; t > 0; --t) {
        Eigen::MatrixXd r = transfer_right(mps.site(t), right[static_cast<std::size_t>(t + 1)]);
        r /= r.trace();
        right[static_cast<std::size_t>(t)] = std::move(r);
    }

    SEEProfile out;
    out.matrix = Eigen::MatrixXd::Constant(T, T, std::numeric_limits<double>::quiet_NaN());
    out.residual.resize(T);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (Index k = 0; k < T; ++k) {
        Eigen::MatrixXd e = v.transpose() * v;
        double sum = 0.0;
        for (Index j = k; j < T; ++j) {
            const RDM rho = site_state(mps.site(j), e, right[static_cast<std::size_t>(j + 1)]);
            out.matrix(k, j) = see(rho);
            sum += out.matrix(k, j);
            if (j == k && k + 1 < T) {
                const Eigen::VectorXd phi = legendre_basis(p.values(k), d);
                if (!(phi.dot(rho.matrix * phi) >= kProbabilityFloor)) {
                    throw ProbabilityError("site " + std::to_string(k) + ": value has near-zero probability",
                                           static_cast<int>(k));
                }
            }
            if (j + 1 < T) {
                e = transfer_left(mps.site(j), e);
                e /= e.trace();
            }
        }
        out.residual(k) = sum / static_cast<double>(T - k);
        if (k + 1 < T) {
            const Eigen::RowVectorXd next = v * contract_feature(mps.site(k), legendre_basis(p.values(k), d));
            v = next / next.norm();
        }
    }
    return out;
}

MeanProfile dataset_mean_profile(const ModelBundle& bundle, const Dataset& data, int label) {
    if (data.size() == 0) throw DomainError("see profile: empty dataset");
    MeanProfile out;
    for (Index n = 0; n < data.size(); ++n) {
        SEEProfile p;
        try {
            p = conditional_see_profile(bundle, data.values.row(n).transpose(), label);
        } catch (const ProbabilityError&) {
            ++out.skipped;
            continue;
        }
        if (out.used == 0) {
            out.profile = std::move(p);
        } else {
            out.profile.matrix += p.matrix;
            out.profile.residual += p.residual;
        }
        ++out.used;
    }
    if (out.used == 0) throw DomainError("see profile: every instance failed to project");
    out.profile.matrix /= static_cast<double>(out.used);
    out.profile.residual /= static_cast<double>(out.used);
    return out;
}

void write_profile_csv(const SEEProfile& profile, std::ostream& out) {
    out << "k,site,see\n";
    for (Index k = 0; k < profile.matrix.rows(); ++k)
        for (Index j = 0; j < profile.matrix.cols(); ++j)
            if (!std::isnan(profile.matrix(k, j))) out << k << ',' << j << ',' << format_double(profile.matrix(k, j)) << '\n';
}

void write_residual_csv(const SEEProfile& profile, std::ostream& out) {
    out << "k,residual\n";
    for (Index k = 0; k < profile.residual.size(); ++k) out << k << ',' << format_double(profile.residual(k)) << '\n';
}

}  // namespace mpsts
