#include "mpsts/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mpsts/config.hpp"
#include "mpsts/errors.hpp"

namespace mpsts {

int Dataset::num_classes() const {
    return labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end());
}

MaskVector Dataset::observed(Index row) const {
    if (!has_mask()) return MaskVector::Constant(length(), true);
    return mask.row(row).transpose();
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.values.resize(static_cast<Index>(rows.size()), length());
    if (has_mask()) out.mask.resize(static_cast<Index>(rows.size()), length());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Index r = rows[i];
        if (r < 0 || r >= size()) throw DomainError("subset: row index out of range");
        out.values.row(static_cast<Index>(i)) = values.row(r);
        if (has_mask()) out.mask.row(static_cast<Index>(i)) = mask.row(r);
        if (has_labels()) out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    }
    return out;
}

void Dataset::validate() const {
    if (has_labels()) {
        if (static_cast<Index>(labels.size()) != size()) throw DimensionError("dataset: label count != instance count");
        for (int l : labels)
            if (l < 1) throw DomainError("dataset: labels must be >= 1");
    }
    if (has_mask() && (mask.rows() != size() || mask.cols() != length())) {
        throw DimensionError("dataset: mask shape differs from values");
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, Index row, std::size_t col) {
    if (cell.empty() || cell == "NaN" || cell == "nan" || cell == "NA") return std::numeric_limits<double>::quiet_NaN();
    try {
        return parse_double("row " + std::to_string(row + 1) + " column " + std::to_string(col + 1), cell);
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
}

}  // namespace

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    const auto header = split_csv_line(line);
    const bool labelled = !header.empty() && header.back() == "label";
    const std::size_t T = header.size() - (labelled ? 1 : 0);
    if (T == 0) throw ParseError("csv: no value columns");

    std::vector<std::vector<double>> rows;
    Dataset out;
    Index row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("csv: row " + std::to_string(row + 1) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(header.size()));
        }
        std::vector<double> r(T);
        for (std::size_t j = 0; j < T; ++j) r[j] = parse_cell(cells[j], row, j);
        if (labelled) {
            try {
                out.labels.push_back(static_cast<int>(parse_int("label", cells.back())));
            } catch (const ConfigError& e) {
                throw ParseError("csv: row " + std::to_string(row + 1) + ": " + e.what());
            }
        }
        rows.push_back(std::move(r));
        ++row;
    }
    out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(T));
    bool any_missing = false;
    for (Index i = 0; i < out.size(); ++i)
        for (Index j = 0; j < out.length(); ++j) {
            const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            out.values(i, j) = v;
            any_missing = any_missing || std::isnan(v);
        }
    if (any_missing) out.mask = out.values.array().isNaN() == false;
    out.validate();
    return out;
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset '" + path + "'");
    return read_csv(in);
}

void write_csv(const Dataset& data, std::ostream& out) {
    for (Index j = 0; j < data.length(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
    if (data.has_labels()) out << ",label";
    out << '\n';
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.length(); ++j) {
            if (j) out << ',';
            const bool obs = !data.has_mask() || data.mask(i, j);
            if (obs && !std::isnan(data.values(i, j))) out << format_double(data.values(i, j));
            else out << "NaN";
        }
        if (data.has_labels()) out << ',' << data.labels[static_cast<std::size_t>(i)];
        out << '\n';
    }
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_csv(data, out);
}

Dataset generate_nts(const NTSParams& p) {
    if (p.tau_choices.empty() || p.m_choices.empty()) throw DomainError("generate_nts: empty parameter choices");
    for (double tau : p.tau_choices)
        if (!(tau > 0.0)) throw DomainError("generate_nts: tau must be positive");
    if (p.sigma < 0.0) throw DomainError("generate_nts: sigma must be >= 0");
    if (p.T < 1 || p.N < 0) throw DomainError("generate_nts: need T >= 1 and N >= 0");

    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_int_distribution<std::size_t> pick_tau(0, p.tau_choices.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_m(0, p.m_choices.size() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset out;
    out.values.resize(p.N, p.T);
    const bool labelled = p.tau_choices.size() > 1;
    for (Index n = 0; n < p.N; ++n) {
        double psi = 0.0;
        if (p.phases.empty()) {
            psi = phase(rng);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, p.phases.size() - 1);
            psi = p.phases[pick(rng)];
        }
        const std::size_t ti = pick_tau(rng);
        const double tau = p.tau_choices[ti];
        const double m = p.m_choices[pick_m(rng)];
        for (Index t = 1; t <= p.T; ++t) {
            const double x = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / tau + psi) +
                             m * static_cast<double>(t) / static_cast<double>(p.T);
            out.values(n, t - 1) = x + p.sigma * noise(rng);
        }
        if (labelled) out.labels.push_back(static_cast<int>(ti) + 1);
    }
    return out;
}

Index missing_block_length(Index T, double pct_missing) {
    if (!(pct_missing > 0.0) || pct_missing > 0.95) throw DomainError("mask: missing fraction must lie in (0, 0.95]");
    const auto block = static_cast<Index>(std::floor(pct_missing * static_cast<double>(T) + 0.5));
    if (block >= T) throw DomainError("mask: block length " + std::to_string(block) + " leaves nothing observed");
    return block;
}

Dataset mask_contiguous(const Dataset& data, double pct_missing, std::uint64_t seed) {
    const Index T = data.length();
    const Index block = missing_block_length(T, pct_missing);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> start(0, T - block);
    Dataset out = data;
    out.mask = MaskMatrix::Constant(data.size(), T, true);
    for (Index n = 0; n < data.size(); ++n) {
        const Index s = start(rng);
        out.mask.row(n).segment(s, block).setConstant(false);
    }
    return out;
}

double mae(const Eigen::VectorXd& actual, const Eigen::VectorXd& imputed, const MaskVector& observed) {
    if (actual.size() != imputed.size() || actual.size() != observed.size()) throw DimensionError("mae: length mismatch");
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < actual.size(); ++i) {
        if (observed(i)) continue;
        sum += std::abs(actual(i) - imputed(i));
        ++count;
    }
    if (count == 0) throw DomainError("mae: no missing entries");
    return sum / static_cast<double>(count);
}

Eigen::VectorXd nn1_impute(const Dataset& train, const Eigen::VectorXd& instance, const MaskVector& observed) {
    if (train.size() == 0) throw DomainError("nn1_impute: empty training set");
    if (instance.size() != train.length() || observed.size() != train.length()) {
        throw DimensionError("nn1_impute: length mismatch");
    }
    Index best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index n = 0; n < train.size(); ++n) {
        double dist = 0.0;
        for (Index t = 0; t < instance.size(); ++t)
            if (observed(t)) dist += (train.values(n, t) - instance(t)) * (train.values(n, t) - instance(t));
        if (dist < best_dist) {
            best_dist = dist;
            best = n;
        }
    }
    Eigen::VectorXd out = instance;
    for (Index t = 0; t < instance.size(); ++t)
        if (!observed(t)) out(t) = train.values(best, t);
    return out;
}

std::vector<Split> resample_folds(Index n_instances, Index n_train, const std::vector<int>& labels, Index n_folds,
                                  bool stratified, std::uint64_t seed) {
    if (n_folds < 1) throw DomainError("resample_folds: n_folds must be >= 1");
    if (n_train < 1 || n_train >= n_instances) throw DomainError("resample_folds: need 0 < n_train < n_instances");
    if (stratified && static_cast<Index>(labels.size()) != n_instances) {
        throw DomainError("resample_folds: stratification requires one label per instance");
    }
    std::mt19937_64 rng(seed);
    std::vector<Split> folds;
    for (Index f = 0; f < n_folds; ++f) {
        Split s;
        if (!stratified) {
            std::vector<Index> idx(static_cast<std::size_t>(n_instances));
            std::iota(idx.begin(), idx.end(), Index{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            s.train.assign(idx.begin(), idx.begin() + n_train);
            s.test.assign(idx.begin() + n_train, idx.end());
        } else {
            const double frac = static_cast<double>(n_train) / static_cast<double>(n_instances);
            const int classes = *std::max_element(labels.begin(), labels.end());
            for (int c = 1; c <= classes; ++c) {
                std::vector<Index> members;
                for (Index i = 0; i < n_instances; ++i)
                    if (labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
                if (members.empty()) continue;
                std::shuffle(members.begin(), members.end(), rng);
                const auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(members.size())));
                if (k < 1 || k >= members.size()) {
                    throw DomainError("resample_folds: class " + std::to_string(c) +
                                      " cannot be represented in both train and test");
                }
                s.train.insert(s.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
                s.test.insert(s.test.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
            }
            std::sort(s.train.begin(), s.train.end());
            std::sort(s.test.begin(), s.test.end());
        }
        folds.push_back(std::move(s));
    }
    return folds;
}

std::vector<Split> kfold(Index n_instances, Index k, std::uint64_t seed) {
    if (k < 2 || k > n_instances) throw DomainError("kfold: need 2 <= k <= n_instances");
    std::vector<Index> idx(static_cast<std::size_t>(n_instances));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Split> out(static_cast<std::size_t>(k));
    for (Index i = 0; i < n_instances; ++i) {
        const Index fold = i % k;
        for (Index f = 0; f < k; ++f) {
            auto& dst = f == fold ? out[static_cast<std::size_t>(f)].test : out[static_cast<std::size_t>(f)].train;
            dst.push_back(idx[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

void SearchSpace::validate() const {
    if (d_min < 1 || d_max < d_min) throw ConfigError("search space: bad d range");
    if (!(eta_min > 0.0) || eta_max < eta_min) throw ConfigError("search space: bad eta range");
    if (chi_min < 1 || chi_max < chi_min) throw ConfigError("search space: bad chi range");
    if (n_samples < 1) throw ConfigError("search space: n_samples must be >= 1");
    if (folds < 1) throw ConfigError("search space: folds must be >= 1");
}

Eigen::MatrixXd latin_hypercube(Index n, Index dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd out(n, dims);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index j = 0; j < dims; ++j) {
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Index i = 0; i < n; ++i) {
            const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unit(rng)) / static_cast<double>(n);
            out(i, j) = std::min(u, std::nextafter(1.0, 0.0));
        }
    }
    return out;
}

TrialPoint lhs_point(const SearchSpace& s, const Eigen::RowVectorXd& u) {
    auto integer = [](Index lo, Index hi, double v) {
        return std::min(hi, lo + static_cast<Index>(std::floor(v * static_cast<double>(hi - lo + 1))));
    };
    TrialPoint p;
    p.d = integer(s.d_min, s.d_max, u(0));
    p.eta = std::exp(std::log(s.eta_min) + u(1) * (std::log(s.eta_max) - std::log(s.eta_min)));
    p.chi_max = integer(s.chi_min, s.chi_max, u(2));
    return p;
}

SearchResult lhs_search(const SearchSpace& space, const Objective& objective, std::uint64_t seed) {
    space.validate();
    const Eigen::MatrixXd unit = latin_hypercube(space.n_samples, 3, seed);
    SearchResult result;
    result.best_objective = std::numeric_limits<double>::infinity();
    bool found = false;
    for (Index i = 0; i < space.n_samples; ++i) {
        const TrialPoint point = lhs_point(space, unit.row(i));
        double sum = 0.0;
        bool failed = false;
        for (Index f = 0; f < space.folds; ++f) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!failed) {
                try {
                    v = objective(point, f);
                } catch (const std::exception&) {
                    v = std::numeric_limits<double>::quiet_NaN();
                }
                if (!std::isfinite(v)) {
                    failed = true;
                    v = std::numeric_limits<double>::quiet_NaN();
                }
            }
            result.log.push_back({i, point, f, v});
            sum += v;
        }
        if (failed) continue;
        const double mean = sum / static_cast<double>(space.folds);
        if (mean < result.best_objective) {
            result.best_objective = mean;
            result.best = point;
            found = true;
        }
    }
    if (!found) throw NumericError("lhs_search: every trial failed");
    return result;
}

void write_trial_log(const std::vector<TrialRecord>& log, std::ostream& out) {
    out << "trial_id,d,eta,chi_max,fold,objective\n";
    for (const auto& r : log) {
        out << r.trial_id << ',' << r.point.d << ',' << format_double(r.point.eta) << ',' << r.point.chi_max << ','
            << r.fold << ',' << (std::isnan(r.objective) ? std::string("NaN") : format_double(r.objective)) << '\n';
    }
}

}  // namespace mpsts
