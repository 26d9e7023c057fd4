#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mpsts/analysis.hpp"
#include "mpsts/classifier.hpp"
#include "mpsts/config.hpp"
#include "mpsts/data.hpp"
#include "mpsts/errors.hpp"
#include "mpsts/imputer.hpp"
#include "mpsts/model_io.hpp"
#include "mpsts/sampler.hpp"
#include "mpsts/trainer.hpp"
#include "mpsts/tuning.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mpsts;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
    std::string out_dir = ".";
    std::string config_file;
    int threads = 1;
};

/// Training options given on the command line, keyed like the config file.
struct TrainFlags {
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void add(CLI::App* app) {
        const std::vector<std::pair<std::string, std::string>> flags{
            {"d", "--d"},           {"eta", "--eta"},         {"chi_max", "--chi-max"},
            {"n_sweeps", "--sweeps"}, {"chi_init", "--chi-init"}, {"cutoff", "--cutoff"},
            {"seed", "--seed"},     {"loss_tolerance", "--loss-tolerance"},
            {"preprocess", "--preprocess"}, {"grid_nodes", "--grid-nodes"}};
        for (const auto& [key, flag] : flags) {
            options.emplace_back(key, app->add_option(flag, values[key], "training option '" + key + "'"));
        }
    }

    /// defaults < config file < command line
    [[nodiscard]] TrainConfig resolve(const Common& common, TrainConfig base = {}) const {
        KeyValues kv;
        if (!common.config_file.empty()) kv = read_key_values(common.config_file);
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) kv[key] = values.at(key);
        return train_config_from(kv, base);
    }

    [[nodiscard]] bool given(const std::string& key) const {
        for (const auto& [k, opt] : options)
            if (k == key) return opt->count() > 0;
        return false;
    }
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--out", c.out_dir, "output directory")->capture_default_str();
    app->add_option("--config", c.config_file, "key = value configuration file");
    app->add_option("--threads", c.threads, "thread cap (computation is single threaded)")->capture_default_str();
}

fs::path output(const Common& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir) / name;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    return out;
}

json config_json(const TrainConfig& c) {
    json j;
    for (const auto& [k, v] : to_key_values(c)) j[k] = v;
    return j;
}

class Manifest {
public:
    Manifest(std::string command, std::vector<std::string> argv)
        : start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["argv"] = std::move(argv);
        doc_["version"] = kVersion;
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::object();
        doc_["seeds"] = json::object();
        doc_["config"] = json::object();
    }
    json& operator[](const char* key) { return doc_[key]; }
    void write(const Common& c) {
        doc_["threads"] = c.threads;
        doc_["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const fs::path p = output(c, "manifest.json");
        std::ofstream out = open_out(p);
        out << doc_.dump(2) << '\n';
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

std::string nan_or(double v) { return std::isnan(v) ? std::string("NaN") : format_double(v); }

int run_train(const Common& c, const TrainFlags& flags, const std::string& data_path, Manifest& m) {
    const Dataset data = read_csv(data_path);
    TrainConfig base;
    if (data.has_labels() && data.num_classes() > 1 && !flags.given("preprocess")) {
        base.preprocess = PreprocessKind::RobustSigmoid;
    }
    const TrainConfig cfg = flags.resolve(c, base);
    m["config"] = config_json(cfg);
    m["seeds"]["train"] = cfg.seed;
    m["inputs"]["data"] = data_path;

    const FitResult r = fit(data, cfg);
    const fs::path model = output(c, "model.mpst");
    save_model(r.bundle, model.string());
    const fs::path loss = output(c, "loss.csv");
    std::ofstream lo = open_out(loss);
    write_loss_csv(r.report, lo);
    m["outputs"]["model"] = model.string();
    m["outputs"]["loss"] = loss.string();
    m["report"] = {{"initial_loss", r.report.initial_loss},
                   {"final_loss", r.report.final_loss},
                   {"sweeps_run", r.report.sweeps_run},
                   {"skipped_updates", r.report.skipped_updates},
                   {"max_discarded_weight", r.report.max_discarded_weight}};
    std::cout << "trained " << data.size() << " instances, final loss " << format_double(r.report.final_loss) << '\n';
    return 0;
}

int run_impute(const Common& c, const std::string& model_path, const std::string& data_path,
               const std::string& truth_path, int label, Manifest& m) {
    const ModelBundle bundle = load_model(model_path);
    const Dataset data = read_csv(data_path);
    if (data.length() != bundle.mps.length()) {
        throw DimensionError("dataset length " + std::to_string(data.length()) + " but model length " +
                             std::to_string(bundle.mps.length()));
    }
    Dataset truth;
    if (!truth_path.empty()) {
        truth = read_csv(truth_path);
        if (truth.size() != data.size() || truth.length() != data.length()) {
            throw DimensionError("ground truth shape differs from the input");
        }
    }
    m["inputs"]["model"] = model_path;
    m["inputs"]["data"] = data_path;
    if (!truth_path.empty()) m["inputs"]["truth"] = truth_path;
    m["config"]["label"] = label;

    const fs::path out_path = output(c, "imputed.csv");
    std::ofstream out = open_out(out_path);
    out << "instance,t,value,imputed_flag,wmad\n";
    double mae_sum = 0.0;
    Index mae_count = 0;
    bool encoding_domain = false;
    for (Index n = 0; n < data.size(); ++n) {
        const Eigen::VectorXd row = data.values.row(n).transpose();
        const MaskVector observed = data.observed(n);
        const ImputationResult r = impute(bundle, row, observed, label);
        encoding_domain = encoding_domain || r.uncertainty_in_encoding_domain;
        for (Index t = 0; t < row.size(); ++t) {
            out << n << ',' << (t + 1) << ',' << format_double(r.series(t)) << ',' << (r.imputed_mask(t) ? 1 : 0) << ','
                << nan_or(r.uncertainty(t)) << '\n';
        }
        if (!truth_path.empty() && !observed.all()) {
            mae_sum += mae(truth.values.row(n).transpose(), r.series, observed);
            ++mae_count;
        }
    }
    m["outputs"]["imputed"] = out_path.string();
    m["uncertainty_domain"] = encoding_domain ? "encoding" : "data";
    if (mae_count > 0) {
        const double v = mae_sum / static_cast<double>(mae_count);
        m["mae"] = v;
        std::cout << "MAE " << format_double(v) << " over " << mae_count << " instances\n";
    }
    return 0;
}

int run_classify(const Common& c, const std::string& model_path, const std::string& data_path, Manifest& m) {
    const ModelBundle bundle = load_model(model_path);
    const Dataset data = read_csv(data_path);
    const auto preds = predict_all(bundle, data);
    const fs::path p = output(c, "predictions.csv");
    std::ofstream out = open_out(p);
    write_predictions_csv(preds, out);
    m["inputs"]["model"] = model_path;
    m["inputs"]["data"] = data_path;
    m["outputs"]["predictions"] = p.string();
    if (data.has_labels() && !preds.empty()) {
        const double acc = accuracy(preds, data.labels);
        m["accuracy"] = acc;
        std::cout << "accuracy " << format_double(acc) << '\n';
    }
    return 0;
}

int run_sample(const Common& c, const std::string& model_path, const SamplerConfig& cfg, const std::vector<double>& prefix,
               int label, Manifest& m) {
    const ModelBundle bundle = load_model(model_path);
    const Eigen::VectorXd pre = Eigen::Map<const Eigen::VectorXd>(prefix.data(), static_cast<Index>(prefix.size()));
    const SampledDataset s = generate_dataset(bundle, cfg, pre, label);
    const fs::path samples = output(c, "samples.csv");
    write_csv(s.data, samples.string());
    const fs::path meta = output(c, "sampler_metadata.csv");
    std::ofstream mo = open_out(meta);
    write_sampler_metadata(s, mo);
    m["inputs"]["model"] = model_path;
    m["config"] = {{"alpha", std::isinf(cfg.alpha) ? std::string("inf") : format_double(cfg.alpha)},
                   {"max_rejections", cfg.max_rejections},
                   {"n_trajectories", cfg.n_trajectories},
                   {"prefix", prefix},
                   {"label", label}};
    m["seeds"]["sampler"] = cfg.seed;
    m["outputs"]["samples"] = samples.string();
    m["outputs"]["metadata"] = meta.string();
    Index fallbacks = 0;
    for (Index f : s.fallbacks_per_site) fallbacks += f;
    m["median_fallbacks"] = fallbacks;
    return 0;
}

int run_analyze(const Common& c, const std::string& model_path, const std::string& data_path, int label, Manifest& m) {
    const ModelBundle bundle = load_model(model_path);
    const Dataset data = read_csv(data_path);
    const MeanProfile mp = dataset_mean_profile(bundle, data, label);
    const fs::path heat = output(c, "see_profile.csv");
    const fs::path res = output(c, "see_residual.csv");
    std::ofstream ho = open_out(heat), ro = open_out(res);
    write_profile_csv(mp.profile, ho);
    write_residual_csv(mp.profile, ro);
    m["inputs"]["model"] = model_path;
    m["inputs"]["data"] = data_path;
    m["config"]["label"] = label;
    m["outputs"]["profile"] = heat.string();
    m["outputs"]["residual"] = res.string();
    m["instances_used"] = mp.used;
    m["instances_skipped"] = mp.skipped;
    std::cout << "profiled " << mp.used << " instances, skipped " << mp.skipped << '\n';
    return 0;
}

int run_tune(const Common& c, const TrainFlags& flags, const std::string& data_path, const std::string& task,
             const SearchSpace& space, const std::vector<double>& pcts, std::uint64_t seed, Manifest& m) {
    const Dataset data = read_csv(data_path);
    TrainConfig base;
    if (task == "classify" && !flags.given("preprocess")) base.preprocess = PreprocessKind::RobustSigmoid;
    const TrainConfig cfg = flags.resolve(c, base);
    Objective objective;
    if (task == "impute") objective = imputation_objective(data, cfg, space.folds, pcts, seed);
    else if (task == "classify") objective = classification_objective(data, cfg, space.folds, seed);
    else throw ConfigError("unknown tuning task '" + task + "' (impute or classify)");

    const SearchResult r = lhs_search(space, objective, seed);
    const fs::path log = output(c, "trial_log.csv");
    std::ofstream lo = open_out(log);
    write_trial_log(r.log, lo);
    const TrainConfig best = with_point(cfg, r.best);
    const fs::path best_path = output(c, "best.cfg");
    std::ofstream bo = open_out(best_path);
    write_key_values(bo, to_key_values(best));

    m["inputs"]["data"] = data_path;
    m["config"] = config_json(cfg);
    m["config"]["task"] = task;
    m["config"]["search"] = {{"d", {space.d_min, space.d_max}},
                             {"eta", {space.eta_min, space.eta_max}},
                             {"chi_max", {space.chi_min, space.chi_max}},
                             {"n_samples", space.n_samples},
                             {"folds", space.folds},
                             {"missing", pcts}};
    m["seeds"]["search"] = seed;
    m["outputs"]["trial_log"] = log.string();
    m["outputs"]["best"] = best_path.string();
    m["best_objective"] = r.best_objective;
    std::cout << "best d=" << r.best.d << " eta=" << format_double(r.best.eta) << " chi_max=" << r.best.chi_max
              << " objective " << format_double(r.best_objective) << '\n';
    return 0;
}

int run_gen_nts(const Common& c, const NTSParams& p, const std::string& file, Manifest& m) {
    const Dataset d = generate_nts(p);
    const fs::path path = output(c, file);
    write_csv(d, path.string());
    m["config"] = {{"tau", p.tau_choices}, {"m", p.m_choices}, {"sigma", p.sigma}, {"T", p.T}, {"N", p.N}};
    m["config"]["phases"] = p.phases.empty() ? json("continuous") : json(p.phases);
    m["seeds"]["nts"] = p.seed;
    m["outputs"]["data"] = path.string();
    return 0;
}

/// 2 for usage, configuration and input-shape problems, 3 otherwise.
int exit_code(const std::exception& e) {
    const bool usage = dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
                       dynamic_cast<const VersionError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
                       dynamic_cast<const DomainError*>(&e) || dynamic_cast<const UnsupportedError*>(&e) ||
                       dynamic_cast<const DegenerateDataError*>(&e);
    return usage ? 2 : 3;
}

double parse_alpha(const std::string& s) {
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    return parse_double("alpha", s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix-product-state models for univariate time series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common common;

    // train
    auto* train = app.add_subcommand("train", "fit a model to a dataset");
    add_common(train, common);
    TrainFlags train_flags;
    train_flags.add(train);
    std::string data_path;
    train->add_option("--data", data_path, "training CSV")->required();

    // impute
    auto* imp = app.add_subcommand("impute", "fill missing values with conditional medians");
    add_common(imp, common);
    std::string model_path, truth_path;
    int label = 1;
    imp->add_option("--model", model_path)->required();
    imp->add_option("--data", data_path, "CSV with NaN for missing values")->required();
    imp->add_option("--truth", truth_path, "complete CSV used to report MAE");
    imp->add_option("--label", label, "class used by a labelled model")->capture_default_str();

    // classify
    auto* cls = app.add_subcommand("classify", "predict class labels");
    add_common(cls, common);
    cls->add_option("--model", model_path)->required();
    cls->add_option("--data", data_path)->required();

    // sample
    auto* smp = app.add_subcommand("sample", "draw synthetic trajectories");
    add_common(smp, common);
    SamplerConfig sampler;
    std::string alpha = "2";
    std::vector<double> prefix;
    smp->add_option("--model", model_path)->required();
    smp->add_option("--n", sampler.n_trajectories, "number of trajectories")->required();
    smp->add_option("--alpha", alpha, "rejection factor (inf disables rejection)")->capture_default_str();
    smp->add_option("--max-rejections", sampler.max_rejections)->capture_default_str();
    smp->add_option("--seed", sampler.seed)->capture_default_str();
    smp->add_option("--prefix", prefix, "comma-separated values fixing the first sites")->delimiter(',');
    smp->add_option("--label", label)->capture_default_str();

    // analyze
    auto* ana = app.add_subcommand("analyze", "conditional single-site entropy profiles");
    add_common(ana, common);
    ana->add_option("--model", model_path)->required();
    ana->add_option("--data", data_path)->required();
    ana->add_option("--label", label)->capture_default_str();

    // tune
    auto* tune = app.add_subcommand("tune", "Latin hypercube hyperparameter search");
    add_common(tune, common);
    TrainFlags tune_flags;
    tune_flags.add(tune);
    std::string task = "impute";
    SearchSpace space;
    std::vector<double> pcts = default_missing_grid();
    std::uint64_t search_seed = 1;
    tune->add_option("--data", data_path)->required();
    tune->add_option("--task", task, "impute or classify")->capture_default_str();
    std::vector<double> d_range, eta_range, chi_range;
    tune->add_option("--d-range", d_range, "min,max physical dimension")->delimiter(',')->expected(2);
    tune->add_option("--eta-range", eta_range, "min,max learning rate (searched in log space)")->delimiter(',')->expected(2);
    tune->add_option("--chi-range", chi_range, "min,max bond dimension")->delimiter(',')->expected(2);
    tune->add_option("--n-samples", space.n_samples)->capture_default_str();
    tune->add_option("--folds", space.folds)->capture_default_str();
    tune->add_option("--missing", pcts, "comma-separated missing fractions")->delimiter(',');
    tune->add_option("--search-seed", search_seed)->capture_default_str();

    // gen-nts
    auto* gen = app.add_subcommand("gen-nts", "generate noisy trendy sinusoids");
    add_common(gen, common);
    NTSParams nts;
    std::string phases = "continuous";
    std::string file = "nts.csv";
    gen->add_option("--tau", nts.tau_choices, "periods (several give labelled classes)")->delimiter(',');
    gen->add_option("--m", nts.m_choices, "trend slopes")->delimiter(',');
    gen->add_option("--sigma", nts.sigma)->capture_default_str();
    gen->add_option("--length", nts.T)->capture_default_str();
    gen->add_option("--n", nts.N)->capture_default_str();
    gen->add_option("--seed", nts.seed)->capture_default_str();
    gen->add_option("--phases", phases, "'continuous' or comma-separated phases")->capture_default_str();
    gen->add_option("--file", file, "output file name inside --out")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::vector<std::string> args(argv, argv + argc);
    try {
        if (*train) {
            Manifest m("train", args);
            const int rc = run_train(common, train_flags, data_path, m);
            m.write(common);
            return rc;
        }
        if (*imp) {
            Manifest m("impute", args);
            const int rc = run_impute(common, model_path, data_path, truth_path, label, m);
            m.write(common);
            return rc;
        }
        if (*cls) {
            Manifest m("classify", args);
            const int rc = run_classify(common, model_path, data_path, m);
            m.write(common);
            return rc;
        }
        if (*smp) {
            sampler.alpha = parse_alpha(alpha);
            Manifest m("sample", args);
            const int rc = run_sample(common, model_path, sampler, prefix, label, m);
            m.write(common);
            return rc;
        }
        if (*ana) {
            Manifest m("analyze", args);
            const int rc = run_analyze(common, model_path, data_path, label, m);
            m.write(common);
            return rc;
        }
        if (*tune) {
            if (!d_range.empty()) {
                space.d_min = static_cast<Index>(d_range[0]);
                space.d_max = static_cast<Index>(d_range[1]);
            }
            if (!eta_range.empty()) {
                space.eta_min = eta_range[0];
                space.eta_max = eta_range[1];
            }
            if (!chi_range.empty()) {
                space.chi_min = static_cast<Index>(chi_range[0]);
                space.chi_max = static_cast<Index>(chi_range[1]);
            }
            Manifest m("tune", args);
            const int rc = run_tune(common, tune_flags, data_path, task, space, pcts, search_seed, m);
            m.write(common);
            return rc;
        }
        if (*gen) {
            if (phases != "continuous") {
                nts.phases.clear();
                std::stringstream ss(phases);
                std::string item;
                while (std::getline(ss, item, ',')) nts.phases.push_back(parse_double("phases", item));
            }
            Manifest m("gen-nts", args);
            const int rc = run_gen_nts(common, nts, file, m);
            m.write(common);
            return rc;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return 2;
}
