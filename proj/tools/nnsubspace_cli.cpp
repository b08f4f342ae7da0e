// nnsubspace command-line front end. All numerical work goes through the
// shared library's C API; this file only parses configs, moves buffers and
// maps statuses onto exit codes (0 success, 1 numerical/workflow failure,
// 2 configuration or IO error).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnsubspace.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitWorkflow = 1;
constexpr int kExitConfig = 2;

int exit_code_for(nnas_status status) {
    switch (status) {
    case NNAS_OK:
        return kExitOk;
    case NNAS_ERR_INVALID_ARGUMENT:
    case NNAS_ERR_IO:
    case NNAS_ERR_FORMAT:
        return kExitConfig;
    default:
        return kExitWorkflow;
    }
}

struct CliError {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
    throw CliError{code, message};
}

void check(nnas_status status, const std::string& what) {
    if (status != NNAS_OK) {
        fail(exit_code_for(status), what + ": " + nnas_last_error());
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) {
        fail(kExitConfig, "cannot open config file '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(kExitConfig, "config '" + path + "': " + e.what());
    }
}

void require_file(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path)) {
        fail(kExitConfig, what + " '" + path + "' does not exist");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(kExitConfig, "config field '" + key + "': " + e.what());
    }
}

template <typename T>
T get_required(const json& obj, const std::string& key) {
    if (!obj.contains(key)) {
        fail(kExitConfig, "config is missing required field '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(kExitConfig, "config field '" + key + "': " + e.what());
    }
}

// RAII wrappers around the C handles.
struct DatasetHandle {
    nnas_dataset* ptr = nullptr;
    ~DatasetHandle() { nnas_dataset_free(ptr); }
};
struct NetworkHandle {
    nnas_network* ptr = nullptr;
    ~NetworkHandle() { nnas_network_free(ptr); }
};
struct ReportHandle {
    nnas_report* ptr = nullptr;
    ~ReportHandle() { nnas_report_free(ptr); }
};

void load_dataset(const json& spec, DatasetHandle& out) {
    const std::string kind = get_required<std::string>(spec, "kind");
    if (kind == "idx") {
        const auto images = get_required<std::string>(spec, "images");
        const auto labels = get_required<std::string>(spec, "labels");
        require_file(images, "IDX image file");
        require_file(labels, "IDX label file");
        check(nnas_dataset_load_idx(images.c_str(), labels.c_str(), &out.ptr),
              "loading IDX dataset");
    } else if (kind == "synthetic") {
        const auto seed = get_or<uint64_t>(spec, "seed", 7);
        check(nnas_dataset_synthetic(get_or<uint32_t>(spec, "dim", 64),
                                     get_or<uint32_t>(spec, "classes", 4),
                                     get_or<uint32_t>(spec, "per_class", 250),
                                     get_or<double>(spec, "lo", 0.0),
                                     get_or<double>(spec, "hi", 255.0), seed,
                                     get_or<uint64_t>(spec, "sample_seed", seed), &out.ptr),
              "generating synthetic dataset");
    } else {
        fail(kExitConfig, "dataset kind must be 'idx' or 'synthetic', got '" + kind + "'");
    }
}

nnas_run_config parse_run_config(const json& cfg) {
    nnas_run_config rc;
    nnas_run_config_init(&rc);
    if (!cfg.contains("propagation")) {
        return rc;
    }
    const json& p = cfg.at("propagation");
    rc.alpha = get_or<double>(p, "alpha", rc.alpha);
    rc.beta = get_or<double>(p, "beta", rc.beta);
    rc.sigma = get_or<double>(p, "sigma", rc.sigma);
    rc.gap_threshold = get_or<double>(p, "gap_threshold", rc.gap_threshold);
    rc.r_max = get_or<uint32_t>(p, "r_max", rc.r_max);
    rc.degree = get_or<uint32_t>(p, "degree", rc.degree);
    rc.rs_samples = get_or<uint32_t>(p, "rs_samples", rc.rs_samples);
    rc.mc_samples = get_or<uint32_t>(p, "mc_samples", rc.mc_samples);
    rc.seed = get_or<uint64_t>(p, "seed", rc.seed);
    rc.class_index = get_or<int64_t>(p, "class_index", rc.class_index);
    rc.histogram_bins = get_or<uint32_t>(p, "histogram_bins", rc.histogram_bins);
    rc.clip_lo = get_or<double>(p, "clip_lo", rc.clip_lo);
    rc.clip_hi = get_or<double>(p, "clip_hi", rc.clip_hi);
    const std::string kind = get_or<std::string>(p, "score_kind", "softmax_probability");
    if (kind == "softmax_probability") {
        rc.score_kind = NNAS_SCORE_SOFTMAX_PROBABILITY;
    } else if (kind == "logit") {
        rc.score_kind = NNAS_SCORE_LOGIT;
    } else {
        fail(kExitConfig, "score_kind must be 'softmax_probability' or 'logit'");
    }
    return rc;
}

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    bool verbose = false;
};

void log_verbose(const CommonArgs& args, const std::string& message) {
    if (args.verbose) {
        std::cerr << "[nnsubspace] " << message << '\n';
    }
}

std::string resolve_out_dir(const json& cfg, const CommonArgs& args) {
    if (!args.out_override.empty()) {
        return args.out_override;
    }
    return get_or<std::string>(cfg, "output_dir", "out");
}

// Loads the weights file and the center input named by the config.
void load_model_and_center(const json& cfg, const CommonArgs& args, NetworkHandle& net,
                           std::vector<double>& x0) {
    const auto weights = get_required<std::string>(cfg, "weights");
    require_file(weights, "weights file");
    check(nnas_network_load(weights.c_str(), &net.ptr), "loading weights");

    if (!cfg.contains("dataset")) {
        fail(kExitConfig, "config is missing 'dataset'");
    }
    DatasetHandle data;
    load_dataset(cfg.at("dataset"), data);

    uint32_t count = 0;
    uint32_t dim = 0;
    check(nnas_dataset_info(data.ptr, &count, &dim, nullptr, nullptr, nullptr),
          "reading dataset info");
    uint32_t net_in = 0;
    check(nnas_network_dims(net.ptr, &net_in, nullptr), "reading network dims");
    if (net_in != dim) {
        fail(kExitConfig, "network input dimension " + std::to_string(net_in) +
                              " does not match dataset dimension " + std::to_string(dim));
    }

    const auto index = get_or<uint32_t>(cfg, "image_index", 0);
    if (index >= count) {
        fail(kExitConfig, "image_index " + std::to_string(index) + " out of range (dataset has " +
                              std::to_string(count) + " inputs)");
    }
    x0.assign(dim, 0.0);
    check(nnas_dataset_input(data.ptr, index, x0.data(), dim), "reading center input");
    log_verbose(args, "center input " + std::to_string(index) + " of dimension " +
                          std::to_string(dim));
}

int cmd_train(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    if (!cfg.contains("dataset")) {
        fail(kExitConfig, "train config is missing 'dataset'");
    }
    DatasetHandle data;
    load_dataset(cfg.at("dataset"), data);

    const json train = cfg.contains("train") ? cfg.at("train") : json::object();
    std::vector<uint32_t> hidden = get_or<std::vector<uint32_t>>(train, "hidden", {32, 16});
    const auto epochs = get_or<uint32_t>(train, "epochs", 30);
    const auto batch = get_or<uint32_t>(train, "batch_size", 32);
    const auto lr = get_or<double>(train, "learning_rate", 0.05);
    const auto seed = get_or<uint64_t>(train, "seed", 1);
    const auto weights = get_required<std::string>(cfg, "weights");

    log_verbose(args, "training " + std::to_string(hidden.size()) + " hidden layer(s), " +
                          std::to_string(epochs) + " epoch(s)");
    NetworkHandle net;
    double train_accuracy = 0.0;
    check(nnas_network_train(data.ptr, hidden.empty() ? nullptr : hidden.data(),
                             static_cast<uint32_t>(hidden.size()), epochs, batch, lr, seed,
                             &net.ptr, &train_accuracy),
          "training");
    check(nnas_network_save(net.ptr, weights.c_str()), "saving weights");

    json result;
    result["train_accuracy"] = train_accuracy;
    result["weights"] = weights;
    if (cfg.contains("test_dataset")) {
        DatasetHandle test;
        load_dataset(cfg.at("test_dataset"), test);
        double test_accuracy = 0.0;
        check(nnas_network_accuracy(net.ptr, test.ptr, &test_accuracy), "test accuracy");
        result["test_accuracy"] = test_accuracy;
    }
    std::cout << result.dump(2) << '\n';
    return kExitOk;
}

int run_report_command(const CommonArgs& args, const std::string& what,
                       nnas_status (*runner)(const nnas_network*, const double*, uint32_t,
                                             const nnas_run_config*, const json&,
                                             nnas_report**)) {
    const json cfg = load_config(args.config_path);
    NetworkHandle net;
    std::vector<double> x0;
    load_model_and_center(cfg, args, net, x0);
    const nnas_run_config rc = parse_run_config(cfg);

    ReportHandle report;
    check(runner(net.ptr, x0.data(), static_cast<uint32_t>(x0.size()), &rc, cfg, &report.ptr),
          what);
    const std::string out_dir = resolve_out_dir(cfg, args);
    check(nnas_report_write_artifacts(report.ptr, out_dir.c_str()), "writing artifacts");
    std::cout << "wrote " << out_dir << '\n';
    return kExitOk;
}

int cmd_analyze(const CommonArgs& args) {
    return run_report_command(args, "analysis",
                              [](const nnas_network* net, const double* x0, uint32_t dim,
                                 const nnas_run_config* rc, const json&, nnas_report** out) {
                                  return nnas_analyze(net, x0, dim, rc, out);
                              });
}

int cmd_compare(const CommonArgs& args) {
    return run_report_command(
        args, "comparison",
        [](const nnas_network* net, const double* x0, uint32_t dim, const nnas_run_config* rc,
           const json& cfg, nnas_report** out) {
            const json p = cfg.contains("propagation") ? cfg.at("propagation") : json::object();
            const auto mc_seed = get_or<uint64_t>(p, "mc_seed", rc->seed + 1);
            if (mc_seed == rc->seed) {
                fail(kExitConfig,
                     "seed collision: mc_seed must differ from the workflow seed so the "
                     "baseline draws are independent");
            }
            return nnas_compare(net, x0, dim, rc, mc_seed, out);
        });
}

int cmd_adversarial(const CommonArgs& args) {
    return run_report_command(
        args, "adversarial example",
        [](const nnas_network* net, const double* x0, uint32_t dim, const nnas_run_config* rc,
           const json& cfg, nnas_report** out) {
            const double epsilon = get_or<double>(cfg, "epsilon", 0.0);
            if (epsilon < 0.0) {
                fail(kExitConfig, "epsilon must be >= 0");
            }
            return nnas_adversarial(net, x0, dim, rc, epsilon, out);
        });
}

int cmd_attribute(const CommonArgs& args) {
    return run_report_command(
        args, "attribution",
        [](const nnas_network* net, const double* x0, uint32_t dim, const nnas_run_config* rc,
           const json& cfg, nnas_report** out) {
            const auto rank = get_or<uint32_t>(cfg, "rank", 0);
            if (rank > dim) {
                fail(kExitConfig, "rank override " + std::to_string(rank) +
                                      " exceeds input dimension " + std::to_string(dim));
            }
            return nnas_attribute(net, x0, dim, rc, rank, out);
        });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("nnsubspace ") + nnas_version() +
                 " - active-subspace uncertainty propagation for feed-forward networks"};
    app.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "JSON run configuration")->required();
        sub->add_option("--out", args.out_override, "output directory override");
        sub->add_flag("-v,--verbose", args.verbose, "progress logging on stderr");
    };

    CLI::App* train = app.add_subcommand("train", "train a softplus classifier");
    CLI::App* analyze =
        app.add_subcommand("analyze", "subspace + response-surface propagation");
    CLI::App* compare = app.add_subcommand("compare", "propagation vs direct Monte Carlo");
    CLI::App* adversarial =
        app.add_subcommand("adversarial", "perturb along the leading active direction");
    CLI::App* attribute = app.add_subcommand("attribute", "per-feature activity scores");
    for (CLI::App* sub : {train, analyze, compare, adversarial, attribute}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed()) {
            return cmd_train(args);
        }
        if (analyze->parsed()) {
            return cmd_analyze(args);
        }
        if (compare->parsed()) {
            return cmd_compare(args);
        }
        if (adversarial->parsed()) {
            return cmd_adversarial(args);
        }
        if (attribute->parsed()) {
            return cmd_attribute(args);
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitWorkflow;
    }
    return kExitConfig;
}
