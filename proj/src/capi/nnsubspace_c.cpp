#include "nnsubspace.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "core/network.hpp"
#include "core/propagate.hpp"
#include "core/report.hpp"
#include "core/subspace.hpp"
#include "core/version.hpp"

namespace {

thread_local std::string g_last_error = "no error";

void set_last_error(const std::string& message) {
    g_last_error = message;
}

nnas_status map_kind(nnas::ErrorKind kind) {
    switch (kind) {
    case nnas::ErrorKind::InvalidArgument:
        return NNAS_ERR_INVALID_ARGUMENT;
    case nnas::ErrorKind::DimensionMismatch:
        return NNAS_ERR_DIMENSION_MISMATCH;
    case nnas::ErrorKind::Io:
        return NNAS_ERR_IO;
    case nnas::ErrorKind::Format:
        return NNAS_ERR_FORMAT;
    case nnas::ErrorKind::Numeric:
        return NNAS_ERR_NUMERIC;
    }
    return NNAS_ERR_INTERNAL;
}

template <typename Fn>
nnas_status guarded(Fn&& fn) noexcept {
    try {
        return fn();
    } catch (const nnas::Error& e) {
        set_last_error(e.what());
        return map_kind(e.kind());
    } catch (const std::bad_alloc&) {
        set_last_error("out of memory");
        return NNAS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        set_last_error(e.what());
        return NNAS_ERR_INTERNAL;
    } catch (...) {
        set_last_error("unknown error");
        return NNAS_ERR_INTERNAL;
    }
}

nnas_status invalid(const std::string& message) {
    set_last_error(message);
    return NNAS_ERR_INVALID_ARGUMENT;
}

enum class ReportKind { Analysis, Comparison, Adversarial, Attribution };

nnas::QoISpec make_spec(uint32_t class_index, nnas_score_kind kind) {
    nnas::QoISpec spec;
    spec.class_index = class_index;
    spec.kind = (kind == NNAS_SCORE_LOGIT) ? nnas::ScoreKind::Logit
                                           : nnas::ScoreKind::SoftmaxProbability;
    return spec;
}

nnas::PropagationConfig convert_config(const nnas_run_config& cfg) {
    nnas::PropagationConfig out;
    out.alpha = cfg.alpha;
    out.beta = cfg.beta;
    out.sigma = cfg.sigma;
    out.gap_threshold = cfg.gap_threshold;
    out.r_max = cfg.r_max;
    out.degree = cfg.degree;
    out.rs_samples = cfg.rs_samples;
    out.mc_samples = cfg.mc_samples;
    out.seed = cfg.seed;
    out.score_kind = (cfg.score_kind == NNAS_SCORE_LOGIT)
                         ? nnas::ScoreKind::Logit
                         : nnas::ScoreKind::SoftmaxProbability;
    out.class_index = cfg.class_index;
    out.histogram_bins = cfg.histogram_bins;
    return out;
}

nnas::NoiseModel convert_noise(const double* x0, uint32_t dim, const nnas_run_config& cfg) {
    nnas::NoiseModel nm;
    nm.center.assign(x0, x0 + dim);
    nm.sigma = cfg.sigma;
    nm.lo = cfg.clip_lo;
    nm.hi = cfg.clip_hi;
    return nm;
}

nnas::QoISpec resolve_spec(const nnas::DenseNetwork& net, const nnas::Vec& x0,
                           const nnas::PropagationConfig& cfg) {
    nnas::QoISpec spec;
    spec.kind = cfg.score_kind;
    if (cfg.class_index < 0) {
        spec.class_index = net.predict(x0);
    } else {
        nnas::require(static_cast<std::size_t>(cfg.class_index) < net.output_dim(),
                      nnas::ErrorKind::InvalidArgument,
                      "config: class_index out of range for the network");
        spec.class_index = static_cast<std::size_t>(cfg.class_index);
    }
    return spec;
}

// Shared subspace estimation for the adversarial and attribution entry
// points; mirrors the workflow's seed derivation so the same seed sees the
// same subspace.
struct SubspaceEstimate {
    nnas::Spectrum spectrum;
    nnas::ActiveSubspace subspace;
};

SubspaceEstimate estimate_subspace(const nnas::DenseNetwork& net, const nnas::QoISpec& spec,
                                   const nnas::NoiseModel& nm,
                                   const nnas::PropagationConfig& cfg) {
    const std::size_t d = net.input_dim();
    nnas::require(cfg.sigma > 0.0, nnas::ErrorKind::InvalidArgument,
                  "subspace estimation needs sigma > 0");
    const std::size_t m = nnas::sample_count(cfg.alpha, cfg.beta, d);
    nnas::QoiField field(net, spec);
    nnas::RandomSource rng = nnas::RandomSource(cfg.seed).derive(1);
    nnas::CEstimate est = nnas::estimate_c(field, nm, m, rng);
    SubspaceEstimate out;
    out.spectrum = nnas::decompose(est.c, m);
    out.subspace = nnas::select_rank(out.spectrum, cfg.gap_threshold,
                                     std::min<std::size_t>(cfg.r_max, d - 1));
    return out;
}

} // namespace

struct nnas_dataset {
    nnas::Dataset data;
};

struct nnas_network {
    nnas::DenseNetwork net;
};

struct nnas_report {
    ReportKind kind = ReportKind::Analysis;
    nnas::PropagationReport prop;     // analysis / comparison
    nnas::AdversarialResult adv;      // adversarial
    nnas::Vec attribution_scores;     // attribution
    std::size_t attribution_rank = 0;
    nnas::Vec eigenvalues;            // adversarial / attribution spectra
    nnas::QoISpec qoi;
    nnas::PropagationConfig cfg;
    nnas::NoiseModel noise;
    std::string json_text;
};

extern "C" {

const char* nnas_version(void) {
    return nnas::kVersionString;
}

const char* nnas_last_error(void) {
    return g_last_error.c_str();
}

/* ------------------------------------------------------------------ */
/* Datasets                                                            */

nnas_status nnas_dataset_load_idx(const char* images_path, const char* labels_path,
                                  nnas_dataset** out) {
    if (!images_path || !labels_path || !out) {
        return invalid("nnas_dataset_load_idx: NULL argument");
    }
    return guarded([&] {
        auto* handle = new nnas_dataset{nnas::load_idx(images_path, labels_path)};
        *out = handle;
        return NNAS_OK;
    });
}

nnas_status nnas_dataset_synthetic(uint32_t dim, uint32_t classes, uint32_t per_class,
                                   double lo, double hi, uint64_t seed, uint64_t sample_seed,
                                   nnas_dataset** out) {
    if (!out) {
        return invalid("nnas_dataset_synthetic: NULL output handle");
    }
    return guarded([&] {
        auto* handle = new nnas_dataset{
            nnas::make_blobs(dim, classes, per_class, lo, hi, seed, sample_seed)};
        *out = handle;
        return NNAS_OK;
    });
}

nnas_status nnas_dataset_info(const nnas_dataset* data, uint32_t* count, uint32_t* dim,
                              uint32_t* classes, double* lo, double* hi) {
    if (!data) {
        return invalid("nnas_dataset_info: NULL dataset");
    }
    if (count) {
        *count = static_cast<uint32_t>(data->data.size());
    }
    if (dim) {
        *dim = static_cast<uint32_t>(data->data.dim());
    }
    if (classes) {
        *classes = static_cast<uint32_t>(data->data.num_classes);
    }
    if (lo) {
        *lo = data->data.feature_lo;
    }
    if (hi) {
        *hi = data->data.feature_hi;
    }
    return NNAS_OK;
}

nnas_status nnas_dataset_input(const nnas_dataset* data, uint32_t index, double* buffer,
                               uint32_t buffer_len) {
    if (!data || !buffer) {
        return invalid("nnas_dataset_input: NULL argument");
    }
    if (index >= data->data.size()) {
        return invalid("nnas_dataset_input: index out of range");
    }
    const nnas::Vec& x = data->data.inputs[index];
    if (buffer_len < x.size()) {
        return invalid("nnas_dataset_input: buffer too small");
    }
    std::memcpy(buffer, x.data(), x.size() * sizeof(double));
    return NNAS_OK;
}

nnas_status nnas_dataset_label(const nnas_dataset* data, uint32_t index, uint32_t* label) {
    if (!data || !label) {
        return invalid("nnas_dataset_label: NULL argument");
    }
    if (index >= data->data.size()) {
        return invalid("nnas_dataset_label: index out of range");
    }
    *label = static_cast<uint32_t>(data->data.labels[index]);
    return NNAS_OK;
}

void nnas_dataset_free(nnas_dataset* data) {
    delete data;
}

/* ------------------------------------------------------------------ */
/* Networks                                                            */

nnas_status nnas_network_train(const nnas_dataset* data, const uint32_t* hidden_sizes,
                               uint32_t hidden_count, uint32_t epochs, uint32_t batch_size,
                               double learning_rate, uint64_t seed, nnas_network** out,
                               double* train_accuracy) {
    if (!data || !out || (hidden_count > 0 && !hidden_sizes)) {
        return invalid("nnas_network_train: NULL argument");
    }
    return guarded([&] {
        nnas::TrainConfig cfg;
        cfg.hidden_sizes.assign(hidden_sizes, hidden_sizes + hidden_count);
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        nnas::TrainResult result = nnas::train_sgd(data->data, cfg);
        if (train_accuracy) {
            *train_accuracy = result.train_accuracy;
        }
        *out = new nnas_network{std::move(result.network)};
        return NNAS_OK;
    });
}

nnas_status nnas_network_load(const char* path, nnas_network** out) {
    if (!path || !out) {
        return invalid("nnas_network_load: NULL argument");
    }
    return guarded([&] {
        *out = new nnas_network{nnas::load_weights(path)};
        return NNAS_OK;
    });
}

nnas_status nnas_network_save(const nnas_network* net, const char* path) {
    if (!net || !path) {
        return invalid("nnas_network_save: NULL argument");
    }
    return guarded([&] {
        nnas::save_weights(net->net, path);
        return NNAS_OK;
    });
}

nnas_status nnas_network_dims(const nnas_network* net, uint32_t* input_dim,
                              uint32_t* output_dim) {
    if (!net) {
        return invalid("nnas_network_dims: NULL network");
    }
    if (input_dim) {
        *input_dim = static_cast<uint32_t>(net->net.input_dim());
    }
    if (output_dim) {
        *output_dim = static_cast<uint32_t>(net->net.output_dim());
    }
    return NNAS_OK;
}

nnas_status nnas_network_forward(const nnas_network* net, const double* x, uint32_t x_len,
                                 double* logits, uint32_t logits_len) {
    if (!net || !x || !logits) {
        return invalid("nnas_network_forward: NULL argument");
    }
    return guarded([&] {
        const nnas::Vec out = net->net.forward(nnas::Vec(x, x + x_len));
        nnas::require(logits_len >= out.size(), nnas::ErrorKind::InvalidArgument,
                      "nnas_network_forward: logits buffer too small");
        std::memcpy(logits, out.data(), out.size() * sizeof(double));
        return NNAS_OK;
    });
}

nnas_status nnas_network_qoi(const nnas_network* net, const double* x, uint32_t x_len,
                             uint32_t class_index, nnas_score_kind kind, double* value) {
    if (!net || !x || !value) {
        return invalid("nnas_network_qoi: NULL argument");
    }
    return guarded([&] {
        *value = net->net.qoi(nnas::Vec(x, x + x_len), make_spec(class_index, kind));
        return NNAS_OK;
    });
}

nnas_status nnas_network_grad_qoi(const nnas_network* net, const double* x, uint32_t x_len,
                                  uint32_t class_index, nnas_score_kind kind, double* gradient,
                                  uint32_t gradient_len) {
    if (!net || !x || !gradient) {
        return invalid("nnas_network_grad_qoi: NULL argument");
    }
    return guarded([&] {
        const nnas::Vec g = net->net.grad_qoi(nnas::Vec(x, x + x_len),
                                              make_spec(class_index, kind));
        nnas::require(gradient_len >= g.size(), nnas::ErrorKind::InvalidArgument,
                      "nnas_network_grad_qoi: gradient buffer too small");
        std::memcpy(gradient, g.data(), g.size() * sizeof(double));
        return NNAS_OK;
    });
}

nnas_status nnas_network_predict(const nnas_network* net, const double* x, uint32_t x_len,
                                 uint32_t* label) {
    if (!net || !x || !label) {
        return invalid("nnas_network_predict: NULL argument");
    }
    return guarded([&] {
        *label = static_cast<uint32_t>(net->net.predict(nnas::Vec(x, x + x_len)));
        return NNAS_OK;
    });
}

nnas_status nnas_network_accuracy(const nnas_network* net, const nnas_dataset* data,
                                  double* accuracy) {
    if (!net || !data || !accuracy) {
        return invalid("nnas_network_accuracy: NULL argument");
    }
    return guarded([&] {
        *accuracy = nnas::accuracy(net->net, data->data);
        return NNAS_OK;
    });
}

void nnas_network_free(nnas_network* net) {
    delete net;
}

/* ------------------------------------------------------------------ */
/* Analyses                                                            */

void nnas_run_config_init(nnas_run_config* cfg) {
    if (!cfg) {
        return;
    }
    cfg->alpha = 10.0;
    cfg->beta = 10.0;
    cfg->sigma = 20.0;
    cfg->gap_threshold = 10.0;
    cfg->r_max = 5;
    cfg->degree = 2;
    cfg->rs_samples = 50000;
    cfg->mc_samples = 50000;
    cfg->seed = 42;
    cfg->score_kind = NNAS_SCORE_SOFTMAX_PROBABILITY;
    cfg->class_index = -1;
    cfg->histogram_bins = 50;
    cfg->clip_lo = 0.0;
    cfg->clip_hi = 255.0;
}

nnas_status nnas_analyze(const nnas_network* net, const double* x0, uint32_t dim,
                         const nnas_run_config* cfg, nnas_report** out) {
    if (!net || !x0 || !cfg || !out) {
        return invalid("nnas_analyze: NULL argument");
    }
    return guarded([&] {
        const nnas::PropagationConfig pcfg = convert_config(*cfg);
        const nnas::NoiseModel nm = convert_noise(x0, dim, *cfg);
        auto report = std::make_unique<nnas_report>();
        report->kind = ReportKind::Analysis;
        report->prop = nnas::run_workflow(net->net, nm, pcfg);
        report->json_text = nnas::report_to_json(report->prop).dump(2) + "\n";
        *out = report.release();
        return NNAS_OK;
    });
}

nnas_status nnas_compare(const nnas_network* net, const double* x0, uint32_t dim,
                         const nnas_run_config* cfg, uint64_t mc_seed, nnas_report** out) {
    if (!net || !x0 || !cfg || !out) {
        return invalid("nnas_compare: NULL argument");
    }
    return guarded([&] {
        nnas::require(mc_seed != cfg->seed, nnas::ErrorKind::InvalidArgument,
                      "nnas_compare: the baseline seed must differ from the workflow seed");
        const nnas::PropagationConfig pcfg = convert_config(*cfg);
        const nnas::NoiseModel nm = convert_noise(x0, dim, *cfg);
        auto report = std::make_unique<nnas_report>();
        report->kind = ReportKind::Comparison;
        report->prop = nnas::run_comparison(net->net, nm, pcfg, mc_seed);
        report->json_text = nnas::compare_to_json(report->prop).dump(2) + "\n";
        *out = report.release();
        return NNAS_OK;
    });
}

nnas_status nnas_adversarial(const nnas_network* net, const double* x0, uint32_t dim,
                             const nnas_run_config* cfg, double epsilon, nnas_report** out) {
    if (!net || !x0 || !cfg || !out) {
        return invalid("nnas_adversarial: NULL argument");
    }
    return guarded([&] {
        const nnas::PropagationConfig pcfg = convert_config(*cfg);
        const nnas::NoiseModel nm = convert_noise(x0, dim, *cfg);
        nnas::validate(nm);
        auto report = std::make_unique<nnas_report>();
        report->kind = ReportKind::Adversarial;
        report->cfg = pcfg;
        report->noise = nm;
        report->qoi = resolve_spec(net->net, nm.center, pcfg);
        const SubspaceEstimate est = estimate_subspace(net->net, report->qoi, nm, pcfg);
        nnas::QoiField field(net->net, report->qoi);
        report->adv = nnas::adversarial_perturb(field, nm, est.subspace, epsilon);
        report->eigenvalues = est.spectrum.eigenvalues;
        report->json_text =
            nnas::adversarial_to_json(report->adv, report->qoi, pcfg, nm).dump(2) + "\n";
        *out = report.release();
        return NNAS_OK;
    });
}

nnas_status nnas_attribute(const nnas_network* net, const double* x0, uint32_t dim,
                           const nnas_run_config* cfg, uint32_t rank_override,
                           nnas_report** out) {
    if (!net || !x0 || !cfg || !out) {
        return invalid("nnas_attribute: NULL argument");
    }
    return guarded([&] {
        const nnas::PropagationConfig pcfg = convert_config(*cfg);
        const nnas::NoiseModel nm = convert_noise(x0, dim, *cfg);
        nnas::validate(nm);
        nnas::require(rank_override <= dim, nnas::ErrorKind::InvalidArgument,
                      "nnas_attribute: rank override exceeds the input dimension");
        auto report = std::make_unique<nnas_report>();
        report->kind = ReportKind::Attribution;
        report->cfg = pcfg;
        report->noise = nm;
        report->qoi = resolve_spec(net->net, nm.center, pcfg);
        const SubspaceEstimate est = estimate_subspace(net->net, report->qoi, nm, pcfg);
        report->attribution_rank = rank_override == 0 ? est.subspace.rank : rank_override;
        report->attribution_scores = nnas::attribution(est.spectrum, report->attribution_rank);
        report->eigenvalues = est.spectrum.eigenvalues;

        double sum = 0.0;
        for (double s : report->attribution_scores) {
            sum += s;
        }
        nlohmann::json doc;
        doc["version"] = nnas::kVersionString;
        doc["config"] = nnas::config_to_json(pcfg, nm);
        doc["rank"] = report->attribution_rank;
        doc["score_sum"] = sum;
        doc["qoi"] = {{"class_index", report->qoi.class_index},
                      {"score_kind", report->qoi.kind == nnas::ScoreKind::Logit
                                         ? "logit"
                                         : "softmax_probability"}};
        report->json_text = doc.dump(2) + "\n";
        *out = report.release();
        return NNAS_OK;
    });
}

/* ------------------------------------------------------------------ */
/* Reports                                                             */

const char* nnas_report_json(const nnas_report* report) {
    return report ? report->json_text.c_str() : "";
}

nnas_status nnas_report_write_artifacts(const nnas_report* report, const char* out_dir) {
    if (!report || !out_dir) {
        return invalid("nnas_report_write_artifacts: NULL argument");
    }
    return guarded([&] {
        switch (report->kind) {
        case ReportKind::Analysis:
            nnas::write_analysis_artifacts(report->prop, out_dir);
            break;
        case ReportKind::Comparison:
            nnas::write_compare_artifacts(report->prop, out_dir);
            break;
        case ReportKind::Adversarial:
            nnas::write_adversarial_artifacts(report->adv, report->qoi, report->cfg,
                                              report->noise, out_dir);
            break;
        case ReportKind::Attribution:
            nnas::write_attribution_artifacts(report->attribution_scores,
                                              report->attribution_rank, report->cfg,
                                              report->qoi, out_dir);
            break;
        }
        return NNAS_OK;
    });
}

nnas_status nnas_report_scalar(const nnas_report* report, const char* key, double* value) {
    if (!report || !key || !value) {
        return invalid("nnas_report_scalar: NULL argument");
    }
    const std::string k = key;
    const auto& prop = report->prop;
    if (k == "rs_mean" && report->kind != ReportKind::Adversarial &&
        report->kind != ReportKind::Attribution) {
        *value = prop.rs_stats.mean;
        return NNAS_OK;
    }
    if (k == "rs_std" && report->kind != ReportKind::Adversarial &&
        report->kind != ReportKind::Attribution) {
        *value = prop.rs_stats.stddev;
        return NNAS_OK;
    }
    if (k == "mc_mean" && prop.mc_stats) {
        *value = prop.mc_stats->mean;
        return NNAS_OK;
    }
    if (k == "mc_std" && prop.mc_stats) {
        *value = prop.mc_stats->stddev;
        return NNAS_OK;
    }
    if (k == "rank") {
        *value = report->kind == ReportKind::Attribution
                     ? static_cast<double>(report->attribution_rank)
                     : static_cast<double>(prop.subspace.rank);
        return NNAS_OK;
    }
    if (k == "gradient_samples") {
        *value = static_cast<double>(prop.gradient_samples);
        return NNAS_OK;
    }
    if (k == "r_squared") {
        *value = prop.surface.r_squared;
        return NNAS_OK;
    }
    if (k == "rel_err_mean" && prop.comparison) {
        *value = prop.comparison->rel_err_mean;
        return NNAS_OK;
    }
    if (k == "rel_err_std" && prop.comparison) {
        *value = prop.comparison->rel_err_std;
        return NNAS_OK;
    }
    if (k == "cost_ratio_weighted" && prop.comparison) {
        *value = prop.comparison->cost_ratio_weighted;
        return NNAS_OK;
    }
    if (k == "cost_ratio_unweighted" && prop.comparison) {
        *value = prop.comparison->cost_ratio_unweighted;
        return NNAS_OK;
    }
    if (k == "epsilon" && report->kind == ReportKind::Adversarial) {
        *value = report->adv.epsilon;
        return NNAS_OK;
    }
    if (k == "score_before" && report->kind == ReportKind::Adversarial) {
        *value = report->adv.score_before;
        return NNAS_OK;
    }
    if (k == "score_after" && report->kind == ReportKind::Adversarial) {
        *value = report->adv.score_after;
        return NNAS_OK;
    }
    if (k == "score_sum" && report->kind == ReportKind::Attribution) {
        double sum = 0.0;
        for (double s : report->attribution_scores) {
            sum += s;
        }
        *value = sum;
        return NNAS_OK;
    }
    return invalid("nnas_report_scalar: key '" + k + "' not available for this report");
}

nnas_status nnas_report_vector(const nnas_report* report, const char* key, double* buffer,
                               uint32_t buffer_len, uint32_t* written) {
    if (!report || !key || !written) {
        return invalid("nnas_report_vector: NULL argument");
    }
    const std::string k = key;
    const nnas::Vec* source = nullptr;
    if (k == "eigenvalues") {
        source = (report->kind == ReportKind::Analysis || report->kind == ReportKind::Comparison)
                     ? &report->prop.spectrum.eigenvalues
                     : &report->eigenvalues;
    } else if (k == "x_adv" && report->kind == ReportKind::Adversarial) {
        source = &report->adv.x_adv;
    } else if (k == "x0") {
        source = (report->kind == ReportKind::Adversarial ||
                  report->kind == ReportKind::Attribution)
                     ? &report->noise.center
                     : &report->prop.noise.center;
    } else if (k == "attribution" && report->kind == ReportKind::Attribution) {
        source = &report->attribution_scores;
    }
    if (!source) {
        return invalid("nnas_report_vector: key '" + k + "' not available for this report");
    }
    *written = static_cast<uint32_t>(source->size());
    if (!buffer) {
        return NNAS_OK; // length query
    }
    if (buffer_len < source->size()) {
        return invalid("nnas_report_vector: buffer too small");
    }
    std::memcpy(buffer, source->data(), source->size() * sizeof(double));
    return NNAS_OK;
}

void nnas_report_free(nnas_report* report) {
    delete report;
}

} // extern "C"
