#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/csv.hpp"
#include "core/version.hpp"

namespace nnas {

namespace {

nlohmann::json finite_or_string(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    return v;
}

const char* score_kind_name(ScoreKind kind) {
    return kind == ScoreKind::Logit ? "logit" : "softmax_probability";
}

nlohmann::json qoi_to_json(const QoISpec& spec) {
    return {{"class_index", spec.class_index}, {"score_kind", score_kind_name(spec.kind)}};
}

} // namespace

nlohmann::json to_json(const OutputStats& stats) {
    nlohmann::json hist;
    hist["edges"] = stats.hist.edges;
    hist["counts"] = stats.hist.counts;
    return {
        {"mean", stats.mean},
        {"std", stats.stddev},
        {"sample_count", stats.sample_count},
        {"forward_calls", stats.forward_calls},
        {"gradient_calls", stats.gradient_calls},
        {"cost_unweighted", unweighted_cost(stats)},
        {"cost_weighted", weighted_cost(stats)},
        {"histogram", hist},
    };
}

nlohmann::json to_json(const PolySurface& surface) {
    nlohmann::json monomials = nlohmann::json::array();
    for (const auto& exps : monomial_exponents(surface.rank, surface.degree)) {
        monomials.push_back(exps);
    }
    return {
        {"rank", surface.rank},
        {"degree", surface.degree},
        {"coefficients", surface.coefficients},
        {"monomials", monomials},
        {"r_squared", surface.r_squared},
        {"residual_rms", surface.residual_rms},
    };
}

nlohmann::json config_to_json(const PropagationConfig& cfg, const NoiseModel& nm) {
    return {
        {"alpha", cfg.alpha},
        {"beta", cfg.beta},
        {"sigma", cfg.sigma},
        {"gap_threshold", cfg.gap_threshold},
        {"r_max", cfg.r_max},
        {"degree", cfg.degree},
        {"rs_samples", cfg.rs_samples},
        {"mc_samples", cfg.mc_samples},
        {"seed", cfg.seed},
        {"score_kind", score_kind_name(cfg.score_kind)},
        {"class_index", cfg.class_index},
        {"histogram_bins", cfg.histogram_bins},
        {"clip_lo", finite_or_string(nm.lo)},
        {"clip_hi", finite_or_string(nm.hi)},
    };
}

nlohmann::json report_to_json(const PropagationReport& report) {
    nlohmann::json doc;
    doc["version"] = kVersionString;
    doc["config"] = config_to_json(report.config, report.noise);
    doc["input_dim"] = report.input_dim;
    doc["gradient_samples"] = report.gradient_samples;
    doc["sigma_zero"] = report.sigma_zero;
    doc["low_confidence_subspace"] = report.low_confidence_subspace;
    if (report.qoi) {
        doc["qoi"] = qoi_to_json(*report.qoi);
    }

    if (!report.sigma_zero) {
        const std::size_t top = std::min<std::size_t>(report.spectrum.eigenvalues.size(), 10);
        Vec top_eigenvalues(report.spectrum.eigenvalues.begin(),
                            report.spectrum.eigenvalues.begin() + top);
        double trace = 0.0;
        for (double lambda : report.spectrum.eigenvalues) {
            trace += lambda;
        }
        doc["spectrum"] = {{"top_eigenvalues", top_eigenvalues}, {"trace", trace}};
        doc["subspace"] = {
            {"rank", report.subspace.rank},
            {"gap_ratio", finite_or_string(report.subspace.gap_ratio)},
            {"no_clear_gap", report.subspace.no_clear_gap},
        };
        doc["surface"] = to_json(report.surface);
    }

    doc["rs_stats"] = to_json(report.rs_stats);
    if (report.mc_stats) {
        doc["mc_stats"] = to_json(*report.mc_stats);
    }
    if (report.comparison) {
        doc["comparison"] = {
            {"rel_err_mean", report.comparison->rel_err_mean},
            {"rel_err_std", report.comparison->rel_err_std},
            {"cost_ratio_weighted", report.comparison->cost_ratio_weighted},
            {"cost_ratio_unweighted", report.comparison->cost_ratio_unweighted},
        };
    }
    return doc;
}

nlohmann::json compare_to_json(const PropagationReport& report) {
    require(report.mc_stats.has_value() && report.comparison.has_value(),
            ErrorKind::InvalidArgument, "compare document needs both statistics blocks");
    nlohmann::json doc;
    doc["version"] = kVersionString;
    doc["config"] = config_to_json(report.config, report.noise);
    if (report.qoi) {
        doc["qoi"] = qoi_to_json(*report.qoi);
    }
    doc["rs_stats"] = to_json(report.rs_stats);
    doc["mc_stats"] = to_json(*report.mc_stats);
    doc["rel_err_mean"] = report.comparison->rel_err_mean;
    doc["rel_err_std"] = report.comparison->rel_err_std;
    doc["cost_ratio_weighted"] = report.comparison->cost_ratio_weighted;
    doc["cost_ratio_unweighted"] = report.comparison->cost_ratio_unweighted;
    return doc;
}

nlohmann::json adversarial_to_json(const AdversarialResult& result, const QoISpec& spec,
                                   const PropagationConfig& cfg, const NoiseModel& nm) {
    nlohmann::json doc;
    doc["version"] = kVersionString;
    doc["config"] = config_to_json(cfg, nm);
    doc["qoi"] = qoi_to_json(spec);
    doc["epsilon"] = result.epsilon;
    doc["score_before"] = result.score_before;
    doc["score_after"] = result.score_after;
    doc["score_change"] = result.score_after - result.score_before;
    doc["direction_sign"] = result.direction_sign;
    return doc;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    require(!ec && std::filesystem::is_directory(path), ErrorKind::Io,
            "cannot create output directory '" + path + "'");
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
    out.flush();
    require(out.good(), ErrorKind::Io, "write to '" + path + "' failed");
}

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_histogram_csv(const Histogram& hist, const std::string& path) {
    CsvWriter csv(path, {"bin_lo", "bin_hi", "count"});
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        csv.row({format_double(hist.edges[i]), format_double(hist.edges[i + 1]),
                 std::to_string(hist.counts[i])});
    }
    csv.close();
}

void write_feature_vector_csv(const Vec& values, const std::string& path) {
    CsvWriter csv(path, {"feature_index", "value"});
    for (std::size_t i = 0; i < values.size(); ++i) {
        csv.row({std::to_string(i), format_double(values[i])});
    }
    csv.close();
}

} // namespace

void write_analysis_artifacts(const PropagationReport& report, const std::string& out_dir) {
    ensure_directory(out_dir);
    write_json_file(report_to_json(report), join(out_dir, "report.json"));
    write_histogram_csv(report.rs_stats.hist, join(out_dir, "histogram.csv"));

    if (report.sigma_zero) {
        return; // no subspace artifacts for a point-mass input
    }

    {
        CsvWriter csv(join(out_dir, "spectrum.csv"), {"index", "eigenvalue"});
        for (std::size_t i = 0; i < report.spectrum.eigenvalues.size(); ++i) {
            csv.row({std::to_string(i), format_double(report.spectrum.eigenvalues[i])});
        }
        csv.close();
    }
    {
        const Mat& w = report.spectrum.eigenvectors;
        std::vector<std::string> header(w.cols());
        for (std::size_t j = 0; j < w.cols(); ++j) {
            header[j] = "w_" + std::to_string(j + 1);
        }
        CsvWriter csv(join(out_dir, "eigenvectors.csv"), header);
        std::vector<std::string> fields(w.cols());
        for (std::size_t i = 0; i < w.rows(); ++i) {
            for (std::size_t j = 0; j < w.cols(); ++j) {
                fields[j] = format_double(w(i, j));
            }
            csv.row(fields);
        }
        csv.close();
    }
    {
        const std::size_t rank = report.subspace.rank;
        std::vector<std::string> header;
        header.push_back("sample_index");
        for (std::size_t j = 0; j < rank; ++j) {
            header.push_back("x_r_" + std::to_string(j + 1));
        }
        header.push_back("f_value");
        CsvWriter csv(join(out_dir, "summary.csv"), header);
        for (std::size_t i = 0; i < report.training_samples.size(); ++i) {
            std::vector<std::string> fields;
            fields.push_back(std::to_string(i));
            for (double v : report.training_samples[i].x_r) {
                fields.push_back(format_double(v));
            }
            fields.push_back(format_double(report.training_samples[i].f));
            csv.row(fields);
        }
        csv.close();
    }
    {
        // Fitted curve along the first active variable, remaining active
        // variables held at zero (their noise mean).
        double lo = report.training_samples.front().x_r[0];
        double hi = lo;
        for (const SurfaceSample& s : report.training_samples) {
            lo = std::min(lo, s.x_r[0]);
            hi = std::max(hi, s.x_r[0]);
        }
        const std::size_t points = 201;
        CsvWriter csv(join(out_dir, "fitted_curve.csv"), {"x_r_1", "fitted_value"});
        Vec x_r(report.subspace.rank, 0.0);
        for (std::size_t i = 0; i < points; ++i) {
            x_r[0] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
            csv.row({format_double(x_r[0]), format_double(eval_surface(report.surface, x_r))});
        }
        csv.close();
    }
    write_json_file(to_json(report.surface), join(out_dir, "surface.json"));
}

void write_compare_artifacts(const PropagationReport& report, const std::string& out_dir) {
    ensure_directory(out_dir);
    write_json_file(compare_to_json(report), join(out_dir, "compare.json"));
}

void write_adversarial_artifacts(const AdversarialResult& result, const QoISpec& spec,
                                 const PropagationConfig& cfg, const NoiseModel& nm,
                                 const std::string& out_dir) {
    ensure_directory(out_dir);
    write_json_file(adversarial_to_json(result, spec, cfg, nm), join(out_dir, "adversarial.json"));
    write_feature_vector_csv(nm.center, join(out_dir, "original.csv"));
    write_feature_vector_csv(result.x_adv, join(out_dir, "perturbed.csv"));
}

void write_attribution_artifacts(const Vec& scores, std::size_t rank_used,
                                 const PropagationConfig& cfg, const QoISpec& spec,
                                 const std::string& out_dir) {
    ensure_directory(out_dir);
    {
        CsvWriter csv(join(out_dir, "attribution.csv"), {"feature_index", "score"});
        for (std::size_t i = 0; i < scores.size(); ++i) {
            csv.row({std::to_string(i), format_double(scores[i])});
        }
        csv.close();
    }
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    nlohmann::json doc;
    doc["version"] = kVersionString;
    doc["qoi"] = {{"class_index", spec.class_index},
                  {"score_kind", spec.kind == ScoreKind::Logit ? "logit" : "softmax_probability"}};
    doc["rank"] = rank_used;
    doc["score_sum"] = sum;
    doc["sigma"] = cfg.sigma;
    doc["seed"] = cfg.seed;
    write_json_file(doc, join(out_dir, "attribution.json"));
}

} // namespace nnas
