#include "core/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nnas {

void validate(const PropagationConfig& cfg) {
    require(cfg.alpha > 0.0 && cfg.beta > 0.0, ErrorKind::InvalidArgument,
            "config: alpha and beta must be positive");
    require(cfg.sigma >= 0.0 && std::isfinite(cfg.sigma), ErrorKind::InvalidArgument,
            "config: sigma must be finite and >= 0");
    require(cfg.gap_threshold > 1.0, ErrorKind::InvalidArgument,
            "config: gap threshold must exceed 1");
    require(cfg.r_max >= 1, ErrorKind::InvalidArgument, "config: r_max must be >= 1");
    require(cfg.degree >= 1, ErrorKind::InvalidArgument, "config: degree must be >= 1");
    require(cfg.rs_samples >= 1, ErrorKind::InvalidArgument,
            "config: rs_samples must be >= 1");
    require(cfg.mc_samples >= 2, ErrorKind::InvalidArgument,
            "config: mc_samples must be >= 2");
    require(cfg.histogram_bins >= 1, ErrorKind::InvalidArgument,
            "config: histogram_bins must be >= 1");
}

Histogram histogram(const std::vector<double>& values, std::size_t bins) {
    require(!values.empty(), ErrorKind::InvalidArgument, "histogram: no values");
    require(bins >= 1, ErrorKind::InvalidArgument, "histogram: need at least one bin");

    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double mn = *mn_it;
    const double mx = *mx_it;

    Histogram h;
    if (mn == mx) {
        h.edges = {mn, mx};
        h.counts = {values.size()};
        return h;
    }

    h.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        h.edges[k] = mn + (mx - mn) * static_cast<double>(k) / static_cast<double>(bins);
    }
    h.edges.front() = mn;
    h.edges.back() = mx;

    h.counts.assign(bins, 0);
    const double width = (mx - mn) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t idx = static_cast<std::size_t>((v - mn) / width);
        idx = std::min(idx, bins - 1); // v == mx lands in the final (closed) bin
        ++h.counts[idx];
    }
    return h;
}

OutputStats summarize(const std::vector<double>& values, std::size_t bins) {
    OutputStats stats;
    stats.sample_count = values.size();
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(values.size());
    stats.mean = mean;
    stats.stddev = std::sqrt(std::max(var, 0.0));
    stats.hist = histogram(values, bins);
    return stats;
}

std::uint64_t unweighted_cost(const OutputStats& stats) {
    return stats.forward_calls;
}

std::uint64_t weighted_cost(const OutputStats& stats) {
    return stats.forward_calls + 2 * stats.gradient_calls;
}

Comparison compare(const OutputStats& rs, const OutputStats& mc) {
    constexpr double eps_den = 1e-12;
    Comparison cmp;
    cmp.rel_err_mean = std::abs(rs.mean - mc.mean) / std::max(std::abs(mc.mean), eps_den);
    cmp.rel_err_std = std::abs(rs.stddev - mc.stddev) / std::max(std::abs(mc.stddev), eps_den);
    const double rs_w = static_cast<double>(weighted_cost(rs));
    const double rs_u = static_cast<double>(unweighted_cost(rs));
    cmp.cost_ratio_weighted =
        rs_w > 0.0 ? static_cast<double>(weighted_cost(mc)) / rs_w : 0.0;
    cmp.cost_ratio_unweighted =
        rs_u > 0.0 ? static_cast<double>(unweighted_cost(mc)) / rs_u : 0.0;
    return cmp;
}

namespace {

template <typename Fn>
auto stage(const char* label, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(label) + ": " + e.what());
    }
}

} // namespace

PropagationReport run_workflow(const ScalarField& field, const NoiseModel& nm,
                               const PropagationConfig& cfg) {
    validate(cfg);
    // The config's sigma is authoritative; the noise model supplies center
    // and clip bounds.
    NoiseModel noise = nm;
    noise.sigma = cfg.sigma;
    validate(noise);
    const std::size_t d = field.dim();
    require(noise.center.size() == d, ErrorKind::DimensionMismatch,
            "workflow: noise model dimension does not match the model");
    require(d >= 2, ErrorKind::InvalidArgument, "workflow: input dimension must be >= 2");

    PropagationReport report;
    report.config = cfg;
    report.noise = noise;
    report.input_dim = d;

    CountingField counted(field);

    if (cfg.sigma == 0.0) {
        // Point-mass input: every draw is exactly the center.
        report.sigma_zero = true;
        const double value = counted.value(noise.center);
        std::vector<double> values(cfg.rs_samples, value);
        report.rs_stats = summarize(values, cfg.histogram_bins);
        report.rs_stats.stddev = 0.0;
        report.rs_stats.forward_calls = counted.forward_calls();
        report.rs_stats.gradient_calls = counted.gradient_calls();
        return report;
    }

    const std::size_t m = sample_count(cfg.alpha, cfg.beta, d);
    report.gradient_samples = m;

    // Step I: sample gradients, estimate C, decompose.
    RandomSource rng_estimate = RandomSource(cfg.seed).derive(1);
    CEstimate estimate = stage("subspace estimation", [&] {
        return estimate_c(counted, noise, m, rng_estimate);
    });
    report.spectrum = stage("eigendecomposition", [&] {
        return decompose(estimate.c, m);
    });
    const std::size_t r_max = std::min<std::size_t>(cfg.r_max, d - 1);
    report.subspace = stage("rank selection", [&] {
        return select_rank(report.spectrum, cfg.gap_threshold, r_max);
    });
    report.low_confidence_subspace = report.subspace.no_clear_gap;

    // Step II: fit the response surface on the projected training samples.
    report.training_samples.reserve(m);
    for (const GradientSample& rec : estimate.samples.records) {
        report.training_samples.push_back(
            SurfaceSample{project(report.subspace, rec.xi), rec.f_value});
    }
    report.surface = stage("surface fit", [&] {
        return fit_surface(report.training_samples, cfg.degree);
    });

    // Step III: surface-only evaluation of fresh noise draws.
    const std::uint64_t forwards_before = counted.forward_calls();
    const std::uint64_t gradients_before = counted.gradient_calls();
    RandomSource rng_evaluate = RandomSource(cfg.seed).derive(2);
    std::vector<double> values;
    values.reserve(cfg.rs_samples);
    for (std::size_t i = 0; i < cfg.rs_samples; ++i) {
        Vec xi = gaussian(rng_evaluate, d);
        values.push_back(eval_surface(report.surface, project(report.subspace, xi)));
    }
    require(counted.forward_calls() == forwards_before &&
                counted.gradient_calls() == gradients_before,
            ErrorKind::Numeric, "workflow: surface evaluation touched the model");

    report.rs_stats = summarize(values, cfg.histogram_bins);
    report.rs_stats.forward_calls = counted.forward_calls();
    report.rs_stats.gradient_calls = counted.gradient_calls();
    return report;
}

namespace {

QoISpec resolve_qoi(const DenseNetwork& net, const NoiseModel& nm,
                    const PropagationConfig& cfg) {
    QoISpec spec;
    spec.kind = cfg.score_kind;
    if (cfg.class_index < 0) {
        spec.class_index = net.predict(nm.center);
    } else {
        require(static_cast<std::size_t>(cfg.class_index) < net.output_dim(),
                ErrorKind::InvalidArgument, "config: class_index out of range");
        spec.class_index = static_cast<std::size_t>(cfg.class_index);
    }
    return spec;
}

} // namespace

PropagationReport run_workflow(const DenseNetwork& net, const NoiseModel& nm,
                               const PropagationConfig& cfg) {
    const QoISpec spec = resolve_qoi(net, nm, cfg);
    QoiField field(net, spec);
    PropagationReport report = run_workflow(field, nm, cfg);
    report.qoi = spec;
    return report;
}

OutputStats direct_mc(const ScalarField& field, const NoiseModel& nm, std::size_t samples,
                      RandomSource& rng, std::size_t histogram_bins) {
    validate(nm);
    require(samples >= 2, ErrorKind::InvalidArgument, "direct_mc: need at least 2 samples");
    require(nm.center.size() == field.dim(), ErrorKind::DimensionMismatch,
            "direct_mc: noise model dimension does not match the model");

    CountingField counted(field);
    std::vector<double> values;
    values.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        values.push_back(counted.value(draw_noise(nm, rng).x));
    }
    OutputStats stats = summarize(values, histogram_bins);
    stats.forward_calls = counted.forward_calls();
    stats.gradient_calls = counted.gradient_calls();
    return stats;
}

OutputStats direct_mc(const DenseNetwork& net, const NoiseModel& nm, const QoISpec& spec,
                      std::size_t samples, RandomSource& rng, std::size_t histogram_bins) {
    QoiField field(net, spec);
    return direct_mc(field, nm, samples, rng, histogram_bins);
}

PropagationReport run_comparison(const ScalarField& field, const NoiseModel& nm,
                                 const PropagationConfig& cfg, std::uint64_t mc_seed) {
    PropagationReport report = run_workflow(field, nm, cfg);
    RandomSource rng(mc_seed);
    report.mc_stats = direct_mc(field, report.noise, cfg.mc_samples, rng, cfg.histogram_bins);
    report.comparison = compare(report.rs_stats, *report.mc_stats);
    return report;
}

PropagationReport run_comparison(const DenseNetwork& net, const NoiseModel& nm,
                                 const PropagationConfig& cfg, std::uint64_t mc_seed) {
    const QoISpec spec = resolve_qoi(net, nm, cfg);
    QoiField field(net, spec);
    PropagationReport report = run_comparison(static_cast<const ScalarField&>(field), nm, cfg,
                                              mc_seed);
    report.qoi = spec;
    return report;
}

} // namespace nnas
