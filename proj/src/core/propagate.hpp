#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/network.hpp"
#include "core/scalar_field.hpp"
#include "core/subspace.hpp"
#include "core/surface.hpp"

namespace nnas {

struct PropagationConfig {
    double alpha = 10.0;
    double beta = 10.0;
    double sigma = 20.0;
    double gap_threshold = 10.0;
    std::size_t r_max = 5;
    std::size_t degree = 2;
    std::size_t rs_samples = 50000;
    std::size_t mc_samples = 50000;
    std::uint64_t seed = 42;
    ScoreKind score_kind = ScoreKind::SoftmaxProbability;
    std::int64_t class_index = -1; // -1: class predicted at the noise-free center
    std::size_t histogram_bins = 50;
};

void validate(const PropagationConfig& cfg);

struct Histogram {
    Vec edges;                        // bins + 1 entries, ascending
    std::vector<std::uint64_t> counts;
};

// Uniform-width bins spanning [min, max]; the final bin includes its right
// edge. Identical values collapse to a single zero-width bin.
Histogram histogram(const std::vector<double>& values, std::size_t bins);

struct OutputStats {
    double mean = 0.0;
    double stddev = 0.0; // population (1/N) standard deviation
    Histogram hist;
    std::size_t sample_count = 0;
    std::uint64_t forward_calls = 0;
    std::uint64_t gradient_calls = 0;
};

OutputStats summarize(const std::vector<double>& values, std::size_t bins);

// One model visit per forward call; the backward sweep of a gradient rides
// on its forward, so gradients do not add to the unweighted count.
std::uint64_t unweighted_cost(const OutputStats& stats);
// Gradient evaluations weigh in at two forward-equivalents.
std::uint64_t weighted_cost(const OutputStats& stats);

struct Comparison {
    double rel_err_mean = 0.0;
    double rel_err_std = 0.0;
    double cost_ratio_weighted = 0.0;
    double cost_ratio_unweighted = 0.0;
};

Comparison compare(const OutputStats& rs, const OutputStats& mc);

struct PropagationReport {
    PropagationConfig config;
    NoiseModel noise;
    std::optional<QoISpec> qoi;
    std::size_t input_dim = 0;
    std::size_t gradient_samples = 0; // M
    bool sigma_zero = false;
    bool low_confidence_subspace = false;

    Spectrum spectrum;        // empty on the sigma = 0 short circuit
    ActiveSubspace subspace;  // rank 0 on the sigma = 0 short circuit
    PolySurface surface;
    std::vector<SurfaceSample> training_samples; // summary-plot data (x_r, f)

    OutputStats rs_stats;
    std::optional<OutputStats> mc_stats;
    std::optional<Comparison> comparison;
};

// The three-step workflow: estimate the subspace from M = ceil(alpha * beta
// * ln d) gradient samples, fit the polynomial surface on the projected
// samples, then push rs_samples fresh noise draws through the surface.
// Step three performs no model evaluations. sigma = 0 short-circuits to a
// point mass at the center value.
PropagationReport run_workflow(const ScalarField& field, const NoiseModel& nm,
                               const PropagationConfig& cfg);

// Network entry point; resolves class_index = -1 to the class predicted at
// the noise-free center.
PropagationReport run_workflow(const DenseNetwork& net, const NoiseModel& nm,
                               const PropagationConfig& cfg);

OutputStats direct_mc(const ScalarField& field, const NoiseModel& nm, std::size_t samples,
                      RandomSource& rng, std::size_t histogram_bins = 50);
OutputStats direct_mc(const DenseNetwork& net, const NoiseModel& nm, const QoISpec& spec,
                      std::size_t samples, RandomSource& rng, std::size_t histogram_bins = 50);

// Workflow plus baseline with an independent seed, comparison attached.
PropagationReport run_comparison(const DenseNetwork& net, const NoiseModel& nm,
                                 const PropagationConfig& cfg, std::uint64_t mc_seed);
PropagationReport run_comparison(const ScalarField& field, const NoiseModel& nm,
                                 const PropagationConfig& cfg, std::uint64_t mc_seed);

} // namespace nnas
