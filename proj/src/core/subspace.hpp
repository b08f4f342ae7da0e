#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/linalg.hpp"
#include "core/random.hpp"
#include "core/scalar_field.hpp"

namespace nnas {

// Truncated Gaussian input model: x = clip(x0 + sigma * xi, lo, hi) with
// xi standard normal. Bounds may be infinite to disable clipping.
struct NoiseModel {
    Vec center;        // x0
    double sigma = 0.0;
    double lo = 0.0;
    double hi = 255.0;
};

void validate(const NoiseModel& nm);

NoiseModel unbounded_noise(Vec center, double sigma);

struct NoiseDraw {
    Vec xi; // raw standard-normal draw
    Vec x;  // clipped input, x = clip(x0 + sigma * xi, lo, hi)
};

NoiseDraw draw_noise(const NoiseModel& nm, RandomSource& rng);

struct GradientSample {
    Vec xi;
    Vec x;
    double f_value = 0.0;
    Vec gradient;
};

struct GradientSampleSet {
    std::vector<GradientSample> records;
    NoiseModel noise;
    std::optional<QoISpec> qoi; // set when the field wraps a network QoI
};

struct CEstimate {
    Mat c; // (1/M) sum of gradient outer products, symmetric PSD
    GradientSampleSet samples;
};

// Number of gradient samples for the subspace estimate:
// M = ceil(alpha * beta * ln(d)).
std::size_t sample_count(double alpha, double beta, std::size_t d);

// Monte Carlo estimate of the gradient outer-product matrix. Gradients are
// taken at the clipped point; the clip itself is not differentiated through.
// Accumulation is Kahan-compensated per entry so sample order cannot move
// the result beyond ~1e-12 relative.
CEstimate estimate_c(const ScalarField& f, const NoiseModel& nm, std::size_t samples,
                     RandomSource& rng);

struct Spectrum {
    Vec eigenvalues;  // descending, clamped to >= 0
    Mat eigenvectors; // column i pairs with eigenvalues[i]
    std::size_t sample_count = 0;
};

// Eigendecomposition of the C estimate. Small negative eigenvalues (above
// -1e-9 * lambda_1) clamp to zero; anything lower is a numerical failure.
Spectrum decompose(const Mat& c, std::size_t sample_count = 0);

struct ActiveSubspace {
    std::size_t rank = 0;
    Mat projection;                 // d x rank, the first rank eigenvector columns
    double gap_ratio = 0.0;         // lambda_r / lambda_{r+1}; +inf when the tail is zero
    bool no_clear_gap = false;      // fell back to rank 1 without a spectral gap
};

// Picks the smallest r in [1, r_max] with eigenvalue ratio
// lambda_r / lambda_{r+1} >= gap_threshold; falls back to r = 1 (flagged)
// when no gap exists. A spectrum with every eigenvalue below 1e-14 * trace
// is rejected as degenerate.
ActiveSubspace select_rank(const Spectrum& spectrum, double gap_threshold, std::size_t r_max);

// Active variable x_r = S^T xi.
Vec project(const ActiveSubspace& as, const Vec& xi);

struct AdversarialResult {
    Vec x_adv;
    double score_before = 0.0;
    double score_after = 0.0;
    int direction_sign = 0; // sign applied to the leading active direction
    double epsilon = 0.0;
};

// Perturbation of L2 budget epsilon along the leading active direction,
// sign chosen to decrease the score, clipped to the noise model bounds.
AdversarialResult adversarial_perturb(const ScalarField& f, const NoiseModel& nm,
                                      const ActiveSubspace& as, double epsilon);

// Activity scores: score_j = sum_{i < r} lambda_i * w_ij^2. Non-negative,
// summing to the first r eigenvalues.
Vec attribution(const Spectrum& spectrum, std::size_t rank);

} // namespace nnas
