#include "core/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nnas {

void validate(const NoiseModel& nm) {
    require(!nm.center.empty(), ErrorKind::InvalidArgument, "noise model: empty center");
    require(nm.sigma >= 0.0, ErrorKind::InvalidArgument, "noise model: sigma must be >= 0");
    require(nm.lo < nm.hi, ErrorKind::InvalidArgument, "noise model: empty clip range");
    require(std::isfinite(nm.sigma), ErrorKind::InvalidArgument,
            "noise model: sigma must be finite");
    for (double c : nm.center) {
        require(std::isfinite(c), ErrorKind::InvalidArgument,
                "noise model: center has non-finite entries");
        require(c >= nm.lo && c <= nm.hi, ErrorKind::InvalidArgument,
                "noise model: center lies outside the clip bounds");
    }
}

NoiseModel unbounded_noise(Vec center, double sigma) {
    NoiseModel nm;
    nm.center = std::move(center);
    nm.sigma = sigma;
    nm.lo = -std::numeric_limits<double>::infinity();
    nm.hi = std::numeric_limits<double>::infinity();
    return nm;
}

NoiseDraw draw_noise(const NoiseModel& nm, RandomSource& rng) {
    const std::size_t d = nm.center.size();
    NoiseDraw draw;
    draw.xi = gaussian(rng, d);
    draw.x.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        draw.x[i] = std::clamp(nm.center[i] + nm.sigma * draw.xi[i], nm.lo, nm.hi);
    }
    return draw;
}

std::size_t sample_count(double alpha, double beta, std::size_t d) {
    require(alpha > 0.0 && beta > 0.0, ErrorKind::InvalidArgument,
            "sample_count: alpha and beta must be positive");
    require(d >= 2, ErrorKind::InvalidArgument, "sample_count: dimension must be at least 2");
    const double m = alpha * beta * std::log(static_cast<double>(d));
    return static_cast<std::size_t>(std::ceil(m));
}

CEstimate estimate_c(const ScalarField& f, const NoiseModel& nm, std::size_t samples,
                     RandomSource& rng) {
    validate(nm);
    require(samples >= 1, ErrorKind::InvalidArgument, "estimate_c: need at least one sample");
    const std::size_t d = f.dim();
    require(nm.center.size() == d, ErrorKind::DimensionMismatch,
            "estimate_c: noise model dimension does not match the field");

    // Kahan-compensated accumulation of the upper triangle.
    const std::size_t triangle = d * (d + 1) / 2;
    Vec sum(triangle, 0.0);
    Vec comp(triangle, 0.0);

    CEstimate est;
    est.samples.noise = nm;
    est.samples.records.reserve(samples);

    for (std::size_t m = 0; m < samples; ++m) {
        NoiseDraw draw = draw_noise(nm, rng);
        auto [value, grad] = f.value_and_gradient(draw.x);
        require(std::isfinite(value) && all_finite(grad), ErrorKind::Numeric,
                "estimate_c: non-finite gradient at sample " + std::to_string(m));

        std::size_t t = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const double gi = grad[i];
            for (std::size_t j = i; j < d; ++j, ++t) {
                const double term = gi * grad[j] - comp[t];
                const double next = sum[t] + term;
                comp[t] = (next - sum[t]) - term;
                sum[t] = next;
            }
        }
        est.samples.records.push_back(
            GradientSample{std::move(draw.xi), std::move(draw.x), value, std::move(grad)});
    }

    est.c = Mat(d, d);
    const double inv_m = 1.0 / static_cast<double>(samples);
    std::size_t t = 0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j, ++t) {
            const double v = sum[t] * inv_m;
            est.c(i, j) = v;
            est.c(j, i) = v;
        }
    }
    return est;
}

Spectrum decompose(const Mat& c, std::size_t samples) {
    EigenDecomposition eig = sym_eig(c);
    Spectrum sp;
    sp.eigenvectors = std::move(eig.eigenvectors);
    sp.eigenvalues = std::move(eig.eigenvalues);
    sp.sample_count = samples;

    const double lead = sp.eigenvalues.empty() ? 0.0 : std::max(sp.eigenvalues.front(), 0.0);
    for (double& lambda : sp.eigenvalues) {
        if (lambda < 0.0) {
            require(lambda >= -1e-9 * lead, ErrorKind::Numeric,
                    "decompose: eigenvalue below the PSD tolerance (matrix is not an "
                    "outer-product average)");
            lambda = 0.0;
        }
    }
    return sp;
}

ActiveSubspace select_rank(const Spectrum& spectrum, double gap_threshold, std::size_t r_max) {
    const std::size_t d = spectrum.eigenvalues.size();
    require(d >= 2, ErrorKind::InvalidArgument, "select_rank: spectrum dimension must be >= 2");
    require(gap_threshold > 1.0, ErrorKind::InvalidArgument,
            "select_rank: gap threshold must exceed 1");
    require(r_max >= 1 && r_max < d, ErrorKind::InvalidArgument,
            "select_rank: r_max must lie in [1, d)");

    double trace = 0.0;
    for (double lambda : spectrum.eigenvalues) {
        trace += lambda;
    }
    bool degenerate = true;
    for (double lambda : spectrum.eigenvalues) {
        if (lambda > 1e-14 * trace) {
            degenerate = false;
            break;
        }
    }
    require(!degenerate, ErrorKind::Numeric,
            "select_rank: degenerate spectrum (quantity of interest is locally constant)");

    ActiveSubspace as;
    as.rank = 1;
    as.no_clear_gap = true;
    as.gap_ratio = 0.0;
    for (std::size_t r = 1; r <= r_max; ++r) {
        const double head = spectrum.eigenvalues[r - 1];
        const double tail = spectrum.eigenvalues[r];
        const double ratio = (tail == 0.0) ? std::numeric_limits<double>::infinity()
                                           : head / tail;
        if (ratio >= gap_threshold) {
            as.rank = r;
            as.gap_ratio = ratio;
            as.no_clear_gap = false;
            break;
        }
        if (r == 1) {
            as.gap_ratio = ratio; // reported even when no gap is found
        }
    }

    as.projection = Mat(d, as.rank);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < as.rank; ++j) {
            as.projection(i, j) = spectrum.eigenvectors(i, j);
        }
    }
    return as;
}

Vec project(const ActiveSubspace& as, const Vec& xi) {
    require(as.rank >= 1, ErrorKind::InvalidArgument, "project: empty subspace");
    return matvec_transposed(as.projection, xi);
}

AdversarialResult adversarial_perturb(const ScalarField& f, const NoiseModel& nm,
                                      const ActiveSubspace& as, double epsilon) {
    validate(nm);
    require(epsilon >= 0.0, ErrorKind::InvalidArgument, "adversarial: epsilon must be >= 0");
    require(as.rank >= 1, ErrorKind::InvalidArgument, "adversarial: empty subspace");
    const std::size_t d = nm.center.size();
    require(as.projection.rows() == d && f.dim() == d, ErrorKind::DimensionMismatch,
            "adversarial: dimension mismatch between field, noise model and subspace");

    const Vec w1 = as.projection.column(0);
    auto perturbed = [&](double sign) {
        Vec x(d);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = std::clamp(nm.center[i] + sign * epsilon * w1[i], nm.lo, nm.hi);
        }
        return x;
    };

    AdversarialResult result;
    result.epsilon = epsilon;
    result.score_before = f.value(nm.center);
    if (epsilon == 0.0) {
        result.x_adv = nm.center;
        result.score_after = result.score_before;
        result.direction_sign = +1;
        return result;
    }

    Vec plus = perturbed(+1.0);
    Vec minus = perturbed(-1.0);
    const double score_plus = f.value(plus);
    const double score_minus = f.value(minus);
    if (score_plus <= score_minus) {
        result.x_adv = std::move(plus);
        result.score_after = score_plus;
        result.direction_sign = +1;
    } else {
        result.x_adv = std::move(minus);
        result.score_after = score_minus;
        result.direction_sign = -1;
    }
    return result;
}

Vec attribution(const Spectrum& spectrum, std::size_t rank) {
    const std::size_t d = spectrum.eigenvalues.size();
    require(rank >= 1 && rank <= d, ErrorKind::InvalidArgument,
            "attribution: rank must lie in [1, d]");
    Vec scores(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rank; ++i) {
            const double w = spectrum.eigenvectors(j, i);
            s += spectrum.eigenvalues[i] * w * w;
        }
        scores[j] = s;
    }
    return scores;
}

} // namespace nnas
