#include "core/surface.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace nnas {

std::size_t poly_term_count(std::size_t rank, std::size_t degree) {
    // C(rank + degree, degree)
    std::size_t n = 1;
    for (std::size_t i = 1; i <= degree; ++i) {
        n = n * (rank + i) / i;
    }
    return n;
}

namespace {

void enumerate_exponents(std::size_t rank, unsigned remaining, std::size_t pos,
                         std::vector<unsigned>& current,
                         std::vector<std::vector<unsigned>>& out) {
    if (pos + 1 == rank) {
        current[pos] = remaining;
        out.push_back(current);
        return;
    }
    for (unsigned e = remaining; e != static_cast<unsigned>(-1); --e) {
        current[pos] = e;
        enumerate_exponents(rank, remaining - e, pos + 1, current, out);
    }
}

} // namespace

std::vector<std::vector<unsigned>> monomial_exponents(std::size_t rank, std::size_t degree) {
    require(rank >= 1, ErrorKind::InvalidArgument, "monomials: rank must be >= 1");
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> current(rank, 0);
    for (unsigned total = 0; total <= degree; ++total) {
        enumerate_exponents(rank, total, 0, current, out);
    }
    return out;
}

Vec poly_features(const Vec& x_r, std::size_t degree) {
    const std::size_t rank = x_r.size();
    require(rank >= 1 && degree >= 1, ErrorKind::InvalidArgument,
            "poly_features: rank and degree must be >= 1");
    const auto exponents = monomial_exponents(rank, degree);
    Vec features(exponents.size(), 1.0);
    for (std::size_t t = 0; t < exponents.size(); ++t) {
        double v = 1.0;
        for (std::size_t j = 0; j < rank; ++j) {
            for (unsigned e = 0; e < exponents[t][j]; ++e) {
                v *= x_r[j];
            }
        }
        features[t] = v;
    }
    return features;
}

PolySurface fit_surface(const std::vector<SurfaceSample>& samples, std::size_t degree) {
    require(!samples.empty(), ErrorKind::InvalidArgument, "fit_surface: no samples");
    const std::size_t rank = samples.front().x_r.size();
    const std::size_t k = poly_term_count(rank, degree);
    const std::size_t n = samples.size();
    require(n >= k, ErrorKind::InvalidArgument,
            "fit_surface: need at least " + std::to_string(k) + " samples for rank " +
                std::to_string(rank) + " degree " + std::to_string(degree) + ", got " +
                std::to_string(n));

    Mat phi(n, k);
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(samples[i].x_r.size() == rank, ErrorKind::DimensionMismatch,
                "fit_surface: inconsistent active-variable lengths");
        const Vec row = poly_features(samples[i].x_r, degree);
        for (std::size_t j = 0; j < k; ++j) {
            phi(i, j) = row[j];
        }
        y[i] = samples[i].f;
    }

    PolySurface surface;
    surface.rank = rank;
    surface.degree = degree;
    try {
        surface.coefficients = lstsq(phi, y);
    } catch (const Error& e) {
        throw Error(e.kind(), "fit_surface (rank " + std::to_string(rank) + ", degree " +
                                  std::to_string(degree) + "): " + e.what());
    }

    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean /= static_cast<double>(n);

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            fit += surface.coefficients[j] * phi(i, j);
        }
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    surface.residual_rms = std::sqrt(ss_res / static_cast<double>(n));
    if (ss_tot <= 1e-24) {
        // Constant target: a perfect fit by convention, provided the
        // residuals vanished too.
        require(ss_res <= 1e-24, ErrorKind::Numeric,
                "fit_surface: zero-variance target with non-negligible residual");
        surface.r_squared = 1.0;
    } else {
        surface.r_squared = 1.0 - ss_res / ss_tot;
    }
    return surface;
}

double eval_surface(const PolySurface& surface, const Vec& x_r) {
    require(x_r.size() == surface.rank, ErrorKind::DimensionMismatch,
            "eval_surface: active-variable length does not match surface rank");
    const Vec features = poly_features(x_r, surface.degree);
    require(features.size() == surface.coefficients.size(), ErrorKind::DimensionMismatch,
            "eval_surface: coefficient count does not match basis size");
    double v = 0.0;
    for (std::size_t j = 0; j < features.size(); ++j) {
        v += surface.coefficients[j] * features[j];
    }
    return v;
}

double r_squared(const PolySurface& surface, const std::vector<SurfaceSample>& heldout) {
    require(!heldout.empty(), ErrorKind::InvalidArgument, "r_squared: empty held-out set");
    double mean = 0.0;
    for (const SurfaceSample& s : heldout) {
        mean += s.f;
    }
    mean /= static_cast<double>(heldout.size());

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (const SurfaceSample& s : heldout) {
        const double fit = eval_surface(surface, s.x_r);
        ss_res += (s.f - fit) * (s.f - fit);
        ss_tot += (s.f - mean) * (s.f - mean);
    }
    if (ss_tot <= 1e-24) {
        require(ss_res <= 1e-12, ErrorKind::Numeric,
                "r_squared: zero-variance held-out target with non-negligible residual");
        return 1.0;
    }
    return 1.0 - ss_res / ss_tot;
}

} // namespace nnas
