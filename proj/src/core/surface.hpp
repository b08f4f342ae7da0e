#pragma once

#include <cstddef>
#include <vector>

#include "core/linalg.hpp"

namespace nnas {

// Low-degree polynomial response surface over the active variables.
// Coefficients are ordered by total degree, then lexicographically by
// exponent vector with the first active variable ranked highest; e.g. for
// rank 2, degree 2: 1, u, v, u^2, uv, v^2.
struct PolySurface {
    std::size_t rank = 0;
    std::size_t degree = 0;
    Vec coefficients;
    double r_squared = 0.0;
    double residual_rms = 0.0;
};

struct SurfaceSample {
    Vec x_r;
    double f = 0.0;
};

std::size_t poly_term_count(std::size_t rank, std::size_t degree);

// Exponent vectors in coefficient order, one entry per monomial.
std::vector<std::vector<unsigned>> monomial_exponents(std::size_t rank, std::size_t degree);

Vec poly_features(const Vec& x_r, std::size_t degree);

// Least-squares fit of the monomial basis. Needs at least poly_term_count
// samples; ill-conditioned designs surface as errors rather than shrinkage.
PolySurface fit_surface(const std::vector<SurfaceSample>& samples, std::size_t degree);

double eval_surface(const PolySurface& surface, const Vec& x_r);

// Held-out coefficient of determination, 1 - SS_res / SS_tot. Negative for
// predictors worse than the held-out mean. A zero-variance target counts as
// a perfect fit only when the residuals are also negligible.
double r_squared(const PolySurface& surface, const std::vector<SurfaceSample>& heldout);

} // namespace nnas
