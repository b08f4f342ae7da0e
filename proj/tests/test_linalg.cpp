#include <doctest.h>

#include <cmath>

#include "core/linalg.hpp"
#include "core/random.hpp"
#include "support/oracles.hpp"

using nnas::Mat;
using nnas::Vec;

namespace {

Mat reconstruct(const nnas::EigenDecomposition& eig) {
    const std::size_t d = eig.eigenvalues.size();
    Mat lambda(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        lambda(i, i) = eig.eigenvalues[i];
    }
    return nnas::matmul(nnas::matmul(eig.eigenvectors, lambda),
                        nnas::transpose(eig.eigenvectors));
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("sym_eig diagonal matrix sorts eigenvalues and permutes axes") {
    Mat a(3, 3);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    a(2, 2) = 2.0;
    const auto eig = nnas::sym_eig(a);
    CHECK(eig.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-12));
    // eigenvector columns are the axes for 3, 2, 1: e0, e2, e1
    CHECK(eig.eigenvectors(0, 0) == doctest::Approx(1.0));
    CHECK(eig.eigenvectors(2, 1) == doctest::Approx(1.0));
    CHECK(eig.eigenvectors(1, 2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig 2x2 with known closed form") {
    Mat a(2, 2);
    a(0, 0) = 2.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 2.0;
    const auto eig = nnas::sym_eig(a);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(eig.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eig.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eig.eigenvectors(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(eig.eigenvectors(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(eig.eigenvectors(0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(eig.eigenvectors(1, 1) == doctest::Approx(-inv_sqrt2).epsilon(1e-12));
}

TEST_CASE("sym_eig matches the characteristic-polynomial oracle on random 5x5") {
    nnas::RandomSource rng(1234);
    for (int rep = 0; rep < 3; ++rep) {
        const Mat a = oracle::random_symmetric(5, rng, 2.0);
        const auto eig = nnas::sym_eig(a);
        const auto roots = oracle::char_poly_eigenvalues(a);
        REQUIRE(roots.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(std::abs(eig.eigenvalues[i] - roots[i]) <= 1e-8);
        }
    }
}

TEST_CASE("sym_eig orthonormality, trace and reconstruction over random sizes") {
    nnas::RandomSource rng(99);
    for (const std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{7},
                                std::size_t{16}, std::size_t{33}, std::size_t{50}}) {
        const Mat a = oracle::random_symmetric(n, rng);
        const auto eig = nnas::sym_eig(a);

        const Mat gram = nnas::matmul(nnas::transpose(eig.eigenvectors), eig.eigenvectors);
        CHECK(max_abs_diff(gram, Mat::identity(n)) <= 1e-10);

        double trace = 0.0;
        double lambda_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            trace += a(i, i);
            lambda_sum += eig.eigenvalues[i];
        }
        CHECK(std::abs(trace - lambda_sum) <= 1e-9 * std::max(1.0, nnas::frobenius_norm(a)));

        CHECK(nnas::frobenius_norm([&] {
                  Mat diff = reconstruct(eig);
                  for (std::size_t i = 0; i < n; ++i) {
                      for (std::size_t j = 0; j < n; ++j) {
                          diff(i, j) -= a(i, j);
                      }
                  }
                  return diff;
              }()) <= 1e-8 * std::max(1.0, nnas::frobenius_norm(a)));

        for (std::size_t i = 0; i + 1 < n; ++i) {
            CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i + 1]);
        }
    }
}

TEST_CASE("sym_eig keeps PSD spectra nonnegative up to tolerance") {
    nnas::RandomSource rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        const Mat a = oracle::random_psd(12, rng);
        const auto eig = nnas::sym_eig(a);
        CHECK(eig.eigenvalues.back() >= -1e-9 * eig.eigenvalues.front());
    }
}

TEST_CASE("sym_eig input validation") {
    CHECK_THROWS_AS(nnas::sym_eig(Mat(2, 3)), nnas::Error);

    Mat asym(2, 2);
    asym(0, 1) = 1.0;
    asym(1, 0) = 0.5;
    CHECK_THROWS_AS(nnas::sym_eig(asym), nnas::Error);

    Mat bad(2, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(nnas::sym_eig(bad), nnas::Error);
}

TEST_CASE("lstsq identity design returns the right-hand side") {
    const Vec c = nnas::lstsq(Mat::identity(3), Vec{1.0, 2.0, 3.0});
    CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(c[2] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("lstsq exactly determined 2x2") {
    Mat a(2, 2);
    a(0, 0) = 2.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 3.0;
    // solution of [2 1; 1 3] c = (5, 10): c = (1, 3)
    const Vec c = nnas::lstsq(a, Vec{5.0, 10.0});
    CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("lstsq recovers known coefficients from a noiseless overdetermined system") {
    nnas::RandomSource rng(4242);
    Mat phi(10, 3);
    for (double& v : phi.data()) {
        v = rng.gaussian();
    }
    const Vec truth{0.5, -2.0, 1.25};
    const Vec y = nnas::matvec(phi, truth);
    const Vec c = nnas::lstsq(phi, y);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(c[i] - truth[i]) <= 1e-10);
    }
}

TEST_CASE("lstsq residual is orthogonal to the column space") {
    nnas::RandomSource rng(31);
    Mat phi(20, 4);
    for (double& v : phi.data()) {
        v = rng.gaussian();
    }
    Vec y(20);
    for (double& v : y) {
        v = rng.gaussian();
    }
    const Vec c = nnas::lstsq(phi, y);
    const Vec fitted = nnas::matvec(phi, c);
    Vec residual(20);
    for (std::size_t i = 0; i < 20; ++i) {
        residual[i] = y[i] - fitted[i];
    }
    const Vec against_columns = nnas::matvec_transposed(phi, residual);
    for (double v : against_columns) {
        CHECK(std::abs(v) <= 1e-8 * nnas::norm2(y));
    }

    // Perturbing y inside the orthogonal complement leaves the solution
    // unchanged.
    Vec y2 = y;
    for (std::size_t i = 0; i < 20; ++i) {
        y2[i] += 0.5 * residual[i];
    }
    const Vec c2 = nnas::lstsq(phi, y2);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(c2[i] - c[i]) <= 1e-9);
    }
}

TEST_CASE("lstsq rejects rank-deficient designs") {
    Mat phi(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        phi(i, 0) = static_cast<double>(i + 1);
        phi(i, 1) = 2.0 * static_cast<double>(i + 1); // duplicate direction
    }
    CHECK_THROWS_WITH_AS(nnas::lstsq(phi, Vec(5, 1.0)),
                         doctest::Contains("ill-conditioned"), nnas::Error);
}

TEST_CASE("lstsq rejects underdetermined systems") {
    CHECK_THROWS_AS(nnas::lstsq(Mat(2, 3), Vec(2, 0.0)), nnas::Error);
}
