#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/subspace.hpp"
#include "support/oracles.hpp"

using nnas::ActiveSubspace;
using nnas::Mat;
using nnas::NoiseModel;
using nnas::Spectrum;
using nnas::Vec;

namespace {

// Replays a fixed gradient list regardless of the query point; lets the
// accumulation order be permuted explicitly.
class PlaybackField final : public nnas::ScalarField {
public:
    explicit PlaybackField(std::vector<Vec> gradients)
        : gradients_(std::move(gradients)) {}
    std::size_t dim() const override { return gradients_.front().size(); }
    double value(const Vec&) const override { return 0.0; }
    Vec gradient(const Vec&) const override { return gradients_[next_++ % gradients_.size()]; }

private:
    std::vector<Vec> gradients_;
    mutable std::size_t next_ = 0;
};

Spectrum spectrum_of(Vec eigenvalues) {
    Spectrum sp;
    const std::size_t d = eigenvalues.size();
    sp.eigenvalues = std::move(eigenvalues);
    sp.eigenvectors = Mat::identity(d);
    return sp;
}

} // namespace

TEST_CASE("sample_count follows the ceil of the log budget") {
    CHECK(nnas::sample_count(10.0, 10.0, 784) == 667);
    // 25 * ln(2.5e7) = 425.86...: ceil gives 426 (floor would give 425)
    CHECK(nnas::sample_count(5.0, 5.0, 25000000) == 426);
    CHECK(nnas::sample_count(1.0, 1.0, 3) == 2);
    CHECK_THROWS_AS(nnas::sample_count(10.0, 10.0, 1), nnas::Error);
    CHECK_THROWS_AS(nnas::sample_count(-1.0, 10.0, 50), nnas::Error);
}

TEST_CASE("draw_noise clips and degenerates correctly") {
    nnas::RandomSource rng(100);

    SUBCASE("sigma zero reproduces the center exactly") {
        NoiseModel nm{Vec{10.0, 200.0, 55.5}, 0.0, 0.0, 255.0};
        const auto draw = nnas::draw_noise(nm, rng);
        CHECK(draw.x == nm.center);
    }
    SUBCASE("saturated center stays inside the bounds") {
        NoiseModel nm{Vec(8, 255.0), 50.0, 0.0, 255.0};
        for (int rep = 0; rep < 100; ++rep) {
            const auto draw = nnas::draw_noise(nm, rng);
            for (double v : draw.x) {
                CHECK(v <= 255.0);
                CHECK(v >= 0.0);
            }
        }
    }
    SUBCASE("empirical mean sits on the center for interior noise") {
        const double sigma = 2.0;
        NoiseModel nm{Vec{100.0, 128.0, 180.0}, sigma, 0.0, 255.0};
        Vec mean(3, 0.0);
        const int n = 100000;
        for (int rep = 0; rep < n; ++rep) {
            const auto draw = nnas::draw_noise(nm, rng);
            for (std::size_t i = 0; i < 3; ++i) {
                mean[i] += draw.x[i];
            }
        }
        for (std::size_t i = 0; i < 3; ++i) {
            mean[i] /= n;
            CHECK(std::abs(mean[i] - nm.center[i]) <= 0.02 * sigma);
        }
    }
}

TEST_CASE("noise model validation") {
    CHECK_THROWS_AS(nnas::validate(NoiseModel{Vec{1.0}, -1.0, 0.0, 255.0}), nnas::Error);
    CHECK_THROWS_AS(nnas::validate(NoiseModel{Vec{1.0}, 1.0, 10.0, 5.0}), nnas::Error);
    CHECK_THROWS_AS(nnas::validate(NoiseModel{Vec{300.0}, 1.0, 0.0, 255.0}), nnas::Error);
}

TEST_CASE("estimate_c on a constant-gradient field is an exact outer product") {
    nnas::RandomSource rng(2000);
    Vec a(10);
    for (double& v : a) {
        v = rng.gaussian();
    }
    a[0] = std::abs(a[0]) + 0.5; // pin the sign convention
    const oracle::LinearField field(a);
    const NoiseModel nm = nnas::unbounded_noise(Vec(10, 0.0), 3.0);

    for (const std::size_t m : {std::size_t{1}, std::size_t{7}}) {
        nnas::RandomSource draw_rng(55);
        const nnas::CEstimate est = nnas::estimate_c(field, nm, m, draw_rng);
        REQUIRE(est.samples.records.size() == m);
        double scale = 0.0;
        for (std::size_t i = 0; i < 10; ++i) {
            for (std::size_t j = 0; j < 10; ++j) {
                scale = std::max(scale, std::abs(a[i] * a[j]));
                CHECK(std::abs(est.c(i, j) - a[i] * a[j]) <= 1e-10 * scale);
            }
        }

        const Spectrum sp = nnas::decompose(est.c, m);
        CHECK(sp.eigenvalues[1] <= 1e-12 * sp.eigenvalues[0]);
        const double na = nnas::norm2(a);
        CHECK(sp.eigenvalues[0] == doctest::Approx(na * na).epsilon(1e-10));
        double align = 0.0;
        for (std::size_t i = 0; i < 10; ++i) {
            align += sp.eigenvectors(i, 0) * (a[i] / na);
        }
        CHECK(std::abs(align) >= 1.0 - 1e-10);
    }
}

TEST_CASE("estimate_c converges to the analytic quadratic spectrum") {
    const Vec a{4.0, 2.0, 1.0, 0.5, 0.25, 0.125};
    const oracle::QuadraticDiagField field(a);
    const NoiseModel nm = nnas::unbounded_noise(Vec(6, 0.0), 1.0);
    nnas::RandomSource rng(314159);
    const nnas::CEstimate est = nnas::estimate_c(field, nm, 10000, rng);
    const Spectrum sp = nnas::decompose(est.c, 10000);

    // E[C] = diag(a_i^4); the top three are separated by factors of 16.
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = std::pow(a[i], 4.0);
        CHECK(std::abs(sp.eigenvalues[i] - expected) <= 0.10 * expected);
        CHECK(std::abs(sp.eigenvectors(i, i)) >= 0.99);
    }
}

TEST_CASE("estimate_c records samples usable for fitting and flags bad fields") {
    struct NanField final : nnas::ScalarField {
        std::size_t dim() const override { return 3; }
        double value(const Vec&) const override { return 0.0; }
        Vec gradient(const Vec&) const override { return Vec{1.0, std::nan(""), 0.0}; }
    };
    nnas::RandomSource rng(6);
    const NoiseModel nm = nnas::unbounded_noise(Vec(3, 0.0), 1.0);
    CHECK_THROWS_WITH_AS(nnas::estimate_c(NanField{}, nm, 2, rng),
                         doctest::Contains("sample 0"), nnas::Error);
}

TEST_CASE("compensated accumulation is permutation-robust") {
    nnas::RandomSource rng(808);
    const std::size_t d = 5;
    const std::size_t m = 400;
    std::vector<Vec> grads(m, Vec(d));
    for (auto& g : grads) {
        for (double& v : g) {
            // wide magnitude spread stresses the summation
            v = rng.gaussian() * std::pow(10.0, static_cast<int>(rng.below(7)) - 3);
        }
    }
    std::vector<Vec> shuffled = grads;
    for (std::size_t i = shuffled.size(); i-- > 1;) {
        std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    }

    const NoiseModel nm = nnas::unbounded_noise(Vec(d, 0.0), 1.0);
    nnas::RandomSource r1(1);
    nnas::RandomSource r2(1);
    const Mat c1 = nnas::estimate_c(PlaybackField(grads), nm, m, r1).c;
    const Mat c2 = nnas::estimate_c(PlaybackField(shuffled), nm, m, r2).c;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double denom = std::max(std::abs(c1(i, j)), 1e-30);
            CHECK(std::abs(c1(i, j) - c2(i, j)) / denom <= 1e-12);
        }
    }
}

TEST_CASE("decompose handles rank-1 and diagonal inputs") {
    SUBCASE("outer product with squared norm 5") {
        const Vec a{2.0, 1.0};
        Mat c(2, 2);
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                c(i, j) = a[i] * a[j];
            }
        }
        const Spectrum sp = nnas::decompose(c);
        CHECK(sp.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(sp.eigenvalues[1] == doctest::Approx(0.0));
        const double na = std::sqrt(5.0);
        CHECK(sp.eigenvectors(0, 0) == doctest::Approx(a[0] / na).epsilon(1e-12));
        CHECK(sp.eigenvectors(1, 0) == doctest::Approx(a[1] / na).epsilon(1e-12));
    }
    SUBCASE("diagonal input sorts its entries") {
        Mat c(4, 4);
        c(0, 0) = 0.5;
        c(1, 1) = 4.0;
        c(2, 2) = 2.0;
        c(3, 3) = 1.0;
        const Spectrum sp = nnas::decompose(c);
        CHECK(sp.eigenvalues == Vec{4.0, 2.0, 1.0, 0.5});
    }
    SUBCASE("a genuinely negative spectrum is rejected") {
        Mat c(2, 2);
        c(0, 0) = 1.0;
        c(1, 1) = -0.5;
        CHECK_THROWS_AS(nnas::decompose(c), nnas::Error);
    }
}

TEST_CASE("select_rank follows the first spectral gap") {
    SUBCASE("dominant first eigenvalue") {
        const auto as = nnas::select_rank(spectrum_of({100.0, 1.0, 0.5, 0.1}), 10.0, 3);
        CHECK(as.rank == 1);
        CHECK_FALSE(as.no_clear_gap);
        CHECK(as.gap_ratio == doctest::Approx(100.0));
    }
    SUBCASE("two-dimensional subspace") {
        const auto as = nnas::select_rank(spectrum_of({100.0, 90.0, 1.0, 0.1}), 10.0, 3);
        CHECK(as.rank == 2);
        CHECK(as.projection.cols() == 2);
    }
    SUBCASE("no gap falls back to rank one with a flag") {
        const auto as = nnas::select_rank(spectrum_of({4.0, 3.0, 2.0, 1.0}), 10.0, 3);
        CHECK(as.rank == 1);
        CHECK(as.no_clear_gap);
    }
    SUBCASE("zero tail counts as an infinite ratio") {
        const auto as = nnas::select_rank(spectrum_of({5.0, 0.0, 0.0}), 10.0, 2);
        CHECK(as.rank == 1);
        CHECK(std::isinf(as.gap_ratio));
    }
    SUBCASE("scale invariance") {
        const Vec base{9.0, 7.0, 3.0, 0.2};
        const auto a = nnas::select_rank(spectrum_of(base), 5.0, 3);
        Vec scaled = base;
        for (double& v : scaled) {
            v *= 1e6;
        }
        const auto b = nnas::select_rank(spectrum_of(scaled), 5.0, 3);
        CHECK(a.rank == b.rank);
    }
    SUBCASE("degenerate spectrum is an error") {
        CHECK_THROWS_WITH_AS(nnas::select_rank(spectrum_of({0.0, 0.0, 0.0}), 10.0, 2),
                             doctest::Contains("degenerate"), nnas::Error);
    }
}

TEST_CASE("project applies the transposed basis") {
    ActiveSubspace as;
    as.rank = 1;
    as.projection = Mat(3, 1);
    as.projection(0, 0) = 1.0;

    CHECK(nnas::project(as, Vec{3.0, 5.0, -2.0}) == Vec{3.0});
    CHECK(nnas::project(as, Vec{0.0, 4.0, 9.0}) == Vec{0.0});

    // Orthonormal projections never expand.
    nnas::RandomSource rng(64);
    const Mat sym = oracle::random_psd(6, rng);
    const auto eig = nnas::sym_eig(sym);
    ActiveSubspace wide;
    wide.rank = 3;
    wide.projection = Mat(6, 3);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            wide.projection(i, j) = eig.eigenvectors(i, j);
        }
    }
    for (int rep = 0; rep < 20; ++rep) {
        Vec xi(6);
        for (double& v : xi) {
            v = rng.gaussian();
        }
        const Vec x_r = nnas::project(wide, xi);
        CHECK(nnas::norm2(x_r) <= nnas::norm2(xi) + 1e-12);

        // Reconstruction S S^T xi preserves the norm exactly when xi lies
        // in span(S), and strictly shrinks it otherwise.
        const Vec in_span = nnas::matvec(wide.projection, Vec{1.0, -2.0, 0.5});
        const Vec in_span_recon =
            nnas::matvec(wide.projection, nnas::project(wide, in_span));
        CHECK(std::abs(nnas::norm2(in_span_recon) - nnas::norm2(in_span)) <= 1e-10);
        Vec off_span(6);
        for (std::size_t i = 0; i < 6; ++i) {
            off_span[i] = xi[i] + 10.0 * eig.eigenvectors(i, 5);
        }
        const Vec off_recon = nnas::matvec(wide.projection, nnas::project(wide, off_span));
        CHECK(nnas::norm2(off_recon) < nnas::norm2(off_span) - 1e-10);
    }
}

TEST_CASE("adversarial perturbation drops a linear score by epsilon times the norm") {
    nnas::RandomSource rng(123);
    Vec a(8);
    for (double& v : a) {
        v = rng.gaussian();
    }
    a[0] = std::abs(a[0]) + 0.1;
    const oracle::LinearField field(a);
    const NoiseModel nm = nnas::unbounded_noise(Vec(8, 1.0), 1.0);

    nnas::RandomSource sample_rng(9);
    const auto est = nnas::estimate_c(field, nm, 4, sample_rng);
    const auto sp = nnas::decompose(est.c, 4);
    const auto as = nnas::select_rank(sp, 10.0, 3);

    SUBCASE("epsilon zero is a no-op") {
        const auto result = nnas::adversarial_perturb(field, nm, as, 0.0);
        CHECK(result.x_adv == nm.center);
        CHECK(result.score_before == result.score_after);
    }
    SUBCASE("score drop equals epsilon times the gradient norm") {
        const double epsilon = 2.5;
        const auto result = nnas::adversarial_perturb(field, nm, as, epsilon);
        const double drop = result.score_before - result.score_after;
        CHECK(drop == doctest::Approx(epsilon * nnas::norm2(a)).epsilon(1e-9));
        CHECK(result.score_after <= result.score_before);
    }
}

TEST_CASE("activity scores decompose the leading eigenvalues") {
    SUBCASE("rank-1 outer product gives squared components") {
        Vec a{3.0, 0.0, 4.0};
        Mat c(3, 3);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                c(i, j) = a[i] * a[j];
            }
        }
        const Spectrum sp = nnas::decompose(c);
        const Vec scores = nnas::attribution(sp, 1);
        CHECK(scores[0] == doctest::Approx(9.0).epsilon(1e-10));
        CHECK(scores[1] == doctest::Approx(0.0));
        CHECK(scores[2] == doctest::Approx(16.0).epsilon(1e-10));
    }
    SUBCASE("full rank recovers the trace") {
        nnas::RandomSource rng(77);
        const Mat c = oracle::random_psd(7, rng);
        const Spectrum sp = nnas::decompose(c);
        const Vec scores = nnas::attribution(sp, 7);
        const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
        double trace = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            trace += c(i, i);
        }
        CHECK(total == doctest::Approx(trace).epsilon(1e-9));
        for (double s : scores) {
            CHECK(s >= 0.0);
        }
    }
    SUBCASE("the dominant quadratic axis gets the top score") {
        const Vec a{4.0, 2.0, 1.0, 0.5};
        const oracle::QuadraticDiagField field(a);
        const NoiseModel nm = nnas::unbounded_noise(Vec(4, 0.0), 1.0);
        nnas::RandomSource rng(2718);
        const auto est = nnas::estimate_c(field, nm, 4000, rng);
        const Spectrum sp = nnas::decompose(est.c, 4000);
        const Vec scores = nnas::attribution(sp, 1);
        CHECK(std::max_element(scores.begin(), scores.end()) == scores.begin());
    }
}

TEST_CASE("estimate_c output is symmetric and PSD for a real field") {
    const Vec a{1.0, -2.0, 0.5, 3.0};
    const oracle::QuadraticDiagField field(a);
    NoiseModel nm;
    nm.center = Vec{100.0, 120.0, 80.0, 200.0};
    nm.sigma = 25.0;
    nnas::RandomSource rng(11);
    const auto est = nnas::estimate_c(field, nm, 200, rng);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(est.c(i, j) == est.c(j, i));
        }
    }
    const Spectrum sp = nnas::decompose(est.c, 200);
    CHECK(sp.eigenvalues.back() >= 0.0);
}

TEST_CASE("linear fields keep the same active direction under sigma scaling") {
    Vec a{0.6, -0.8, 0.0};
    const oracle::LinearField field(a);
    Vec w_small;
    Vec w_large;
    for (const double sigma : {0.1, 50.0}) {
        const NoiseModel nm = nnas::unbounded_noise(Vec(3, 0.0), sigma);
        nnas::RandomSource rng(404);
        const auto sp = nnas::decompose(nnas::estimate_c(field, nm, 5, rng).c, 5);
        (sigma < 1.0 ? w_small : w_large) = sp.eigenvectors.column(0);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(w_small[i] == doctest::Approx(w_large[i]).epsilon(1e-12));
    }
}
