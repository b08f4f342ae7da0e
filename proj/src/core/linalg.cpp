#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nnas {

Vec Mat::column(std::size_t j) const {
    Vec out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        out[i] = (*this)(i, j);
    }
    return out;
}

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Mat& m) {
    return all_finite(m.data());
}

double dot(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), ErrorKind::DimensionMismatch,
            "dot: vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(const Vec& a) {
    double s = 0.0;
    for (double x : a) {
        s += x * x;
    }
    return std::sqrt(s);
}

Vec matvec(const Mat& a, const Vec& x) {
    require(a.cols() == x.size(), ErrorKind::DimensionMismatch,
            "matvec: matrix columns do not match vector length");
    Vec out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            s += r[j] * x[j];
        }
        out[i] = s;
    }
    return out;
}

Vec matvec_transposed(const Mat& a, const Vec& x) {
    require(a.rows() == x.size(), ErrorKind::DimensionMismatch,
            "matvec_transposed: matrix rows do not match vector length");
    Vec out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out[j] += r[j] * xi;
        }
    }
    return out;
}

Mat matmul(const Mat& a, const Mat& b) {
    require(a.cols() == b.rows(), ErrorKind::DimensionMismatch,
            "matmul: inner dimensions differ");
    Mat out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            const double* br = b.row(k);
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += aik * br[j];
            }
        }
    }
    return out;
}

Mat transpose(const Mat& a) {
    Mat out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (double x : a.data()) {
        s += x * x;
    }
    return std::sqrt(s);
}

namespace {

// Sorts eigenpairs descending and fixes each eigenvector's sign so the
// first component above 1e-12 in magnitude is positive.
EigenDecomposition sort_and_normalize(Vec values, Mat vectors) {
    const std::size_t d = values.size();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

    EigenDecomposition out;
    out.eigenvalues.resize(d);
    out.eigenvectors = Mat(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = values[src];
        double sign = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double v = vectors(i, src);
            if (std::abs(v) > 1e-12) {
                sign = (v < 0.0) ? -1.0 : 1.0;
                break;
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            out.eigenvectors(i, k) = sign * vectors(i, src);
        }
    }
    return out;
}

} // namespace

EigenDecomposition sym_eig(const Mat& a, double tol) {
    const std::size_t d = a.rows();
    require(d >= 1 && a.cols() == d, ErrorKind::DimensionMismatch,
            "sym_eig: input matrix must be square and non-empty");
    require(all_finite(a), ErrorKind::InvalidArgument,
            "sym_eig: input matrix contains non-finite entries");
    require(tol > 0.0, ErrorKind::InvalidArgument, "sym_eig: tolerance must be positive");

    const double fro = frobenius_norm(a);
    double asym = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const double delta = a(i, j) - a(j, i);
            asym += 2.0 * delta * delta;
        }
    }
    asym = std::sqrt(asym);
    require(asym <= 1e-12 * std::max(1.0, fro), ErrorKind::InvalidArgument,
            "sym_eig: matrix is asymmetric beyond tolerance");

    // Work on the symmetrized copy so rounding asymmetry cannot bias rotations.
    Mat s(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            s(i, j) = 0.5 * (a(i, j) + a(j, i));
        }
    }
    Mat v = Mat::identity(d);

    if (d == 1 || fro == 0.0) {
        Vec values(d);
        for (std::size_t i = 0; i < d; ++i) {
            values[i] = s(i, i);
        }
        return sort_and_normalize(std::move(values), std::move(v));
    }

    const double target = tol * fro;
    // Rotations on entries this small cannot stop convergence: even if every
    // off-diagonal entry sat at the cutoff, off(S) would stay below target.
    const double skip_cutoff = 0.1 * target / static_cast<double>(d);
    const int max_sweeps = 100;

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double* r = s.row(i);
            for (std::size_t j = i + 1; j < d; ++j) {
                off += 2.0 * r[j] * r[j];
            }
        }
        if (std::sqrt(off) <= target) {
            converged = true;
            break;
        }

        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = s(p, q);
                if (std::abs(apq) <= skip_cutoff) {
                    continue;
                }
                const double app = s(p, p);
                const double aqq = s(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;

                double* rowp = s.row(p);
                double* rowq = s.row(q);
                for (std::size_t i = 0; i < d; ++i) {
                    if (i == p || i == q) {
                        continue;
                    }
                    const double aip = rowp[i];
                    const double aiq = rowq[i];
                    const double np = c * aip - sn * aiq;
                    const double nq = sn * aip + c * aiq;
                    rowp[i] = np;
                    rowq[i] = nq;
                    s(i, p) = np;
                    s(i, q) = nq;
                }
                s(p, p) = app - t * apq;
                s(q, q) = aqq + t * apq;
                s(p, q) = 0.0;
                s(q, p) = 0.0;

                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - sn * viq;
                    v(i, q) = sn * vip + c * viq;
                }
            }
        }
    }
    require(converged, ErrorKind::Numeric,
            "sym_eig: Jacobi iteration did not converge within 100 sweeps");

    Vec values(d);
    for (std::size_t i = 0; i < d; ++i) {
        values[i] = s(i, i);
    }
    return sort_and_normalize(std::move(values), std::move(v));
}

Vec lstsq(const Mat& phi, const Vec& y) {
    const std::size_t n = phi.rows();
    const std::size_t k = phi.cols();
    require(n >= 1 && k >= 1, ErrorKind::InvalidArgument, "lstsq: empty system");
    require(n >= k, ErrorKind::InvalidArgument,
            "lstsq: fewer rows than unknowns (underdetermined system)");
    require(y.size() == n, ErrorKind::DimensionMismatch,
            "lstsq: right-hand side length does not match row count");
    require(all_finite(phi) && all_finite(y), ErrorKind::InvalidArgument,
            "lstsq: non-finite entries in system");

    Mat a = phi;
    Vec b = y;

    // Householder QR, reflections applied to b as they are formed.
    for (std::size_t j = 0; j < k; ++j) {
        double colnorm = 0.0;
        for (std::size_t i = j; i < n; ++i) {
            colnorm += a(i, j) * a(i, j);
        }
        colnorm = std::sqrt(colnorm);
        if (colnorm == 0.0) {
            continue; // R_jj = 0, caught by the condition estimate below
        }
        const double alpha = (a(j, j) > 0.0) ? -colnorm : colnorm;
        Vec h(n - j);
        h[0] = a(j, j) - alpha;
        for (std::size_t i = j + 1; i < n; ++i) {
            h[i - j] = a(i, j);
        }
        const double beta = alpha * h[0]; // = -||h||^2 / 2 up to sign; nonzero here
        if (beta == 0.0) {
            continue;
        }
        for (std::size_t col = j + 1; col < k; ++col) {
            double g = 0.0;
            for (std::size_t i = j; i < n; ++i) {
                g += h[i - j] * a(i, col);
            }
            g /= beta;
            for (std::size_t i = j; i < n; ++i) {
                a(i, col) += g * h[i - j];
            }
        }
        double g = 0.0;
        for (std::size_t i = j; i < n; ++i) {
            g += h[i - j] * b[i];
        }
        g /= beta;
        for (std::size_t i = j; i < n; ++i) {
            b[i] += g * h[i - j];
        }
        a(j, j) = alpha;
        for (std::size_t i = j + 1; i < n; ++i) {
            a(i, j) = 0.0;
        }
    }

    double rmax = 0.0;
    double rmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        const double r = std::abs(a(j, j));
        rmax = std::max(rmax, r);
        rmin = std::min(rmin, r);
    }
    if (rmin == 0.0 || rmax / rmin > 1e12) {
        throw Error(ErrorKind::Numeric,
                    "lstsq: design matrix is rank deficient or ill-conditioned "
                    "(diagonal ratio estimate exceeds 1e12)");
    }

    Vec c(k, 0.0);
    for (std::size_t jj = k; jj-- > 0;) {
        double s = b[jj];
        for (std::size_t col = jj + 1; col < k; ++col) {
            s -= a(jj, col) * c[col];
        }
        c[jj] = s / a(jj, jj);
    }
    return c;
}

} // namespace nnas
