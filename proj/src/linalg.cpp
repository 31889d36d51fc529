#include "edgemargin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edgemargin {

namespace {

constexpr double kPivotRel = 1e-12;

double sign_of(double magnitude, double sign_source) {
    return sign_source >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

/// Householder reduction to upper Hessenberg form, in place.
void hessenberg_reduce(Matrix& h) {
    const int n = h.rows();
    std::vector<double> v(n, 0.0);
    for (int k = 0; k + 2 < n; ++k) {
        double norm2 = 0.0;
        for (int i = k + 1; i < n; ++i) norm2 += h(i, k) * h(i, k);
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue;

        const double alpha = h(k + 1, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) v[i] = h(i, k);
        v[k + 1] -= alpha;
        for (int i = k + 1; i < n; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;

        // left: rows k+1..n-1
        for (int j = k; j < n; ++j) {
            double s = 0.0;
            for (int i = k + 1; i < n; ++i) s += v[i] * h(i, j);
            const double f = 2.0 * s / vnorm2;
            for (int i = k + 1; i < n; ++i) h(i, j) -= f * v[i];
        }
        // right: columns k+1..n-1
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            const double f = 2.0 * s / vnorm2;
            for (int j = k + 1; j < n; ++j) h(i, j) -= f * v[j];
        }
        h(k + 1, k) = alpha;
        for (int i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Classical
/// EISPACK hqr scheme, kept 1-based internally to stay close to the
/// reference formulation. Throws NoConvergence past sweep_budget sweeps.
std::vector<Complex> hqr_eigenvalues(const Matrix& hess, int sweep_budget) {
    const int n = hess.rows();
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) a[i][j] = hess(i - 1, j - 1);

    std::vector<Complex> eig;
    eig.reserve(n);

    const double eps = std::numeric_limits<double>::epsilon();
    double anorm = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::fabs(a[i][j]);

    int sweeps = 0;
    int nn = n;
    double t = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                double s = std::fabs(a[l - 1][l - 1]) + std::fabs(a[l][l]);
                if (s == 0.0) s = anorm;
                if (std::fabs(a[l][l - 1]) <= eps * s) {
                    a[l][l - 1] = 0.0;
                    break;
                }
            }
            if (l < 1) l = 1;
            double x = a[nn][nn];
            if (l == nn) {
                eig.emplace_back(x + t, 0.0);
                --nn;
            } else {
                double y = a[nn - 1][nn - 1];
                double w = a[nn][nn - 1] * a[nn - 1][nn];
                if (l == nn - 1) {
                    double p = 0.5 * (y - x);
                    double q = p * p + w;
                    double z = std::sqrt(std::fabs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        eig.emplace_back(x + z, 0.0);
                        eig.emplace_back(z != 0.0 ? x - w / z : x + z, 0.0);
                    } else {
                        eig.emplace_back(x + p, z);
                        eig.emplace_back(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if (++sweeps > sweep_budget)
                        throw NoConvergence("eigenvalue iteration exceeded its sweep budget");
                    if (its > 0 && its % 10 == 0) {
                        // exceptional shift
                        t += x;
                        for (int i = 1; i <= nn; ++i) a[i][i] -= x;
                        double s = std::fabs(a[nn][nn - 1]) + std::fabs(a[nn - 1][nn - 2]);
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = 0;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (m = nn - 2; m >= l; --m) {
                        z = a[m][m];
                        double rr = x - z;
                        double ss = y - z;
                        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - rr - ss;
                        r = a[m + 2][m + 1];
                        double scale = std::fabs(p) + std::fabs(q) + std::fabs(r);
                        p /= scale;
                        q /= scale;
                        r /= scale;
                        if (m == l) break;
                        const double u = std::fabs(a[m][m - 1]) * (std::fabs(q) + std::fabs(r));
                        const double v =
                            std::fabs(p) * (std::fabs(a[m - 1][m - 1]) + std::fabs(z) +
                                            std::fabs(a[m + 1][m + 1]));
                        if (u <= eps * v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a[i][i - 2] = 0.0;
                        if (i != m + 2) a[i][i - 3] = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if (k != nn - 1) r = a[k + 2][k - 1];
                            x = std::fabs(p) + std::fabs(q) + std::fabs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a[k][k - 1] = -a[k][k - 1];
                        } else {
                            a[k][k - 1] = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a[k][j] + q * a[k + 1][j];
                            if (k != nn - 1) {
                                p += r * a[k + 2][j];
                                a[k + 2][j] -= p * z;
                            }
                            a[k + 1][j] -= p * y;
                            a[k][j] -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a[i][k] + y * a[i][k + 1];
                            if (k != nn - 1) {
                                p += z * a[i][k + 2];
                                a[i][k + 2] -= p * r;
                            }
                            a[i][k + 1] -= p * q;
                            a[i][k] -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return eig;
}

struct ColPivotQr {
    Matrix r;               // upper trapezoid, below-diagonal zeroed
    std::vector<int> perm;  // r's column k came from a's column perm[k]
};

ColPivotQr qr_column_pivot(Matrix a) {
    const int m = a.rows();
    const int n = a.cols();
    ColPivotQr out;
    out.perm.resize(n);
    std::iota(out.perm.begin(), out.perm.end(), 0);

    std::vector<double> v(m, 0.0);
    const int steps = std::min(m, n);
    for (int k = 0; k < steps; ++k) {
        // pivot on the largest remaining column (norms recomputed; cheap at this scale)
        int best = k;
        double best_norm2 = -1.0;
        for (int j = k; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < m; ++i) s += a(i, j) * a(i, j);
            if (s > best_norm2) {
                best_norm2 = s;
                best = j;
            }
        }
        if (best != k) {
            for (int i = 0; i < m; ++i) std::swap(a(i, k), a(i, best));
            std::swap(out.perm[k], out.perm[best]);
        }
        const double norm = std::sqrt(std::max(best_norm2, 0.0));
        if (norm == 0.0) continue;

        const double alpha = a(k, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (int i = k; i < m; ++i) v[i] = a(i, k);
        v[k] -= alpha;
        for (int i = k; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;

        for (int j = k; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < m; ++i) s += v[i] * a(i, j);
            const double f = 2.0 * s / vnorm2;
            for (int i = k; i < m; ++i) a(i, j) -= f * v[i];
        }
        a(k, k) = alpha;
        for (int i = k + 1; i < m; ++i) a(i, k) = 0.0;
    }
    out.r = std::move(a);
    return out;
}

int rank_from_qr(const ColPivotQr& qr, double tol) {
    const int steps = std::min(qr.r.rows(), qr.r.cols());
    int r = 0;
    for (int k = 0; k < steps; ++k)
        if (std::fabs(qr.r(k, k)) > tol) ++r;
    return r;
}

} // namespace

Matrix solve_linear(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols()) throw std::invalid_argument("solve_linear: matrix not square");
    if (b.rows() != a.rows()) throw std::invalid_argument("solve_linear: rhs row mismatch");
    const int n = a.rows();
    if (n == 0) return Matrix(0, b.cols());

    const double threshold = kPivotRel * a.max_abs();
    Matrix w = a;
    Matrix x = b;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(w(i, k)) > std::fabs(w(piv, k))) piv = i;
        if (std::fabs(w(piv, k)) <= threshold)
            throw SingularMatrix("solve_linear: pivot below singularity threshold");
        if (piv != k) {
            for (int j = k; j < n; ++j) std::swap(w(k, j), w(piv, j));
            for (int j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
        }
        const double inv_piv = 1.0 / w(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double f = w(i, k) * inv_piv;
            if (f == 0.0) continue;
            for (int j = k; j < n; ++j) w(i, j) -= f * w(k, j);
            for (int j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = 0; j < x.cols(); ++j) {
            double s = x(k, j);
            for (int i = k + 1; i < n; ++i) s -= w(k, i) * x(i, j);
            x(k, j) = s / w(k, k);
        }
    }
    return x;
}

Matrix inverse(const Matrix& a) { return solve_linear(a, Matrix::identity(a.rows())); }

std::vector<Complex> eigenvalues(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues: matrix not square");
    const int n = a.rows();
    if (n > 64) throw std::invalid_argument("eigenvalues: dimension above the supported 64");
    if (n == 0) return {};
    if (n == 1) return {Complex(a(0, 0), 0.0)};

    Matrix h = a;
    hessenberg_reduce(h);
    return hqr_eigenvalues(h, 100 * n);
}

double spectral_radius(const Matrix& a) {
    double rho = 0.0;
    for (const Complex& z : eigenvalues(a)) rho = std::max(rho, std::abs(z));
    return rho;
}

double min_real_part(const Matrix& a) {
    double mn = std::numeric_limits<double>::infinity();
    for (const Complex& z : eigenvalues(a)) mn = std::min(mn, z.real());
    return mn;
}

double default_rank_tolerance(const Matrix& a) {
    const double norm = a.largest_column_norm();
    return norm > 0.0 ? 1e-9 * norm : std::numeric_limits<double>::min();
}

int rank(const Matrix& a, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("rank: tolerance must be positive");
    if (a.empty()) return 0;
    return rank_from_qr(qr_column_pivot(a), tol);
}

int rank(const Matrix& a) { return rank(a, default_rank_tolerance(a)); }

Matrix orthonormalize_columns(const Matrix& a) {
    Matrix q = a;
    const int m = q.rows();
    const int n = q.cols();
    // modified Gram-Schmidt, two passes
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < j; ++i) {
                double dot = 0.0;
                for (int r = 0; r < m; ++r) dot += q(r, i) * q(r, j);
                for (int r = 0; r < m; ++r) q(r, j) -= dot * q(r, i);
            }
            double norm2 = 0.0;
            for (int r = 0; r < m; ++r) norm2 += q(r, j) * q(r, j);
            const double norm = std::sqrt(norm2);
            if (norm == 0.0)
                throw IllConditioned("orthonormalize_columns: rank-deficient input");
            for (int r = 0; r < m; ++r) q(r, j) /= norm;
        }
    }
    return q;
}

Matrix null_space_orthonormal(const Matrix& a, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("null_space_orthonormal: tolerance must be positive");
    const int n = a.cols();
    if (a.empty()) return Matrix::identity(n);

    const ColPivotQr qr = qr_column_pivot(a);
    const int r = rank_from_qr(qr, tol);
    const int nullity = n - r;
    if (nullity == 0) return Matrix(n, 0);

    // Solve R11 * X = -R12 by back substitution, then embed through the
    // column permutation.
    Matrix x(r, nullity);
    for (int j = 0; j < nullity; ++j) {
        for (int i = r - 1; i >= 0; --i) {
            double s = -qr.r(i, r + j);
            for (int k = i + 1; k < r; ++k) s -= qr.r(i, k) * x(k, j);
            x(i, j) = s / qr.r(i, i);
        }
    }
    Matrix basis(n, nullity);
    for (int k = 0; k < r; ++k)
        for (int j = 0; j < nullity; ++j) basis(qr.perm[k], j) = x(k, j);
    for (int j = 0; j < nullity; ++j) basis(qr.perm[r + j], j) = 1.0;
    return orthonormalize_columns(basis);
}

Matrix null_space_orthonormal(const Matrix& a) {
    return null_space_orthonormal(a, default_rank_tolerance(a));
}

std::vector<Complex> solve_shifted(const Matrix& a, Complex s, std::span<const double> b) {
    const int n = a.rows();
    if (a.cols() != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve_shifted: dimension mismatch");
    // (sI - a)(x + iy) = b as a doubled real system
    Matrix big(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d = (i == j ? s.real() : 0.0) - a(i, j);
            big(i, j) = d;
            big(n + i, n + j) = d;
        }
        big(i, n + i) = -s.imag();
        big(n + i, i) = s.imag();
    }
    Matrix rhs(2 * n, 1);
    for (int i = 0; i < n; ++i) rhs(i, 0) = b[i];
    Matrix sol;
    try {
        sol = solve_linear(big, rhs);
    } catch (const SingularMatrix&) {
        throw SingularAtS("solve_shifted: s is an eigenvalue of the system matrix");
    }
    std::vector<Complex> z(n);
    for (int i = 0; i < n; ++i) z[i] = Complex(sol(i, 0), sol(n + i, 0));
    return z;
}

bool same_multiset(std::vector<Complex> a, std::vector<Complex> b, double tol) {
    if (a.size() != b.size()) return false;
    for (const Complex& x : a) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_i = 0;
        for (size_t i = 0; i < b.size(); ++i) {
            const double d = std::abs(x - b[i]);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        if (best > tol) return false;
        b.erase(b.begin() + static_cast<long>(best_i));
    }
    return true;
}

std::vector<Complex> drop_zeros(const std::vector<Complex>& values, double zero_tol) {
    std::vector<Complex> kept;
    kept.reserve(values.size());
    for (const Complex& z : values)
        if (std::abs(z) > zero_tol) kept.push_back(z);
    return kept;
}

} // namespace edgemargin
