#pragma once

#include "edgemargin/errors.hpp"
#include "edgemargin/matrix.hpp"

#include <span>
#include <vector>

namespace edgemargin {

/// Solve a*x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when a pivot falls below
/// 1e-12 times the largest initial column magnitude of a.
Matrix solve_linear(const Matrix& a, const Matrix& b);

/// Convenience inverse via solve_linear against the identity.
Matrix inverse(const Matrix& a);

/// All eigenvalues of a real square matrix (dimension <= 64), with
/// multiplicity. Hessenberg reduction followed by shifted QR iteration;
/// throws NoConvergence when the deflation budget (100*n sweeps) is
/// exhausted.
std::vector<Complex> eigenvalues(const Matrix& a);

/// max |lambda| over the spectrum.
double spectral_radius(const Matrix& a);

/// min Re(lambda) over the spectrum.
double min_real_part(const Matrix& a);

/// Default threshold for rank decisions: 1e-9 times the largest column
/// norm (a tiny positive floor keeps it valid for the zero matrix).
double default_rank_tolerance(const Matrix& a);

/// Numerical rank at absolute threshold tol (column-pivoted QR).
int rank(const Matrix& a, double tol);
int rank(const Matrix& a);

/// Orthonormal basis of the numerical null space of a at threshold tol.
/// Columns satisfy ||N^T N - I||_max <= 1e-10 and a*N ~ 0 within tol.
/// Returns an n x 0 matrix when the null space is trivial.
Matrix null_space_orthonormal(const Matrix& a, double tol);
Matrix null_space_orthonormal(const Matrix& a);

/// Re-orthonormalize the columns of a full-column-rank matrix
/// (modified Gram-Schmidt, two passes).
Matrix orthonormalize_columns(const Matrix& a);

/// Solve (s*I - a) z = b for complex s and a real right-hand side, via
/// the doubled real system. Throws SingularAtS when s is (numerically)
/// an eigenvalue of a.
std::vector<Complex> solve_shifted(const Matrix& a, Complex s, std::span<const double> b);

/// Multiset equality of complex values up to tol (greedy nearest match).
bool same_multiset(std::vector<Complex> a, std::vector<Complex> b, double tol);

/// Drop entries with |z| <= zero_tol.
std::vector<Complex> drop_zeros(const std::vector<Complex>& values, double zero_tol);

} // namespace edgemargin
