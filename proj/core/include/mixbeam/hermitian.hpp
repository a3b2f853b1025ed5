// Complex Hermitian kernels shared by all beamformers: loaded HPD solves,
// Sherman-Morrison rank-1 inverse updates, traces of matrix products, and
// warm-started power iteration for the dominant generalized eigenvector.
#ifndef MIXBEAM_HERMITIAN_HPP
#define MIXBEAM_HERMITIAN_HPP

#include "mixbeam/common.hpp"

namespace mixbeam {

// Relative diagonal loading applied before HPD solves.
inline constexpr double kDiagonalLoading = 1e-9;

// M x M complex Hermitian PSD matrix (spatial covariance role).
struct HermitianScm {
  CMat m;

  HermitianScm() = default;
  explicit HermitianScm(Eigen::Index dim) : m(CMat::Zero(dim, dim)) {}
  explicit HermitianScm(CMat mat) : m(std::move(mat)) { symmetrize(); }

  Eigen::Index dim() const { return m.rows(); }

  // projects onto the Hermitian part; a no-op (bit-exact) when already Hermitian
  void symmetrize() { m = 0.5 * (m + m.adjoint()).eval(); }

  double hermitian_deviation() const { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }
  // smallest eigenvalue; PSD within tolerance when >= -1e-10 * trace
  double min_eigenvalue() const;
};

// Solves A X = B for Hermitian positive-definite A after diagonal loading
// (kDiagonalLoading * tr(A)/M on the diagonal). `bin` labels the frequency
// bin in diagnostics; pass -1 when not applicable.
CMat solve_hpd(const HermitianScm& A, const CMat& B, int bin = -1);

// Inverse of a Hermitian PD matrix via loaded solve.
CMat invert_hpd(const HermitianScm& A, int bin = -1);

// log(det(A)) for Hermitian PD A; throws SingularMatrixError when not PD.
double logdet_hpd(const CMat& A);

// Given Ainv = A^-1 with A Hermitian PD, returns (beta*A + (1-beta)*x*x^H)^-1
// computed with the Sherman-Morrison identity in O(M^2). beta must lie in
// (0, 1]. Falls back to a direct solve if the update denominator degenerates.
CMat rank1_inverse_update(const CMat& Ainv, const CVec& x, double beta);

// log(det(beta*A + (1-beta)*x*x^H)) from log(det(A)) and Ainv, in O(M^2).
double rank1_logdet_update(double logdet_A, const CMat& Ainv, const CVec& x, double beta);

// Re(tr(Ainv * B)); the imaginary residue is discarded (it vanishes when both
// arguments are Hermitian and Ainv is the inverse of an HPD matrix).
double trace_of_product(const CMat& Ainv, const CMat& B);

struct PowerIterationResult {
  CVec u;
  bool degenerate = false;  // update collapsed to zero; u is u_prev unchanged
};

// `iters` applications of u <- normalize(Avinv * Ax * u), warm-started from
// u_prev. Converges to the dominant generalized eigenvector of (Ax, Av).
PowerIterationResult power_iteration(const CMat& Avinv, const HermitianScm& Ax, const CVec& u_prev,
                                     int iters);

}  // namespace mixbeam

#endif  // MIXBEAM_HERMITIAN_HPP
