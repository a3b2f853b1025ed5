#include "mixbeam/hermitian.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace mixbeam {

double HermitianScm::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {
CMat loaded(const HermitianScm& A) {
  const Eigen::Index n = A.dim();
  const double load = kDiagonalLoading * std::abs(A.m.trace().real()) / static_cast<double>(n);
  CMat L = A.m;
  L.diagonal().array() += load;
  return L;
}

std::string bin_label(int bin) {
  return bin >= 0 ? (" at frequency bin " + std::to_string(bin)) : std::string();
}
}  // namespace

CMat solve_hpd(const HermitianScm& A, const CMat& B, int bin) {
  if (A.dim() != B.rows()) throw DataError("solve_hpd: shape mismatch");

  // plain factorization plus one refinement step meets the residual contract
  // on well-conditioned systems without perturbing A
  {
    Eigen::LLT<CMat> llt(A.m);
    if (llt.info() == Eigen::Success) {
      CMat X = llt.solve(B);
      X += llt.solve(B - A.m * X);
      if (X.allFinite() && (A.m * X - B).norm() <= 1e-9 * B.norm()) return X;
    }
  }

  // ill-conditioned: diagonal loading, then the same refinement
  const CMat L = loaded(A);
  Eigen::LLT<CMat> llt(L);
  if (llt.info() == Eigen::Success) {
    CMat X = llt.solve(B);
    X += llt.solve(B - L * X);
    if (X.allFinite()) return X;
  }
  Eigen::LDLT<CMat> ldlt(L);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const CMat X = ldlt.solve(B);
    // LDLT accepts semidefinite pivots; keep only solutions that actually solve
    if (X.allFinite() && (L * X - B).norm() <= 1e-6 * (B.norm() + 1.0)) return X;
  }
  throw SingularMatrixError("solve_hpd: matrix singular beyond loading tolerance" + bin_label(bin));
}

CMat invert_hpd(const HermitianScm& A, int bin) {
  return solve_hpd(A, CMat::Identity(A.dim(), A.dim()), bin);
}

double logdet_hpd(const CMat& A) {
  Eigen::LLT<CMat> llt(A);
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("logdet_hpd: matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().real().array().log().sum();
}

CMat rank1_inverse_update(const CMat& Ainv, const CVec& x, double beta) {
  if (Ainv.rows() != Ainv.cols() || Ainv.rows() != x.size())
    throw DataError("rank1_inverse_update: shape mismatch");
  if (!(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("rank1_inverse_update: beta must lie in (0, 1]");
  if (beta == 1.0) return Ainv;

  const CVec w = Ainv * x;
  const double r = (x.dot(w)).real();  // x^H Ainv x, real and >= 0 for HPD Ainv
  const double denom = beta + (1.0 - beta) * r;
  if (!(denom > 1e-300 * std::max(1.0, r))) {
    // degenerate denominator: rebuild the updated matrix and solve directly
    HermitianScm Ainv_h(Ainv);
    CMat A = invert_hpd(Ainv_h);
    HermitianScm updated(beta * A + (1.0 - beta) * (x * x.adjoint()));
    return invert_hpd(updated);
  }
  CMat out = (Ainv - ((1.0 - beta) / denom) * (w * w.adjoint())) / beta;
  // keep the Hermitian invariant exact
  out = 0.5 * (out + out.adjoint()).eval();
  return out;
}

double rank1_logdet_update(double logdet_A, const CMat& Ainv, const CVec& x, double beta) {
  // det(beta*A + (1-beta)x x^H) = beta^M det(A) (1 + (1-beta)/beta * x^H Ainv x)
  const auto M = static_cast<double>(Ainv.rows());
  if (beta == 1.0) return logdet_A;
  const double r = (x.dot(Ainv * x)).real();
  return M * std::log(beta) + logdet_A + std::log1p((1.0 - beta) / beta * r);
}

double trace_of_product(const CMat& Ainv, const CMat& B) {
  if (Ainv.rows() != B.cols() || Ainv.cols() != B.rows())
    throw DataError("trace_of_product: shape mismatch");
  // tr(A B) = sum_ij A_ij B_ji, O(M^2) without forming the product
  const std::complex<double> t = (Ainv.transpose().cwiseProduct(B)).sum();
  return t.real();
}

PowerIterationResult power_iteration(const CMat& Avinv, const HermitianScm& Ax, const CVec& u_prev,
                                     int iters) {
  if (iters < 1) throw std::invalid_argument("power_iteration: iters must be >= 1");
  if (u_prev.size() != Ax.dim() || Avinv.rows() != Ax.dim())
    throw DataError("power_iteration: shape mismatch");
  const double prev_norm = u_prev.norm();
  if (!(prev_norm > 0)) throw std::invalid_argument("power_iteration: u_prev must be nonzero");

  PowerIterationResult res;
  res.u = u_prev / prev_norm;
  CVec t(u_prev.size());
  for (int k = 0; k < iters; ++k) {
    t.noalias() = Ax.m * res.u;
    t = Avinv * t;
    const double n = t.norm();
    if (!(n > 1e-300)) {
      res.u = u_prev;
      res.degenerate = true;
      return res;
    }
    res.u = t / n;
  }
  return res;
}

}  // namespace mixbeam
