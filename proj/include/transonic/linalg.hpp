#pragma once

// Linear solves for structured-grid Jacobians: LAPACK banded LU when the band
// fits in memory, Jacobi-preconditioned BiCGSTAB otherwise.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "transonic/error.hpp"

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab, const int* ldab,
             int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info, std::size_t trans_len);
}

namespace transonic {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Bandwidth {
  int lower = 0;
  int upper = 0;
};

inline Bandwidth bandwidth_of(const SparseMatrix& a) {
  Bandwidth bw;
  for (int r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      bw.lower = std::max(bw.lower, r - static_cast<int>(it.col()));
      bw.upper = std::max(bw.upper, static_cast<int>(it.col()) - r);
    }
  }
  return bw;
}

/// LU factorization with partial pivoting of a square banded matrix (LAPACK dgbtrf).
class BandedLU {
 public:
  explicit BandedLU(const SparseMatrix& a) : n_(static_cast<int>(a.rows())) {
    if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidArgument, "matrix must be square");
    const Bandwidth bw = bandwidth_of(a);
    kl_ = bw.lower;
    ku_ = bw.upper;
    ldab_ = 2 * kl_ + ku_ + 1;
    ab_.assign(static_cast<std::size_t>(ldab_) * n_, 0.0);
    for (int r = 0; r < a.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
        const int c = static_cast<int>(it.col());
        ab_[static_cast<std::size_t>(c) * ldab_ + (kl_ + ku_ + r - c)] += it.value();
      }
    }
    ipiv_.resize(n_);
    int info = 0;
    dgbtrf_(&n_, &n_, &kl_, &ku_, ab_.data(), &ldab_, ipiv_.data(), &info);
    if (info != 0) throw Error(ErrorKind::NewtonDiverged, "singular Jacobian in banded LU");
  }

  static std::size_t storage_bytes(const SparseMatrix& a) {
    const Bandwidth bw = bandwidth_of(a);
    return sizeof(double) * static_cast<std::size_t>(2 * bw.lower + bw.upper + 1) *
           static_cast<std::size_t>(a.rows());
  }

  /// Solves in place for every column of b.
  void solve_in_place(Eigen::MatrixXd& b) const {
    const int nrhs = static_cast<int>(b.cols());
    int info = 0;
    const char trans = 'N';
    dgbtrs_(&trans, &n_, &kl_, &ku_, &nrhs, ab_.data(), &ldab_, ipiv_.data(), b.data(), &n_,
            &info, 1);
  }

  Vector solve(const Vector& rhs) const {
    Eigen::MatrixXd b = rhs;
    solve_in_place(b);
    return b.col(0);
  }

  int lower() const noexcept { return kl_; }
  int upper() const noexcept { return ku_; }

 private:
  int n_;
  int kl_ = 0;
  int ku_ = 0;
  int ldab_ = 1;
  std::vector<double> ab_;
  std::vector<int> ipiv_;
};

struct LinearSolveOptions {
  double relative_tol = 1e-12;
  std::size_t band_memory_cap = std::size_t{1} << 29;  // 512 MiB
  int max_refinement = 3;
};

/// Either a banded factorization or an iterative fallback, reusable across right-hand sides.
class JacobianSolver {
 public:
  JacobianSolver(const SparseMatrix& a, const LinearSolveOptions& opts) : a_(a), opts_(opts) {
    if (BandedLU::storage_bytes(a) <= opts.band_memory_cap) {
      lu_.emplace(a);
    } else {
      iterative_.emplace();
      iterative_->setTolerance(opts.relative_tol);
      iterative_->setMaxIterations(20 * static_cast<int>(a.rows()));
      iterative_->compute(a);
    }
  }

  // The iterative solver keeps a reference to a_.
  JacobianSolver(const JacobianSolver&) = delete;
  JacobianSolver& operator=(const JacobianSolver&) = delete;

  bool banded() const noexcept { return lu_.has_value(); }

  /// Solves A x = rhs; iterative refinement keeps the relative residual at the target.
  Vector solve(const Vector& rhs) const {
    if (!lu_) {
      Vector x = iterative_->solve(rhs);
      return x;
    }
    Vector x = lu_->solve(rhs);
    const double scale = std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
    for (int k = 0; k < opts_.max_refinement; ++k) {
      const Vector r = rhs - a_ * x;
      if (r.lpNorm<Eigen::Infinity>() <= opts_.relative_tol * scale) break;
      x += lu_->solve(r);
    }
    return x;
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    if (!lu_) {
      Eigen::MatrixXd x(rhs.rows(), rhs.cols());
      for (Eigen::Index c = 0; c < rhs.cols(); ++c) x.col(c) = iterative_->solve(rhs.col(c));
      return x;
    }
    Eigen::MatrixXd x = rhs;
    lu_->solve_in_place(x);
    return x;
  }

  double relative_residual(const Vector& x, const Vector& rhs) const {
    const double scale = std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
    return (rhs - a_ * x).lpNorm<Eigen::Infinity>() / scale;
  }

 private:
  SparseMatrix a_;
  LinearSolveOptions opts_;
  std::optional<BandedLU> lu_;
  std::optional<Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>>> iterative_;
};

}  // namespace transonic
