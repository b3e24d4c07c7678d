#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"

namespace magstep {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;

struct LanczosOptions {
  int k = 1;              // wanted eigenpairs
  int max_basis = 30;     // Krylov vectors kept in memory
  int max_restarts = 200;
  double tol = 1e-11;     // relative Ritz residual of the inverted operator
  // inside near-degenerate clusters single Ritz vectors converge slowly while
  // the values settle; accept once they stop moving and the residual is modest
  double stall_tol = 1e-14;
  double loose_tol = 1e-6;
  double shift = 0.0;     // must lie below the spectrum
  std::uint64_t seed = 12345;
};

struct LanczosResult {
  std::vector<double> values;   // ascending
  Eigen::MatrixXcd vectors;     // unit columns
  std::vector<double> residuals;  // ||H v - lambda v||
  double shift = 0;
  int restarts = 0;
  int solves = 0;
};

namespace detail {

inline Eigen::VectorXcd start_vector(Eigen::Index n, std::uint64_t seed) {
  // raw engine output only, so the vector is the same on every platform
  std::mt19937_64 rng(seed);
  Eigen::VectorXcd v(n);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  for (Eigen::Index i = 0; i < n; ++i) {
    double re = unit();
    v[i] = cplx(1.0 + re, unit());
  }
  return v.normalized();
}

// Classical Gram-Schmidt applied twice; returns the projection coefficients.
inline Eigen::VectorXcd orthogonalize(const Eigen::MatrixXcd& V, int m, Eigen::VectorXcd& w) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(m);
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXcd d = V.leftCols(m).adjoint() * w;
    w.noalias() -= V.leftCols(m) * d;
    c += d;
  }
  return c;
}

}  // namespace detail

// Smallest eigenpairs of a Hermitian positive matrix by shift-invert Lanczos
// with full reorthogonalization and thick restarts. The factorization of
// H - shift*I doubles as the positivity check for the shift.
inline LanczosResult lowest_eigs(const SpMat& H, const LanczosOptions& opt = {}) {
  const Eigen::Index n = H.rows();
  if (opt.k < 1 || opt.k >= n) throw InvalidInput("lowest_eigs: k out of range");
  const int m = std::min<int>(opt.max_basis, static_cast<int>(n));
  if (m < opt.k + 2) throw InvalidInput("lowest_eigs: basis too small for k");

  SpMat A = H;
  if (opt.shift != 0) {
    SpMat I(n, n);
    I.setIdentity();
    A -= opt.shift * I;
  }
  Eigen::CholmodSupernodalLLT<SpMat> llt;
  llt.cholmod().print = 0;  // a failed factorization is reported by the exception below
  llt.compute(A);
  if (llt.info() != Eigen::Success) throw NotConverged("factorization failed: shift is not below the spectrum");

  LanczosResult out;
  out.shift = opt.shift;
  Eigen::MatrixXcd V(n, m + 1);
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  V.col(0) = detail::start_vector(n, opt.seed);
  int kept = 0;  // locked-in Ritz vectors at the start of the current cycle
  int keep = std::min(m - 1, std::max(opt.k + 4, m / 2));
  Eigen::VectorXd last_theta;

  for (int cycle = 0; cycle <= opt.max_restarts; ++cycle) {
    double resid_norm = 0;
    for (int j = kept; j < m; ++j) {
      Eigen::VectorXcd w = llt.solve(V.col(j));
      ++out.solves;
      Eigen::VectorXcd c = detail::orthogonalize(V, j + 1, w);
      for (int i = 0; i <= j; ++i) {
        T(i, j) = c[i];
        T(j, i) = std::conj(c[i]);
      }
      T(j, j) = c[j].real();
      resid_norm = w.norm();
      if (resid_norm < 1e-300) throw NotConverged("Lanczos breakdown (invariant subspace)");
      V.col(j + 1) = w / resid_norm;
      T(j + 1, j) = resid_norm;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T.topLeftCorner(m, m));
    // largest Ritz values of the inverse are the smallest eigenvalues of H
    Eigen::VectorXd theta = es.eigenvalues().reverse();
    Eigen::MatrixXcd Y = es.eigenvectors().rowwise().reverse();
    bool done = true, settled = last_theta.size() == theta.size();
    for (int i = 0; i < opt.k; ++i) {
      double r = resid_norm * std::abs(Y(m - 1, i));
      if (r > opt.tol * std::abs(theta[i])) done = false;
      if (r > opt.loose_tol * std::abs(theta[i]) ||
          (settled && std::abs(theta[i] - last_theta[i]) > opt.stall_tol * std::abs(theta[i])))
        settled = false;
    }
    done = done || settled;
    last_theta = theta;
    if (done || cycle == opt.max_restarts) {
      if (!done) throw NotConverged("Lanczos did not converge within the restart budget");
      out.restarts = cycle;
      out.vectors = V.leftCols(m) * Y.leftCols(opt.k);
      for (int i = 0; i < opt.k; ++i) {
        out.vectors.col(i).normalize();
        Eigen::VectorXcd v = out.vectors.col(i);
        double lam = (v.adjoint() * (H * v))(0).real();
        out.values.push_back(lam);
        out.residuals.push_back((H * v - lam * v).norm());
      }
      return out;
    }
    // thick restart: keep the best Ritz vectors plus the residual direction
    Eigen::MatrixXcd keepV = V.leftCols(m) * Y.leftCols(keep);
    Eigen::VectorXcd next = V.col(m);
    T.setZero();
    for (int i = 0; i < keep; ++i) {
      V.col(i) = keepV.col(i);
      T(i, i) = theta[i];
      cplx coupling = resid_norm * Y(m - 1, i);
      T(keep, i) = coupling;
      T(i, keep) = std::conj(coupling);
    }
    V.col(keep) = next;
    kept = keep;
    // the coupling column of `next` is recomputed by the next expansion step;
    // the entries stored above are overwritten with identical values
  }
  throw NotConverged("Lanczos did not converge");
}

// Lower the shift until the factorization succeeds.
inline LanczosResult lowest_eigs_auto(const SpMat& H, LanczosOptions opt, double floor = 0.0) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return lowest_eigs(H, opt);
    } catch (const NotConverged& e) {
      if (std::string(e.what()).find("factorization") == std::string::npos) throw;
      if (opt.shift <= floor) throw;
      opt.shift = std::max(floor, opt.shift - std::max(0.05, 0.5 * std::abs(opt.shift)));
    }
  }
  throw NotConverged("no admissible shift found");
}

}  // namespace magstep
