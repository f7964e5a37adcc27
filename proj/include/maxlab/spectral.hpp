#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "maxlab/assembly.hpp"
#include "maxlab/errors.hpp"

namespace maxlab {

/// Full spectrum of a pencil: ascending eigenvalues with B-orthonormal
/// eigenvectors, plus the kernel classification once split_kernel ran.
/// Near-coincident eigenvalues stay in index order; multiplicities are not
/// collapsed.
struct SpectralResult {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors; // columns, v^T B v = 1
  std::string label;
  double kernel_tolerance = 0;
  int kernel_dim = 0;

  int n() const { return static_cast<int>(eigenvalues.size()); }
};

/// Outcome of the kernel/nonzero split under the tolerance policy.
struct KernelSplit {
  int detected = 0;
  int expected = 0;
  double smallest_nonzero = 0;
  double tolerance = 0;

  bool matches() const { return detected == expected; }
  int surplus() const { return detected - expected; }
};

namespace detail {

// Plain Cholesky, used only to locate the failing pivot after Eigen's LLT
// reports a non-positive-definite mass matrix.
inline int cholesky_failure_index(Eigen::MatrixXd m) {
  const int n = static_cast<int>(m.rows());
  for (int k = 0; k < n; ++k) {
    if (!(m(k, k) > 0)) return k;
    m(k, k) = std::sqrt(m(k, k));
    for (int i = k + 1; i < n; ++i) m(i, k) /= m(k, k);
    for (int j = k + 1; j < n; ++j)
      for (int i = j; i < n; ++i) m(i, j) -= m(i, k) * m(j, k);
  }
  return -1;
}

} // namespace detail

/// Solves the dense symmetric generalized problem A v = lambda B v by
/// Cholesky reduction of B and a symmetric QR eigensolver. Returns the full
/// ascending spectrum with B-orthonormal eigenvectors and verifies the
/// residual ||A v - lambda B v|| <= 1e-9 max(1, |lambda|) ||B v|| per pair.
inline SpectralResult eig_gsym(const Pencil& pencil) {
  const char* op = "eig_gsym";
  const int n = pencil.n();
  if (n == 0) throw ComputationError("spectral", op, "empty pencil '" + pencil.label + "'");
  Eigen::MatrixXd a = pencil.A.dense();
  Eigen::MatrixXd b = pencil.B.dense();

  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) {
    int idx = detail::cholesky_failure_index(b);
    throw ComputationError("spectral", op,
                           "mass matrix of '" + pencil.label +
                               "' is not positive definite (Cholesky failed at dof " +
                               std::to_string(idx) + ")");
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw ComputationError("spectral", op, "eigensolver failed on '" + pencil.label + "'");

  SpectralResult r;
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  r.label = pencil.label;

  // Enforce v^T B v = 1 exactly-ish and check residuals.
  Eigen::MatrixXd bv = b * r.eigenvectors;
  for (int k = 0; k < n; ++k) {
    double bnorm = std::sqrt(r.eigenvectors.col(k).dot(bv.col(k)));
    if (!(bnorm > 0))
      throw ComputationError("spectral", op, "eigenvector " + std::to_string(k) + " has zero B-norm");
    r.eigenvectors.col(k) /= bnorm;
    bv.col(k) /= bnorm;
  }
  Eigen::MatrixXd av = a * r.eigenvectors;
  for (int k = 0; k < n; ++k) {
    double lambda = r.eigenvalues[k];
    double resid = (av.col(k) - lambda * bv.col(k)).norm();
    double scale = std::max(1.0, std::abs(lambda)) * bv.col(k).norm();
    if (resid > 1e-9 * scale)
      throw ComputationError("spectral", op,
                             "residual " + std::to_string(resid) + " too large for pair " +
                                 std::to_string(k) + " of '" + pencil.label + "'");
  }
  return r;
}

/// Classifies eigenvalues below max(1e-8 * median, 1e-10) as kernel and
/// returns the first retained eigenvalue. The detected count is compared
/// against the caller's expectation (mismatches are reported, not thrown:
/// a surplus is how harmonic fields are found). A factor-100 spectral gap
/// between the largest kernel eigenvalue and the smallest retained one is
/// mandatory; its absence signals an under-refined mesh or a wrong
/// expectation and raises an error instead of a silent misclassification.
inline KernelSplit split_kernel(SpectralResult& result, int expected_kernel_dim) {
  const char* op = "split_kernel";
  const auto& ev = result.eigenvalues;
  const int n = result.n();
  if (n == 0) throw ComputationError("spectral", op, "empty spectrum");

  // Eigenvalues are ascending, so the median is a direct lookup.
  double median = ev[n / 2];
  double tol = std::max(1e-8 * median, 1e-10);

  int detected = 0;
  while (detected < n && ev[detected] < tol) ++detected;
  if (detected == n)
    throw ComputationError("spectral", op, "entire spectrum of '" + result.label +
                                               "' lies below the kernel tolerance");

  if (detected > 0) {
    double largest_kernel = std::abs(ev[detected - 1]);
    double smallest_kept = ev[detected];
    if (!(smallest_kept >= 100.0 * largest_kernel))
      throw ComputationError(
          "spectral", op,
          "no factor-100 spectral gap in '" + result.label + "': largest kernel eigenvalue " +
              std::to_string(largest_kernel) + " vs smallest retained " +
              std::to_string(smallest_kept) + " (under-refined mesh or wrong kernel expectation)");
  }

  result.kernel_tolerance = tol;
  result.kernel_dim = detected;

  KernelSplit s;
  s.detected = detected;
  s.expected = expected_kernel_dim;
  s.smallest_nonzero = ev[detected];
  s.tolerance = tol;
  return s;
}

/// Result of an h^2 Richardson limit; the observed order is only available
/// with three or more levels and a monotone difference pattern.
struct Extrapolation {
  double value = 0;
  double observed_order = std::numeric_limits<double>::quiet_NaN();

  bool has_order() const { return std::isfinite(observed_order); }
};

/// Eliminates the leading h^2 error term from the two finest levels of
/// (h, value) samples; h must be positive and strictly decreasing but need
/// not halve. With >= 3 levels the observed convergence order is estimated
/// from the three finest samples by solving
///   (v1-v2)/(v2-v3) = (h1^p - h2^p)/(h2^p - h3^p)
/// for p (bisection; the right-hand side is increasing in p).
inline Extrapolation richardson_extrapolate(const std::vector<std::pair<double, double>>& samples) {
  const char* op = "richardson_extrapolate";
  if (samples.size() < 2)
    throw ComputationError("spectral", op, "need at least two levels");
  for (std::size_t i = 0; i + 1 < samples.size(); ++i)
    if (!(samples[i].first > samples[i + 1].first && samples[i + 1].first > 0))
      throw ComputationError("spectral", op, "mesh sizes must be positive and strictly decreasing");

  const auto [hc, vc] = samples[samples.size() - 2];
  const auto [hf, vf] = samples[samples.size() - 1];
  Extrapolation ex;
  ex.value = (vf * hc * hc - vc * hf * hf) / (hc * hc - hf * hf);

  if (samples.size() >= 3) {
    const auto [h1, v1] = samples[samples.size() - 3];
    const double d12 = v1 - vc, d23 = vc - vf;
    if (d12 * d23 > 0) {
      const double target = d12 / d23;
      auto rhs = [&](double p) {
        return (std::pow(h1, p) - std::pow(hc, p)) / (std::pow(hc, p) - std::pow(hf, p));
      };
      double lo = 0.05, hi = 10.0;
      if (rhs(lo) < target && target < rhs(hi)) {
        for (int it = 0; it < 200; ++it) {
          double mid = 0.5 * (lo + hi);
          (rhs(mid) < target ? lo : hi) = mid;
        }
        ex.observed_order = 0.5 * (lo + hi);
      }
    }
  }
  return ex;
}

} // namespace maxlab
