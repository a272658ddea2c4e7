// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "gagnar/errors.hpp"
#include "gagnar/rng.hpp"

namespace gagnar {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Max-shifted log(sum(exp(x))). Entries equal to -inf contribute zero mass.
inline double log_sum_exp(const Eigen::VectorXd& x) {
  if (x.size() == 0) return kNegInf;
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) s += std::exp(x[k] - mx);
  return mx + std::log(s);
}

/// Normalize log weights into a probability vector (max-shift).
inline Eigen::VectorXd softmax_log(const Eigen::VectorXd& logw) {
  const double lse = log_sum_exp(logw);
  if (!std::isfinite(lse)) throw NumericalError("softmax_log: no finite log weight");
  Eigen::VectorXd p(logw.size());
  for (Eigen::Index k = 0; k < logw.size(); ++k) p[k] = std::exp(logw[k] - lse);
  return p;
}

/// Draw an index from a normalized probability vector.
inline int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  int last = 0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    cum += probs[k];
    last = static_cast<int>(k);
    if (u < cum) return last;
  }
  return last;  // u landed in the rounding gap past the final positive entry
}

/// Cholesky of an SPD matrix, escalating a diagonal jitter from 1e-10 to
/// 1e-6 (relative to the mean diagonal) before giving up.
inline Eigen::LLT<Eigen::MatrixXd> cholesky_spd(const Eigen::MatrixXd& a,
                                                const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().mean());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (double jitter = 1e-10; jitter <= 1.0000001e-6; jitter *= 100.0) {
    llt.compute(a + jitter * scale * eye);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError(what + ": matrix is not positive definite after jitter escalation");
}

/// log determinant from a Cholesky factor.
inline double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace gagnar
