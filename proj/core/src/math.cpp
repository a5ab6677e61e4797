#include "hpi/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpi/errors.hpp"

namespace hpi {

double log_sum_exp(const std::vector<double>& logs) {
  if (logs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - m);
  return m + std::log(s);
}

int sample_from_log_weights(const std::vector<double>& log_weights, Rng& rng) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse))
    throw NumericError("sample_from_log_weights: all weights are -inf");
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    acc += std::exp(log_weights[k] - lse);
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(log_weights.size()) - 1;
}

void symmetrize(Eigen::MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& s, int time_step) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() == Eigen::Success) return llt;
  Eigen::MatrixXd jittered = s;
  const double jitter = 1e-10 * s.trace();
  jittered.diagonal().array() += (jitter > 0.0 ? jitter : 1e-300);
  llt.compute(jittered);
  if (llt.info() != Eigen::Success)
    throw NumericError("Cholesky failed after jitter retry", time_step);
  return llt;
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov, int time_step) {
  const auto n = x.size();
  if (mean.size() != n || cov.rows() != n || cov.cols() != n)
    throw DimensionError("mvn_logpdf: shape mismatch");
  if (!x.allFinite() || !mean.allFinite() || !cov.allFinite())
    throw NumericError("mvn_logpdf: non-finite input", time_step);
  const auto llt = robust_llt(cov, time_step);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  const Eigen::VectorXd e = x - mean;
  const double quad = e.dot(llt.solve(e));
  return -0.5 * (n * kLog2Pi + log_det + quad);
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           Rng& rng) {
  const auto n = mean.size();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success)
    return mean + llt.matrixL() * z;
  // PSD fallback: eigendecompose and clamp tiny negative eigenvalues.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw NumericError("mvn_sample: eigendecomposition failed");
  Eigen::VectorXd sqrt_ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * sqrt_ev.asDiagonal() * z;
}

double log_factorial(int n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace hpi
