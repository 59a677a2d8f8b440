#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace era {

// Special functions and numeric utilities shared by every loss and analysis.
// 64-bit floats throughout; inputs are validated and NaN is never silently
// propagated.

namespace detail {

// Asymptotic tails use Bernoulli-number series; the recurrence below shifts
// the argument into the region where truncation error is < 1e-12.
inline constexpr double kDigammaShift = 6.0;
inline constexpr double kLogGammaShift = 10.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

}  // namespace detail

inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("digamma: requires finite x > 0");
  double result = 0.0;
  // psi(x) = psi(x+1) - 1/x until the asymptotic series applies
  while (x < detail::kDigammaShift) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n)
  double series = inv2 * (1.0 / 12.0 +
                  inv2 * (-1.0 / 120.0 +
                  inv2 * (1.0 / 252.0 +
                  inv2 * (-1.0 / 240.0 +
                  inv2 * (1.0 / 132.0 +
                  inv2 * (-691.0 / 32760.0 +
                  inv2 * (1.0 / 12.0)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

inline double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("trigamma: requires finite x > 0");
  double result = 0.0;
  // psi'(x) = psi'(x+1) + 1/x^2
  while (x < detail::kDigammaShift) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 1.0 +
                  inv * 0.5 +
                  inv2 * (1.0 / 6.0 +
                  inv2 * (-1.0 / 30.0 +
                  inv2 * (1.0 / 42.0 +
                  inv2 * (-1.0 / 30.0 +
                  inv2 * (5.0 / 66.0 +
                  inv2 * (-691.0 / 2730.0 +
                  inv2 * (7.0 / 6.0)))))));
  return result + inv * series;
}

inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("log_gamma: requires finite x > 0");
  double result = 0.0;
  // lgamma(x) = lgamma(x+1) - ln x
  while (x < detail::kLogGammaShift) {
    result -= std::log(x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling: (x - 1/2) ln x - x + ln(2 pi)/2 + sum B_2n / (2n(2n-1) x^(2n-1))
  double series = inv * (1.0 / 12.0 +
                  inv2 * (-1.0 / 360.0 +
                  inv2 * (1.0 / 1260.0 +
                  inv2 * (-1.0 / 1680.0 +
                  inv2 * (1.0 / 1188.0)))));
  return result + (x - 0.5) * std::log(x) - x + detail::kHalfLog2Pi + series;
}

inline double softplus(double x) {
  if (!std::isfinite(x)) throw std::domain_error("softplus: requires finite x");
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log sigma(x), overflow-safe
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax: empty input");
  double m = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::domain_error("log_softmax: non-finite logit");
    m = std::max(m, v);
  }
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

// Jensen-Shannon divergence in natural log, range [0, ln 2].
inline double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw std::invalid_argument("js_divergence: dimension mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0 || !std::isfinite(p[i]) || !std::isfinite(q[i]))
      throw std::invalid_argument("js_divergence: entries must be non-negative and finite");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw std::invalid_argument("js_divergence: inputs must sum to 1");
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
  double jsd = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    jsd += 0.5 * xlogx(p[i]) + 0.5 * xlogx(q[i]) - xlogx(m);
  }
  return std::max(0.0, jsd);
}

// Central-difference gradient oracle used by the grad-check suites.
inline std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double h = 1e-5) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double fp = f(theta);
    theta[i] = orig - h;
    const double fm = f(theta);
    theta[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error("finite_diff_grad: non-finite evaluation");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace era
