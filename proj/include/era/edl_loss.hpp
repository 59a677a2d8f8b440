#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "era/numerics.hpp"

namespace era {

// Linear KL annealing: lambda_t = min(1, t / t_anneal).
struct AnnealSchedule {
  long t = 0;
  long t_anneal = 2000;

  double lambda() const {
    if (t_anneal <= 0) return 1.0;
    return std::min(1.0, static_cast<double>(t) / static_cast<double>(t_anneal));
  }
};

struct EdlLossValue {
  double fit = 0.0;
  double kl = 0.0;
  double total = 0.0;
  std::vector<double> grad_alpha;
};

namespace detail {

inline void check_alpha(std::span<const double> alpha) {
  if (alpha.empty()) throw std::invalid_argument("edl: empty alpha");
  for (double a : alpha)
    if (!(a >= 1.0) || !std::isfinite(a))
      throw std::invalid_argument("edl: alpha entries must be finite and >= 1");
}

inline std::size_t check_onehot(std::span<const double> y) {
  std::size_t target = y.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0 && target == y.size())
      target = i;
    else if (y[i] != 0.0)
      target = y.size() + 1;
  }
  if (target >= y.size()) throw std::invalid_argument("edl: y must be one-hot");
  return target;
}

}  // namespace detail

// Bayes-risk data fit: sum_k y_k (psi(S) - psi(alpha_k)).
inline double loss_fit(std::span<const double> alpha, std::span<const double> y) {
  detail::check_alpha(alpha);
  const std::size_t target = detail::check_onehot(y);
  double s = 0.0;
  for (double a : alpha) s += a;
  return digamma(s) - digamma(alpha[target]);
}

// KL[Dir(alpha_tilde) || Dir(1)], the uniform-prior regularizer.
inline double loss_kl_to_uniform(std::span<const double> alpha_tilde) {
  detail::check_alpha(alpha_tilde);
  const std::size_t k = alpha_tilde.size();
  double s = 0.0;
  for (double a : alpha_tilde) s += a;
  double v = log_gamma(s) - log_gamma(static_cast<double>(k));
  const double psi_s = digamma(s);
  for (double a : alpha_tilde) v += -log_gamma(a) + (a - 1.0) * (digamma(a) - psi_s);
  return std::max(0.0, v);
}

// alpha_tilde = y + (1 - y) .* alpha: target coordinate pinned to 1 so the KL
// term only penalizes misleading (non-target) evidence.
inline std::vector<double> adjusted_alpha(std::span<const double> alpha,
                                          std::span<const double> y) {
  detail::check_alpha(alpha);
  const std::size_t target = detail::check_onehot(y);
  std::vector<double> out(alpha.begin(), alpha.end());
  out[target] = 1.0;
  return out;
}

// Full evidential loss with analytic gradient w.r.t. alpha.
inline EdlLossValue loss_edl(std::span<const double> alpha, std::span<const double> y,
                             const AnnealSchedule& schedule) {
  detail::check_alpha(alpha);
  const std::size_t target = detail::check_onehot(y);
  const std::size_t k = alpha.size();
  const double lambda = schedule.lambda();

  EdlLossValue out;
  out.fit = loss_fit(alpha, y);
  const std::vector<double> at = adjusted_alpha(alpha, y);
  out.kl = loss_kl_to_uniform(at);
  out.total = out.fit + lambda * out.kl;

  double s = 0.0, st = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    s += alpha[i];
    st += at[i];
  }
  const double tri_s = trigamma(s);
  const double tri_st = trigamma(st);

  out.grad_alpha.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    // d L_fit / d alpha_i = psi'(S) - y_i psi'(alpha_i)
    double g = tri_s;
    if (i == target) g -= trigamma(alpha[i]);
    // d KL / d alpha_tilde_i = (at_i - 1) psi'(at_i) - (St - K) psi'(St);
    // chain through alpha_tilde: d at_i / d alpha_i = 1 - y_i
    if (i != target) {
      const double dkl = (at[i] - 1.0) * trigamma(at[i]) -
                         (st - static_cast<double>(k)) * tri_st;
      g += lambda * dkl;
    }
    out.grad_alpha[i] = g;
  }
  return out;
}

// Dual-head total: lambda_rag * L_EDL(alpha_rag) + lambda_param * L_EDL(alpha_param).
inline double loss_edl_total(std::span<const double> alpha_rag,
                             std::span<const double> alpha_param,
                             std::span<const double> y, const AnnealSchedule& schedule,
                             double lambda_rag = 0.1, double lambda_param = 0.1) {
  return lambda_rag * loss_edl(alpha_rag, y, schedule).total +
         lambda_param * loss_edl(alpha_param, y, schedule).total;
}

}  // namespace era
