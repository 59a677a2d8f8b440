#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "era/numerics.hpp"

namespace era {

inline constexpr std::size_t kNumQuadrants = 4;

// Non-negative per-class evidence.
struct Evidence {
  std::vector<double> e;

  explicit Evidence(std::vector<double> ev) : e(std::move(ev)) {
    if (e.empty()) throw std::invalid_argument("Evidence: empty vector");
    for (double v : e)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("Evidence: entries must be finite and >= 0");
  }

  std::size_t size() const { return e.size(); }
};

// Subjective Logic opinion over K classes: alpha_k = e_k + 1, S = sum alpha,
// b_k = e_k / S, u = K / S. All derived fields are computed eagerly so the
// conservation constraint sum(b) + u = 1 holds at construction.
struct DirichletOpinion {
  std::vector<double> alpha;
  std::vector<double> belief;
  double uncertainty = 1.0;
  double strength = 0.0;

  std::size_t size() const { return alpha.size(); }
};

struct PredictiveDistribution {
  std::vector<double> p;  // Dirichlet mean, p_k = alpha_k / S
};

inline DirichletOpinion opinion_from_evidence(const Evidence& ev) {
  const std::size_t k = ev.size();
  DirichletOpinion op;
  op.alpha.resize(k);
  op.belief.resize(k);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    op.alpha[i] = ev.e[i] + 1.0;
    s += op.alpha[i];
  }
  op.strength = s;
  for (std::size_t i = 0; i < k; ++i) op.belief[i] = ev.e[i] / s;
  op.uncertainty = static_cast<double>(k) / s;
  return op;
}

inline PredictiveDistribution predictive_mean(const DirichletOpinion& op) {
  PredictiveDistribution dist;
  dist.p.resize(op.size());
  for (std::size_t i = 0; i < op.size(); ++i) dist.p[i] = op.alpha[i] / op.strength;
  return dist;
}

inline Evidence evidence_from_logits(std::span<const double> z) {
  std::vector<double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) e[i] = softplus(z[i]);
  return Evidence(std::move(e));
}

}  // namespace era
