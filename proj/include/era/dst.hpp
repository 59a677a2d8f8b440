#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>

#include "era/opinion.hpp"

namespace era {

// Fixed quadrant ordering, serialized into every dataset/checkpoint header.
enum class Quadrant : int { KG = 0, KN = 1, UG = 2, UN = 3 };

inline constexpr std::array<std::string_view, 4> kQuadrantNames = {"KG", "KN", "UG", "UN"};

inline std::string_view quadrant_name(Quadrant q) {
  return kQuadrantNames[static_cast<int>(q)];
}

inline Quadrant quadrant_from_name(std::string_view name) {
  for (int i = 0; i < 4; ++i)
    if (kQuadrantNames[i] == name) return static_cast<Quadrant>(i);
  throw std::invalid_argument("unknown quadrant name");
}

// Binary-frame mass assignment: Supported {KG, UG}, Unsupported {KN, UN},
// Omega carries the global uncertainty unchanged.
struct BinaryMass {
  double supported = 0.0;
  double unsupported = 0.0;
  double omega = 1.0;

  void validate() const {
    auto in01 = [](double v) { return v >= -1e-12 && v <= 1.0 + 1e-12; };
    if (!in01(supported) || !in01(unsupported) || !in01(omega) ||
        std::abs(supported + unsupported + omega - 1.0) > 1e-9)
      throw std::invalid_argument("BinaryMass: masses must lie in [0,1] and sum to 1");
  }
};

struct ConflictReport {
  double kappa = 0.0;
  double w_ds = 1.0;
  double gamma = 1.0;
};

inline BinaryMass reduce_to_binary(const DirichletOpinion& op) {
  if (op.size() != kNumQuadrants)
    throw std::invalid_argument("reduce_to_binary: expected a 4-quadrant opinion");
  BinaryMass m;
  m.supported = op.belief[static_cast<int>(Quadrant::KG)] +
                op.belief[static_cast<int>(Quadrant::UG)];
  m.unsupported = op.belief[static_cast<int>(Quadrant::KN)] +
                  op.belief[static_cast<int>(Quadrant::UN)];
  m.omega = op.uncertainty;
  return m;
}

// Dempster conflict mass: product mass on pairs of hypotheses with empty
// intersection. Only S x U and U x S conflict; Omega intersects everything.
inline double conflict_kappa(const BinaryMass& m_param, const BinaryMass& m_rag) {
  m_param.validate();
  m_rag.validate();
  return m_param.supported * m_rag.unsupported + m_param.unsupported * m_rag.supported;
}

inline double conflict_weight(double kappa, double m_rag_omega, double gamma) {
  if (!(kappa >= 0.0 && kappa <= 1.0))
    throw std::invalid_argument("conflict_weight: kappa out of [0,1]");
  if (!(m_rag_omega >= 0.0 && m_rag_omega <= 1.0))
    throw std::invalid_argument("conflict_weight: m_rag_omega out of [0,1]");
  if (!(gamma >= 0.0)) throw std::invalid_argument("conflict_weight: gamma must be >= 0");
  // (1 - m^rag(Omega)) is the reliability gate
  return 1.0 + gamma * kappa * (1.0 - m_rag_omega);
}

}  // namespace era
