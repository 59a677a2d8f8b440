#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "era/edl_loss.hpp"
#include "era/scenario.hpp"

namespace era {

enum class Variant { full, no_dual, learnable_w, ce_only, no_kl };

Variant variant_from_name(const std::string& name);
std::string variant_name(Variant v);

struct ModelConfig {
  int input_dim = 24;  // d_query + d_context
  int hidden_dim = 64;
  int vocab_size = 16;

  void validate() const;
};

// Toy dual-path network: shared 2-layer tanh trunk, two evidential heads
// (4 logits each) and a policy head (V logits). Parameters live in one flat
// vector so the optimizer and the finite-difference oracle see the same view.
//
// Layout: W1 [H x d], b1 [H], W2 [H x H], b2 [H], Wr [4 x H], br [4],
// Wp [4 x H], bp [4], Wv [V x H], bv [V], (+ gate scalar for learnable_w).
struct ModelParams {
  ModelConfig config;
  Variant variant = Variant::full;
  std::vector<double> theta;

  static ModelParams init(const ModelConfig& config, Variant variant, std::uint64_t seed);
  std::size_t size() const { return theta.size(); }

  // Offsets into theta.
  std::size_t off_w1() const { return 0; }
  std::size_t off_b1() const;
  std::size_t off_w2() const;
  std::size_t off_b2() const;
  std::size_t off_wr() const;
  std::size_t off_br() const;
  std::size_t off_wp() const;
  std::size_t off_bp() const;
  std::size_t off_wv() const;
  std::size_t off_bv() const;
  std::size_t off_gate() const;  // learnable_w only
  std::size_t param_count() const;
};

struct PolicyOutput {
  std::vector<double> logits_policy;
  std::vector<double> z_rag, z_param;          // evidential logits
  std::vector<double> alpha_rag, alpha_param;  // softplus(z) + 1
  std::vector<double> h1_rag, h2_rag, h1_param, h2_param;
};

PolicyOutput forward(const ModelParams& params, std::span<const double> x_rag,
                     std::span<const double> x_param);

struct DpoConfig {
  double tau = 1.0;
  double gamma = 1.0;
  double sft_coeff = 1.0;
  double lambda_rag = 0.1;
  double lambda_param = 0.1;
};

double loss_dpo(const ModelParams& policy, const ModelParams& ref,
                const PreferenceSample& sample, double tau);

double loss_sft(const ModelParams& policy, const PreferenceSample& sample);

struct TotalLossValue {
  double total = 0.0;
  double dpo = 0.0;
  double sft = 0.0;
  double edl = 0.0;
  double kappa = 0.0;  // NaN when the variant defines no conflict score
  double w_ds = 1.0;
  std::vector<double> grad;
};

// Unified objective w_ds * L_DPO + L_EDL-Total + sft_coeff * L_SFT with the
// exact gradient over all parameters. w_ds comes from the current forward
// pass and is treated as a stop-gradient coefficient. include_dpo=false gives
// the SFT-warmup objective used before the reference snapshot. w_ds_override
// pins the DPO weight, which is how the finite-difference oracle evaluates
// the objective at the stop-gradient value of w_ds.
TotalLossValue loss_total(const ModelParams& policy, const ModelParams& ref,
                          const PreferenceSample& sample, const AnnealSchedule& schedule,
                          const DpoConfig& config, bool include_dpo = true,
                          const double* w_ds_override = nullptr);

}  // namespace era
