#include "era/gradcheck.hpp"

#include <cmath>
#include <span>

#include "era/edl_loss.hpp"
#include "era/model.hpp"
#include "era/numerics.hpp"
#include "era/rng.hpp"

namespace era {

namespace {

double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

double max_rel_err(std::span<const double> analytic, const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i)
    worst = std::max(worst, rel_err(analytic[i], numeric[i]));
  return worst;
}

std::vector<double> random_alpha(Rng& rng) {
  std::vector<double> alpha(4);
  for (double& a : alpha) a = 1.0 + 8.0 * rng.uniform();
  return alpha;
}

std::vector<double> random_onehot(Rng& rng) {
  std::vector<double> y(4, 0.0);
  y[rng.below(4)] = 1.0;
  return y;
}

// Analytic gradient of L_fit alone.
std::vector<double> grad_fit(std::span<const double> alpha, std::span<const double> y) {
  double s = 0.0;
  for (double a : alpha) s += a;
  std::vector<double> g(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    g[i] = trigamma(s);
    if (y[i] == 1.0) g[i] -= trigamma(alpha[i]);
  }
  return g;
}

// Analytic gradient of L_KL(adjusted_alpha(alpha, y)) w.r.t. alpha.
std::vector<double> grad_kl(std::span<const double> alpha, std::span<const double> y) {
  const auto at = adjusted_alpha(alpha, y);
  double st = 0.0;
  for (double a : at) st += a;
  const double k = static_cast<double>(alpha.size());
  std::vector<double> g(alpha.size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (y[i] != 1.0)
      g[i] = (at[i] - 1.0) * trigamma(at[i]) - (st - k) * trigamma(st);
  return g;
}

PreferenceSample random_micro_sample(const ModelConfig& cfg, Rng& rng) {
  PreferenceSample s;
  s.x_rag.resize(cfg.input_dim);
  s.x_param.resize(cfg.input_dim);
  for (int i = 0; i < cfg.input_dim; ++i) {
    s.x_rag[i] = rng.normal();
    s.x_param[i] = (i < cfg.input_dim / 2) ? s.x_rag[i] : 0.0;
  }
  s.quadrant = static_cast<Quadrant>(rng.below(4));
  s.chosen_token = static_cast<int>(rng.below(cfg.vocab_size));
  do {
    s.rejected_token = static_cast<int>(rng.below(cfg.vocab_size));
  } while (s.rejected_token == s.chosen_token);
  s.gold_token = s.chosen_token;
  return s;
}

}  // namespace

GradCheckReport run_gradient_checks(int configs_per_loss, std::uint64_t seed) {
  GradCheckReport report;
  Rng rng(derive_seed(seed, "gradcheck"));
  const double h = 1e-5;

  auto add = [&report](std::string name, double worst, int n) {
    report.entries.push_back(GradCheckEntry{std::move(name), worst, 1e-4, n, worst <= 1e-4});
  };

  // L_fit
  {
    double worst = 0.0;
    for (int c = 0; c < configs_per_loss; ++c) {
      const auto alpha = random_alpha(rng);
      const auto y = random_onehot(rng);
      const auto fd = finite_diff_grad(
          [&](const std::vector<double>& a) { return loss_fit(a, y); }, alpha, h);
      worst = std::max(worst, max_rel_err(grad_fit(alpha, y), fd));
    }
    add("loss_fit", worst, configs_per_loss);
  }

  // L_KL composed with the alpha adjustment
  {
    double worst = 0.0;
    for (int c = 0; c < configs_per_loss; ++c) {
      const auto alpha = random_alpha(rng);
      const auto y = random_onehot(rng);
      const auto fd = finite_diff_grad(
          [&](const std::vector<double>& a) {
            return loss_kl_to_uniform(adjusted_alpha(a, y));
          },
          alpha, h);
      worst = std::max(worst, max_rel_err(grad_kl(alpha, y), fd));
    }
    add("loss_kl", worst, configs_per_loss);
  }

  // L_EDL at a random annealing point
  {
    double worst = 0.0;
    for (int c = 0; c < configs_per_loss; ++c) {
      const auto alpha = random_alpha(rng);
      const auto y = random_onehot(rng);
      const AnnealSchedule sched{static_cast<long>(rng.below(3000)), 2000};
      const auto analytic = loss_edl(alpha, y, sched);
      const auto fd = finite_diff_grad(
          [&](const std::vector<double>& a) { return loss_edl(a, y, sched).total; }, alpha,
          h);
      worst = std::max(worst, max_rel_err(analytic.grad_alpha, fd));
    }
    add("loss_edl", worst, configs_per_loss);
  }

  // Micro-model for the network losses: 6 inputs, 8 hidden, 4 tokens.
  const ModelConfig micro{6, 8, 4};
  const AnnealSchedule sched{500, 2000};
  DpoConfig dcfg;

  auto network_suite = [&](const std::string& name, Variant variant, bool include_dpo,
                           const DpoConfig& cfg, bool freeze_w) {
    double worst = 0.0;
    for (int c = 0; c < configs_per_loss; ++c) {
      ModelParams policy = ModelParams::init(micro, variant, rng.next_u64());
      const ModelParams ref = ModelParams::init(micro, variant, rng.next_u64());
      const PreferenceSample sample = random_micro_sample(micro, rng);
      const auto analytic = loss_total(policy, ref, sample, sched, cfg, include_dpo);
      const double w0 = analytic.w_ds;
      const double* w_ptr = freeze_w ? &w0 : nullptr;
      ModelParams probe = policy;
      const auto fd = finite_diff_grad(
          [&](const std::vector<double>& th) {
            probe.theta = th;
            return loss_total(probe, ref, sample, sched, cfg, include_dpo, w_ptr).total;
          },
          policy.theta, h);
      worst = std::max(worst, max_rel_err(analytic.grad, fd));
    }
    add(name, worst, configs_per_loss);
  };

  // L_DPO alone (unit weight), L_SFT alone, then the unified objective.
  DpoConfig dpo_only = dcfg;
  dpo_only.sft_coeff = 0.0;
  dpo_only.lambda_rag = 0.0;
  dpo_only.lambda_param = 0.0;
  network_suite("loss_dpo", Variant::full, true, dpo_only, true);

  DpoConfig sft_only = dcfg;
  sft_only.lambda_rag = 0.0;
  sft_only.lambda_param = 0.0;
  network_suite("loss_sft", Variant::full, false, sft_only, false);

  network_suite("loss_total/full", Variant::full, true, dcfg, true);
  network_suite("loss_total/no_dual", Variant::no_dual, true, dcfg, true);
  network_suite("loss_total/learnable_w", Variant::learnable_w, true, dcfg, false);
  network_suite("loss_total/ce_only", Variant::ce_only, true, dcfg, true);
  network_suite("loss_total/no_kl", Variant::no_kl, true, dcfg, true);

  return report;
}

bool gradcheck_detects_corruption(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "gradcheck.corrupt"));
  const auto alpha = random_alpha(rng);
  const auto y = random_onehot(rng);
  auto corrupted = grad_fit(alpha, y);
  corrupted[0] += 0.5;
  const auto fd = finite_diff_grad(
      [&](const std::vector<double>& a) { return loss_fit(a, y); }, alpha, 1e-5);
  return max_rel_err(corrupted, fd) > 1e-4;
}

}  // namespace era
