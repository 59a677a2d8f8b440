#include "era/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "era/dst.hpp"
#include "era/numerics.hpp"
#include "era/rng.hpp"

namespace era {

namespace {

constexpr int kHeadDim = 4;

// y = W x + b, W is rows x cols row-major
void affine(std::span<const double> theta, std::size_t w_off, std::size_t b_off, int rows,
            int cols, std::span<const double> x, std::vector<double>& y) {
  y.assign(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double acc = theta[b_off + r];
    const std::size_t row = w_off + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += theta[row + c] * x[c];
    y[r] = acc;
  }
}

// grad_W += g outer x, grad_b += g, gx += W^T g
void affine_backward(std::span<const double> theta, std::span<double> grad,
                     std::size_t w_off, std::size_t b_off, int rows, int cols,
                     std::span<const double> x, std::span<const double> g,
                     std::vector<double>* gx) {
  for (int r = 0; r < rows; ++r) {
    const std::size_t row = w_off + static_cast<std::size_t>(r) * cols;
    grad[b_off + r] += g[r];
    for (int c = 0; c < cols; ++c) {
      grad[row + c] += g[r] * x[c];
      if (gx) (*gx)[c] += theta[row + c] * g[r];
    }
  }
}

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

}  // namespace

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "no_dual") return Variant::no_dual;
  if (name == "learnable_w") return Variant::learnable_w;
  if (name == "ce_only") return Variant::ce_only;
  if (name == "no_kl") return Variant::no_kl;
  throw std::invalid_argument(
      "unknown variant '" + name + "' (valid: full, no_dual, learnable_w, ce_only, no_kl)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_dual: return "no_dual";
    case Variant::learnable_w: return "learnable_w";
    case Variant::ce_only: return "ce_only";
    case Variant::no_kl: return "no_kl";
  }
  throw std::invalid_argument("bad variant");
}

void ModelConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || vocab_size < 2)
    throw std::invalid_argument("ModelConfig: invalid dimensions");
}

std::size_t ModelParams::off_b1() const {
  return static_cast<std::size_t>(config.hidden_dim) * config.input_dim;
}
std::size_t ModelParams::off_w2() const { return off_b1() + config.hidden_dim; }
std::size_t ModelParams::off_b2() const {
  return off_w2() + static_cast<std::size_t>(config.hidden_dim) * config.hidden_dim;
}
std::size_t ModelParams::off_wr() const { return off_b2() + config.hidden_dim; }
std::size_t ModelParams::off_br() const {
  return off_wr() + static_cast<std::size_t>(kHeadDim) * config.hidden_dim;
}
std::size_t ModelParams::off_wp() const { return off_br() + kHeadDim; }
std::size_t ModelParams::off_bp() const {
  return off_wp() + static_cast<std::size_t>(kHeadDim) * config.hidden_dim;
}
std::size_t ModelParams::off_wv() const { return off_bp() + kHeadDim; }
std::size_t ModelParams::off_bv() const {
  return off_wv() + static_cast<std::size_t>(config.vocab_size) * config.hidden_dim;
}
std::size_t ModelParams::off_gate() const { return off_bv() + config.vocab_size; }
std::size_t ModelParams::param_count() const {
  return off_gate() + (variant == Variant::learnable_w ? 1 : 0);
}

ModelParams ModelParams::init(const ModelConfig& config, Variant variant,
                              std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.variant = variant;
  p.theta.assign(ModelParams{config, variant, {}}.param_count(), 0.0);

  Rng rng(derive_seed(seed, "model.init"));
  auto fill = [&](std::size_t off, std::size_t n, int fan_in) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) p.theta[off + i] = scale * rng.normal();
  };
  const int d = config.input_dim, h = config.hidden_dim, v = config.vocab_size;
  fill(p.off_w1(), static_cast<std::size_t>(h) * d, d);
  fill(p.off_w2(), static_cast<std::size_t>(h) * h, h);
  fill(p.off_wr(), static_cast<std::size_t>(kHeadDim) * h, h);
  fill(p.off_wp(), static_cast<std::size_t>(kHeadDim) * h, h);
  fill(p.off_wv(), static_cast<std::size_t>(v) * h, h);
  // biases start at zero; the gate weight 1 + softplus(gate) starts at 1 + ln 2,
  // mid-range of the conflict weight's [1, 1 + gamma] span
  if (variant == Variant::learnable_w) p.theta[p.off_gate()] = 0.0;
  return p;
}

PolicyOutput forward(const ModelParams& params, std::span<const double> x_rag,
                     std::span<const double> x_param) {
  const ModelConfig& cfg = params.config;
  if (static_cast<int>(x_rag.size()) != cfg.input_dim ||
      static_cast<int>(x_param.size()) != cfg.input_dim)
    throw std::invalid_argument("forward: feature dimension mismatch");

  PolicyOutput out;
  const auto& th = params.theta;
  const int d = cfg.input_dim, h = cfg.hidden_dim, v = cfg.vocab_size;

  affine(th, params.off_w1(), params.off_b1(), h, d, x_rag, out.h1_rag);
  tanh_inplace(out.h1_rag);
  affine(th, params.off_w2(), params.off_b2(), h, h, out.h1_rag, out.h2_rag);
  tanh_inplace(out.h2_rag);
  affine(th, params.off_wr(), params.off_br(), kHeadDim, h, out.h2_rag, out.z_rag);
  affine(th, params.off_wv(), params.off_bv(), v, h, out.h2_rag, out.logits_policy);

  affine(th, params.off_w1(), params.off_b1(), h, d, x_param, out.h1_param);
  tanh_inplace(out.h1_param);
  affine(th, params.off_w2(), params.off_b2(), h, h, out.h1_param, out.h2_param);
  tanh_inplace(out.h2_param);
  affine(th, params.off_wp(), params.off_bp(), kHeadDim, h, out.h2_param, out.z_param);

  out.alpha_rag.resize(kHeadDim);
  out.alpha_param.resize(kHeadDim);
  for (int k = 0; k < kHeadDim; ++k) {
    out.alpha_rag[k] = softplus(out.z_rag[k]) + 1.0;
    out.alpha_param[k] = softplus(out.z_param[k]) + 1.0;
  }
  return out;
}

double loss_dpo(const ModelParams& policy, const ModelParams& ref,
                const PreferenceSample& sample, double tau) {
  if (sample.chosen_token == sample.rejected_token)
    throw std::invalid_argument("loss_dpo: chosen and rejected must differ");
  const PolicyOutput po = forward(policy, sample.x_rag, sample.x_param);
  const PolicyOutput ro = forward(ref, sample.x_rag, sample.x_param);
  const auto lp = log_softmax(po.logits_policy);
  const auto lr = log_softmax(ro.logits_policy);
  const double margin = tau * ((lp[sample.chosen_token] - lr[sample.chosen_token]) -
                               (lp[sample.rejected_token] - lr[sample.rejected_token]));
  return -log_sigmoid(margin);
}

double loss_sft(const ModelParams& policy, const PreferenceSample& sample) {
  if (sample.chosen_token < 0 || sample.chosen_token >= policy.config.vocab_size)
    throw std::invalid_argument("loss_sft: token id out of vocabulary");
  const PolicyOutput po = forward(policy, sample.x_rag, sample.x_param);
  return -log_softmax(po.logits_policy)[sample.chosen_token];
}

TotalLossValue loss_total(const ModelParams& policy, const ModelParams& ref,
                          const PreferenceSample& sample, const AnnealSchedule& schedule,
                          const DpoConfig& config, bool include_dpo,
                          const double* w_ds_override) {
  const ModelConfig& cfg = policy.config;
  const Variant variant = policy.variant;
  const int h = cfg.hidden_dim, v = cfg.vocab_size, d = cfg.input_dim;
  if (sample.chosen_token < 0 || sample.chosen_token >= v ||
      sample.rejected_token < 0 || sample.rejected_token >= v)
    throw std::invalid_argument("loss_total: token id out of vocabulary");

  const PolicyOutput out = forward(policy, sample.x_rag, sample.x_param);
  const std::vector<double> y = QuadrantLabel{sample.quadrant}.onehot();

  // no_kl keeps the full objective but pins the KL weight to zero
  AnnealSchedule sched = schedule;
  if (variant == Variant::no_kl) sched = AnnealSchedule{0, schedule.t_anneal};

  TotalLossValue result;
  result.grad.assign(policy.theta.size(), 0.0);
  std::vector<double> g_logits(v, 0.0);
  std::vector<double> g_zr(kHeadDim, 0.0);
  std::vector<double> g_zp(kHeadDim, 0.0);

  // Evidential (or CE) head losses.
  if (variant == Variant::ce_only) {
    const auto p_rag = softmax(out.z_rag);
    const auto p_param = softmax(out.z_param);
    const auto ls_rag = log_softmax(out.z_rag);
    const auto ls_param = log_softmax(out.z_param);
    const int target = static_cast<int>(sample.quadrant);
    result.edl = -config.lambda_rag * ls_rag[target] - config.lambda_param * ls_param[target];
    for (int k = 0; k < kHeadDim; ++k) {
      g_zr[k] = config.lambda_rag * (p_rag[k] - y[k]);
      g_zp[k] = config.lambda_param * (p_param[k] - y[k]);
    }
  } else {
    const EdlLossValue rag = loss_edl(out.alpha_rag, y, sched);
    result.edl = config.lambda_rag * rag.total;
    for (int k = 0; k < kHeadDim; ++k)
      g_zr[k] = config.lambda_rag * rag.grad_alpha[k] * sigmoid(out.z_rag[k]);
    if (variant != Variant::no_dual) {
      const EdlLossValue par = loss_edl(out.alpha_param, y, sched);
      result.edl += config.lambda_param * par.total;
      for (int k = 0; k < kHeadDim; ++k)
        g_zp[k] = config.lambda_param * par.grad_alpha[k] * sigmoid(out.z_param[k]);
    }
  }

  // Conflict weight from the current forward pass (stop-gradient).
  result.kappa = std::numeric_limits<double>::quiet_NaN();
  result.w_ds = 1.0;
  if (variant == Variant::full || variant == Variant::no_kl) {
    std::vector<double> e_rag(kHeadDim), e_param(kHeadDim);
    for (int k = 0; k < kHeadDim; ++k) {
      e_rag[k] = out.alpha_rag[k] - 1.0;
      e_param[k] = out.alpha_param[k] - 1.0;
    }
    const BinaryMass m_rag = reduce_to_binary(opinion_from_evidence(Evidence(e_rag)));
    const BinaryMass m_param = reduce_to_binary(opinion_from_evidence(Evidence(e_param)));
    result.kappa = conflict_kappa(m_param, m_rag);
    result.w_ds = conflict_weight(result.kappa, m_rag.omega, config.gamma);
  }

  // SFT on the chosen token (T = 1).
  const auto lsm = log_softmax(out.logits_policy);
  result.sft = -lsm[sample.chosen_token];
  for (int t = 0; t < v; ++t) {
    const double p = std::exp(lsm[t]);
    g_logits[t] += config.sft_coeff * (p - (t == sample.chosen_token ? 1.0 : 0.0));
  }

  // Conflict-modulated DPO against the frozen reference.
  double dpo_weight = w_ds_override ? *w_ds_override : result.w_ds;
  if (include_dpo) {
    if (sample.chosen_token == sample.rejected_token)
      throw std::invalid_argument("loss_total: chosen and rejected must differ");
    const PolicyOutput ro = forward(ref, sample.x_rag, sample.x_param);
    const auto lref = log_softmax(ro.logits_policy);
    const double margin =
        config.tau * ((lsm[sample.chosen_token] - lref[sample.chosen_token]) -
                      (lsm[sample.rejected_token] - lref[sample.rejected_token]));
    result.dpo = -log_sigmoid(margin);
    if (variant == Variant::learnable_w && !w_ds_override)
      dpo_weight = 1.0 + softplus(policy.theta[policy.off_gate()]);
    const double dmargin = sigmoid(margin) - 1.0;  // d(-log sigma)/d margin
    // softmax terms cancel in the chosen-minus-rejected difference
    g_logits[sample.chosen_token] += dpo_weight * config.tau * dmargin;
    g_logits[sample.rejected_token] -= dpo_weight * config.tau * dmargin;
    if (variant == Variant::learnable_w && !w_ds_override)
      result.grad[policy.off_gate()] =
          result.dpo * sigmoid(policy.theta[policy.off_gate()]);
    result.w_ds = dpo_weight;
  }

  result.total = dpo_weight * result.dpo + result.edl + config.sft_coeff * result.sft;
  if (!std::isfinite(result.total))
    throw std::runtime_error("loss_total: non-finite loss");

  // Backward: heads into the shared trunk.
  const auto& th = policy.theta;
  auto grad = std::span<double>(result.grad);

  std::vector<double> g_h2_rag(h, 0.0), g_h2_param(h, 0.0);
  affine_backward(th, grad, policy.off_wv(), policy.off_bv(), v, h, out.h2_rag, g_logits,
                  &g_h2_rag);
  affine_backward(th, grad, policy.off_wr(), policy.off_br(), kHeadDim, h, out.h2_rag,
                  g_zr, &g_h2_rag);
  const bool param_path = (variant != Variant::no_dual);
  if (param_path)
    affine_backward(th, grad, policy.off_wp(), policy.off_bp(), kHeadDim, h, out.h2_param,
                    g_zp, &g_h2_param);

  auto trunk_backward = [&](std::span<const double> x, const std::vector<double>& h1,
                            const std::vector<double>& h2, std::vector<double>& g_h2) {
    for (int i = 0; i < h; ++i) g_h2[i] *= 1.0 - h2[i] * h2[i];
    std::vector<double> g_h1(h, 0.0);
    affine_backward(th, grad, policy.off_w2(), policy.off_b2(), h, h, h1, g_h2, &g_h1);
    for (int i = 0; i < h; ++i) g_h1[i] *= 1.0 - h1[i] * h1[i];
    affine_backward(th, grad, policy.off_w1(), policy.off_b1(), h, d, x, g_h1, nullptr);
  };
  trunk_backward(sample.x_rag, out.h1_rag, out.h2_rag, g_h2_rag);
  if (param_path) trunk_backward(sample.x_param, out.h1_param, out.h2_param, g_h2_param);

  return result;
}

}  // namespace era
