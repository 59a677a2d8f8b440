#include "era/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "era/rng.hpp"

namespace era {

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainerConfig: learning_rate <= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("TrainerConfig: betas must lie in [0,1)");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0))
    throw std::invalid_argument("TrainerConfig: warmup_ratio must lie in [0,1)");
  if (epochs < 1) throw std::invalid_argument("TrainerConfig: epochs < 1");
  if (sft_warmup_steps < 0) throw std::invalid_argument("TrainerConfig: sft_warmup_steps < 0");
  if (t_anneal < 1) throw std::invalid_argument("TrainerConfig: t_anneal < 1");
}

namespace {

double lr_at(const TrainerConfig& cfg, long step, long total_steps) {
  const double warm = cfg.warmup_ratio * static_cast<double>(total_steps);
  if (warm > 0.0 && step < warm) return cfg.learning_rate * (step + 1) / warm;
  const double progress =
      (static_cast<double>(step) - warm) / std::max(1.0, static_cast<double>(total_steps) - warm);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

}  // namespace

TrainResult train(const std::vector<PreferenceSample>& dataset, const ModelConfig& model_config,
                  const DpoConfig& dpo_config, const TrainerConfig& trainer_config,
                  Variant variant) {
  trainer_config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  TrainResult result;
  result.params = ModelParams::init(model_config, variant, trainer_config.seed);
  result.reference = result.params;

  const long n = static_cast<long>(dataset.size());
  const long total_steps = static_cast<long>(trainer_config.epochs) * n;
  const long warmup_end = std::min<long>(trainer_config.sft_warmup_steps, total_steps);

  std::vector<double> m(result.params.size(), 0.0);
  std::vector<double> v(result.params.size(), 0.0);
  std::vector<double> update(result.params.size(), 0.0);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(trainer_config.seed, "train.shuffle"));

  result.log.reserve(total_steps);
  long step = 0;
  bool reference_frozen = false;
  for (int epoch = 0; epoch < trainer_config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (std::size_t idx : order) {
      if (!reference_frozen && step >= warmup_end) {
        result.reference = result.params;
        reference_frozen = true;
      }
      const bool dpo_phase = reference_frozen;
      const AnnealSchedule schedule{step, trainer_config.t_anneal};

      TotalLossValue loss;
      try {
        loss = loss_total(result.params, result.reference, dataset[idx], schedule,
                          dpo_config, dpo_phase);
      } catch (const std::runtime_error& e) {
        result.aborted = true;
        result.abort_reason =
            "non-finite loss at step " + std::to_string(step) + ": " + e.what();
        return result;
      }

      const double lr = lr_at(trainer_config, step, total_steps);
      const double bc1 = 1.0 - std::pow(trainer_config.beta1, step + 1);
      const double bc2 = 1.0 - std::pow(trainer_config.beta2, step + 1);
      bool update_finite = true;
      for (std::size_t p = 0; p < result.params.size(); ++p) {
        const double g = loss.grad[p];
        m[p] = trainer_config.beta1 * m[p] + (1.0 - trainer_config.beta1) * g;
        v[p] = trainer_config.beta2 * v[p] + (1.0 - trainer_config.beta2) * g * g;
        update[p] = lr * (m[p] / bc1) / (std::sqrt(v[p] / bc2) + trainer_config.adam_eps);
        if (!std::isfinite(update[p])) update_finite = false;
      }
      if (!update_finite) {
        // leave the parameters at the last good state
        result.aborted = true;
        result.abort_reason = "non-finite parameter update at step " + std::to_string(step);
        return result;
      }
      for (std::size_t p = 0; p < result.params.size(); ++p)
        result.params.theta[p] -= update[p];

      result.log.push_back(StepLog{step, lr, loss.total, loss.dpo, loss.sft, loss.edl,
                                   loss.kappa, loss.w_ds});
      ++step;
    }
  }
  if (!reference_frozen) result.reference = result.params;
  return result;
}

}  // namespace era
