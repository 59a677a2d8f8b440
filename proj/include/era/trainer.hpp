#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "era/model.hpp"

namespace era {

struct TrainerConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double warmup_ratio = 0.1;   // lr warmup fraction of total steps, then cosine decay
  int epochs = 300;
  int sft_warmup_steps = 200;  // reference policy snapshot taken after this phase
  long t_anneal = 2000;
  std::uint64_t seed = 7;

  void validate() const;
};

struct StepLog {
  long step = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_dpo = 0.0;
  double loss_sft = 0.0;
  double loss_edl = 0.0;
  double kappa = 0.0;  // NaN when the variant has no conflict score
  double w_ds = 1.0;
};

struct TrainResult {
  ModelParams params;
  ModelParams reference;  // frozen pi_ref, snapshotted after SFT warmup
  std::vector<StepLog> log;
  // Set when a non-finite loss aborted training; params then hold the last
  // successfully updated state.
  bool aborted = false;
  std::string abort_reason;
};

// Deterministic single-threaded Adam training over the preference dataset.
// The first sft_warmup_steps steps optimize SFT + EDL only; pi_ref is then
// frozen and the conflict-modulated DPO phase runs for the remaining steps.
TrainResult train(const std::vector<PreferenceSample>& dataset, const ModelConfig& model_config,
                  const DpoConfig& dpo_config, const TrainerConfig& trainer_config,
                  Variant variant);

}  // namespace era
