#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "era/dst.hpp"
#include "era/rng.hpp"

namespace era {

// Synthetic honest-RAG world. Facts carry a gold answer token, a topic code
// and a parametric success rate; queries encode topic + known-ness + (when
// parametrically known) the answer, contexts encode topic + answer of either
// the gold fact or a distractor.
struct WorldConfig {
  int n_facts = 400;
  int d_query = 16;
  int d_context = 8;
  int vocab_size = 16;  // token 0 is the dedicated IDK token
  double p_known = 0.5;
  double p_gold = 0.5;         // fraction of facts that retrieval handles well
  double gold_affinity = 0.65; // per-fact gold-context propensity for those facts
  double cue_noise = 0.2;      // chance the query's affinity cue misleads
  double noise_sigma = 0.5;
  double idk_ratio = 0.7;
  double delta = 1.0;          // consistency threshold for K_param membership
  int n_samples_boundary = 10; // N answer draws per fact
  // Quadrant mix of emitted datasets, order KG, KN, UG, UN.
  std::vector<double> quadrant_mix = {0.35, 0.15, 0.15, 0.35};
  std::uint64_t seed = 7;

  void validate() const;
};

struct Fact {
  int id = 0;
  int gold_token = 1;
  double success_rate = 0.0;  // parametric recall probability per draw
  double gold_rate = 0.5;     // how often retrieval surfaces this fact's answer
  bool cue_gold = false;      // affinity cue surfaced in the query; may mislead
  bool known_param = false;
  std::vector<double> topic;   // length 4, +-1 code
  std::vector<double> jitter;  // per-fact identity noise in the query tail
};

struct World {
  WorldConfig config;
  std::vector<Fact> facts;
  // Fixed +-1 codebooks per answer token (index 0, IDK, unused).
  std::vector<std::vector<double>> query_codes;    // length 6 each
  std::vector<std::vector<double>> context_codes;  // length 4 each
  std::vector<int> known_fact_ids;
  std::vector<int> unknown_fact_ids;
};

struct QuadrantLabel {
  Quadrant q = Quadrant::KG;
  std::vector<double> onehot() const {
    std::vector<double> y(4, 0.0);
    y[static_cast<int>(q)] = 1.0;
    return y;
  }
};

struct PreferenceSample {
  std::int64_t id = 0;
  std::vector<double> x_rag;    // query features ++ context features
  std::vector<double> x_param;  // same query, context block zeroed
  Quadrant quadrant = Quadrant::KG;
  int chosen_token = 0;
  int rejected_token = 0;
  int gold_token = 0;
  bool answerable = false;
  bool gold_in_context = false;
  bool known_param = false;
};

struct Dataset {
  WorldConfig config;
  std::uint64_t config_hash = 0;
  std::vector<PreferenceSample> samples;
};

inline constexpr int kIdkToken = 0;

World generate_world(const WorldConfig& config);

// Simulates N lexical-match draws at the fact's success rate; the fact is
// parametrically known iff the correct proportion reaches delta.
bool boundary_membership(const Fact& fact, const WorldConfig& config, Rng& rng);

Quadrant assign_quadrant(bool known_param, bool gold_in_context);

// Chosen/rejected per quadrant rule. Where IDK appears among several rejected
// candidates it is drawn with probability idk_ratio, the rest uniformly.
std::pair<int, int> build_preference_pair(Quadrant quadrant, int gold_token,
                                          const std::vector<int>& distractor_tokens,
                                          int idk_token, double idk_ratio, Rng& rng);

// Stratified sample generation; ids are contiguous starting at id_offset.
std::vector<PreferenceSample> draw_samples(const World& world, int n,
                                           std::int64_t id_offset, Rng& rng);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Emits train/eval JSONL files with disjoint id ranges from one world.
void emit_dataset(const World& world, int n_train, int n_eval,
                  const std::string& train_path, const std::string& eval_path);

std::uint64_t world_config_hash(const WorldConfig& config);

}  // namespace era
