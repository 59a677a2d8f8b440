#include "era/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace era {

using nlohmann::json;

namespace {

// Query feature layout (d_query >= 14):
//   [0..3]   topic code
//   [4..5]   known-ness signal (+1 / -1)
//   [6..7]   retrieval-affinity signal (+1 gold-prone / -1 noisy-prone)
//   [8..13]  parametric answer code when known, N(0,1) otherwise
//   [14..)   per-fact identity jitter
constexpr int kTopicDim = 4;
constexpr int kKnownDim = 2;
constexpr int kAffinityDim = 2;
constexpr int kQueryCodeDim = 6;
constexpr int kContextCodeDim = 4;

std::vector<double> pm1_code(int len, Rng& rng) {
  std::vector<double> code(len);
  for (double& v : code) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
  return code;
}

json config_to_json(const WorldConfig& c) {
  return json{{"n_facts", c.n_facts},
              {"d_query", c.d_query},
              {"d_context", c.d_context},
              {"vocab_size", c.vocab_size},
              {"p_known", c.p_known},
              {"p_gold", c.p_gold},
              {"gold_affinity", c.gold_affinity},
              {"cue_noise", c.cue_noise},
              {"noise_sigma", c.noise_sigma},
              {"idk_ratio", c.idk_ratio},
              {"delta", c.delta},
              {"n_samples_boundary", c.n_samples_boundary},
              {"quadrant_mix", c.quadrant_mix},
              {"seed", c.seed}};
}

WorldConfig config_from_json(const json& j) {
  WorldConfig c;
  c.n_facts = j.at("n_facts").get<int>();
  c.d_query = j.at("d_query").get<int>();
  c.d_context = j.at("d_context").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.p_known = j.at("p_known").get<double>();
  c.p_gold = j.at("p_gold").get<double>();
  c.gold_affinity = j.at("gold_affinity").get<double>();
  c.cue_noise = j.at("cue_noise").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.idk_ratio = j.at("idk_ratio").get<double>();
  c.delta = j.at("delta").get<double>();
  c.n_samples_boundary = j.at("n_samples_boundary").get<int>();
  c.quadrant_mix = j.at("quadrant_mix").get<std::vector<double>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

}  // namespace

void WorldConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (n_facts < 2) throw std::invalid_argument("WorldConfig: n_facts must be >= 2");
  if (d_query < kTopicDim + kKnownDim + kAffinityDim + kQueryCodeDim)
    throw std::invalid_argument("WorldConfig: d_query too small for the feature layout");
  if (d_context < kTopicDim + kContextCodeDim)
    throw std::invalid_argument("WorldConfig: d_context too small for the feature layout");
  if (vocab_size < 3) throw std::invalid_argument("WorldConfig: vocab_size must be >= 3");
  if (!prob(p_known) || !prob(p_gold) || !prob(gold_affinity) || !prob(cue_noise) || !prob(idk_ratio) ||
      !prob(delta))
    throw std::invalid_argument("WorldConfig: probabilities must lie in [0,1]");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("WorldConfig: noise_sigma < 0");
  if (n_samples_boundary < 1)
    throw std::invalid_argument("WorldConfig: n_samples_boundary must be >= 1");
  if (quadrant_mix.size() != 4)
    throw std::invalid_argument("WorldConfig: quadrant_mix needs 4 entries");
  double s = 0.0;
  for (double w : quadrant_mix) {
    if (w < 0.0) throw std::invalid_argument("WorldConfig: negative quadrant weight");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw std::invalid_argument("WorldConfig: quadrant_mix must sum to 1");
}

std::uint64_t world_config_hash(const WorldConfig& config) {
  return fnv1a(config_to_json(config).dump());
}

bool boundary_membership(const Fact& fact, const WorldConfig& config, Rng& rng) {
  int correct = 0;
  for (int i = 0; i < config.n_samples_boundary; ++i)
    if (rng.bernoulli(fact.success_rate)) ++correct;
  const double proportion =
      static_cast<double>(correct) / static_cast<double>(config.n_samples_boundary);
  return proportion >= config.delta;
}

Quadrant assign_quadrant(bool known_param, bool gold_in_context) {
  if (known_param) return gold_in_context ? Quadrant::KG : Quadrant::KN;
  return gold_in_context ? Quadrant::UG : Quadrant::UN;
}

World generate_world(const WorldConfig& config) {
  config.validate();
  World world;
  world.config = config;

  Rng code_rng(derive_seed(config.seed, "world.codes"));
  world.query_codes.resize(config.vocab_size);
  world.context_codes.resize(config.vocab_size);
  for (int t = 1; t < config.vocab_size; ++t) {
    world.query_codes[t] = pm1_code(kQueryCodeDim, code_rng);
    world.context_codes[t] = pm1_code(kContextCodeDim, code_rng);
  }

  Rng fact_rng(derive_seed(config.seed, "world.facts"));
  Rng boundary_rng(derive_seed(config.seed, "world.boundary"));
  world.facts.resize(config.n_facts);
  for (int i = 0; i < config.n_facts; ++i) {
    Fact& f = world.facts[i];
    f.id = i;
    f.gold_token = 1 + static_cast<int>(fact_rng.below(config.vocab_size - 1));
    f.success_rate = fact_rng.bernoulli(config.p_known) ? 1.0 : fact_rng.uniform(0.0, 0.8);
    const bool gold_prone = fact_rng.bernoulli(config.p_gold);
    f.gold_rate = gold_prone ? config.gold_affinity : 1.0 - config.gold_affinity;
    f.topic = pm1_code(kTopicDim, fact_rng);
    f.jitter.resize(config.d_query - kTopicDim - kKnownDim - kAffinityDim - kQueryCodeDim);
    for (double& v : f.jitter) v = fact_rng.normal();
    f.known_param = boundary_membership(f, config, boundary_rng);
    // The surface cue misleads for a slice of the facts whose retrieval
    // behavior contradicts their parametric status.
    const bool cue_flip = fact_rng.bernoulli(config.cue_noise);
    f.cue_gold = (cue_flip && f.known_param != gold_prone) ? !gold_prone : gold_prone;
    (f.known_param ? world.known_fact_ids : world.unknown_fact_ids).push_back(i);
  }
  if (world.known_fact_ids.empty() || world.unknown_fact_ids.empty())
    throw std::runtime_error(
        "generate_world: need both known and unknown facts; adjust p_known/n_facts");
  return world;
}

std::pair<int, int> build_preference_pair(Quadrant quadrant, int gold_token,
                                          const std::vector<int>& distractor_tokens,
                                          int idk_token, double idk_ratio, Rng& rng) {
  if (distractor_tokens.empty())
    throw std::invalid_argument("build_preference_pair: empty distractor pool");
  auto pick = [&](const std::vector<int>& pool) {
    return pool[rng.below(pool.size())];
  };
  switch (quadrant) {
    case Quadrant::KG:
      // reject abstention outright
      return {gold_token, idk_token};
    case Quadrant::KN:
      // reject the context-induced answer or an overly conservative IDK
      if (rng.bernoulli(idk_ratio)) return {gold_token, idk_token};
      return {gold_token, distractor_tokens.front()};
    case Quadrant::UG:
      // reject wrong-despite-gold, parametric hallucination, or unjustified IDK
      if (rng.bernoulli(idk_ratio)) return {gold_token, idk_token};
      return {gold_token, pick(distractor_tokens)};
    case Quadrant::UN: {
      // abstain; reject hallucinations, the noise answer, and even gold
      std::vector<int> pool = distractor_tokens;
      pool.push_back(gold_token);
      return {idk_token, pick(pool)};
    }
  }
  throw std::invalid_argument("build_preference_pair: unknown quadrant");
}

namespace {

PreferenceSample build_sample(const World& world, const Fact& fact, bool gold_in_context,
                              std::int64_t id, Rng& rng) {
  const WorldConfig& cfg = world.config;
  PreferenceSample s;
  s.id = id;
  s.gold_token = fact.gold_token;
  s.known_param = fact.known_param;
  s.gold_in_context = gold_in_context;
  s.answerable = fact.known_param || gold_in_context;
  s.quadrant = assign_quadrant(fact.known_param, gold_in_context);

  // Query block.
  std::vector<double> query(cfg.d_query, 0.0);
  for (int i = 0; i < kTopicDim; ++i) query[i] = fact.topic[i];
  const double known_signal = fact.known_param ? 1.0 : -1.0;
  for (int i = 0; i < kKnownDim; ++i) query[kTopicDim + i] = known_signal;
  const double affinity_signal = fact.cue_gold ? 1.0 : -1.0;
  for (int i = 0; i < kAffinityDim; ++i) query[kTopicDim + kKnownDim + i] = affinity_signal;
  const int code_base = kTopicDim + kKnownDim + kAffinityDim;
  for (int i = 0; i < kQueryCodeDim; ++i)
    query[code_base + i] =
        fact.known_param ? world.query_codes[fact.gold_token][i] : rng.normal();
  for (std::size_t i = 0; i < fact.jitter.size(); ++i)
    query[code_base + kQueryCodeDim + i] = fact.jitter[i];
  for (double& v : query) v += cfg.noise_sigma * rng.normal();

  // Context block: gold retrieval echoes the fact's own embedding, noisy
  // retrieval substitutes a distractor fact with a different answer.
  const Fact* source = &fact;
  if (!gold_in_context) {
    int j;
    do {
      j = static_cast<int>(rng.below(world.facts.size()));
    } while (world.facts[j].gold_token == fact.gold_token);
    source = &world.facts[j];
  }
  std::vector<double> context(cfg.d_context, 0.0);
  for (int i = 0; i < kTopicDim; ++i) context[i] = source->topic[i];
  for (int i = 0; i < kContextCodeDim; ++i)
    context[kTopicDim + i] = world.context_codes[source->gold_token][i];
  for (double& v : context) v += cfg.noise_sigma * rng.normal();

  s.x_rag.reserve(cfg.d_query + cfg.d_context);
  s.x_rag.insert(s.x_rag.end(), query.begin(), query.end());
  s.x_rag.insert(s.x_rag.end(), context.begin(), context.end());
  s.x_param = query;
  s.x_param.resize(cfg.d_query + cfg.d_context, 0.0);

  // Preference pair; the context-induced answer leads the distractor pool so
  // KN can reject exactly what the noisy context suggests.
  std::vector<int> distractors;
  if (!gold_in_context) distractors.push_back(source->gold_token);
  while (distractors.size() < 3) {
    int t = 1 + static_cast<int>(rng.below(cfg.vocab_size - 1));
    if (t != fact.gold_token) distractors.push_back(t);
  }
  auto [chosen, rejected] = build_preference_pair(s.quadrant, fact.gold_token, distractors,
                                                  kIdkToken, cfg.idk_ratio, rng);
  s.chosen_token = chosen;
  s.rejected_token = rejected;
  return s;
}

}  // namespace

std::vector<PreferenceSample> draw_samples(const World& world, int n,
                                           std::int64_t id_offset, Rng& rng) {
  const WorldConfig& cfg = world.config;
  // Quadrant counts follow the configured mix, largest-remainder rounding.
  std::vector<int> counts(4, 0);
  int assigned = 0;
  std::vector<std::pair<double, int>> remainders;
  for (int q = 0; q < 4; ++q) {
    const double exact = cfg.quadrant_mix[q] * n;
    counts[q] = static_cast<int>(exact);
    assigned += counts[q];
    remainders.push_back({exact - counts[q], q});
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < n - assigned; ++i) ++counts[remainders[i % 4].second];

  std::vector<PreferenceSample> samples;
  samples.reserve(n);
  std::int64_t id = id_offset;
  for (int q = 0; q < 4; ++q) {
    const bool known = (q == 0 || q == 1);
    const bool gold = (q == 0 || q == 2);
    const auto& pool = known ? world.known_fact_ids : world.unknown_fact_ids;
    for (int i = 0; i < counts[q]; ++i) {
      // Facts are drawn proportionally to their retrieval affinity for the
      // requested context quality, so gold-prone facts dominate G quadrants.
      const Fact* fact;
      int attempts = 0;
      do {
        fact = &world.facts[pool[rng.below(pool.size())]];
        if (++attempts > 10000)
          throw std::runtime_error(
              "draw_samples: no fact accepts this context quality; "
              "adjust p_gold/gold_affinity");
      } while (!rng.bernoulli(gold ? fact->gold_rate : 1.0 - fact->gold_rate));
      samples.push_back(build_sample(world, *fact, gold, id++, rng));
    }
  }
  // Interleave quadrants deterministically so training order is not blocked.
  Rng shuffle_rng(derive_seed(cfg.seed, "samples.shuffle") ^ static_cast<std::uint64_t>(id_offset));
  for (std::size_t i = samples.size(); i > 1; --i)
    std::swap(samples[i - 1], samples[shuffle_rng.below(i)]);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i].id = id_offset + static_cast<std::int64_t>(i);
  return samples;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  json vocab = json::array();
  vocab.push_back("IDK");
  for (int t = 1; t < dataset.config.vocab_size; ++t)
    vocab.push_back("A" + std::to_string(t));
  json header{{"type", "era-dataset"},
              {"config", config_to_json(dataset.config)},
              {"config_hash", dataset.config_hash},
              {"seed", dataset.config.seed},
              {"quadrant_order", {"KG", "KN", "UG", "UN"}},
              {"vocab", vocab}};
  out << header.dump() << "\n";
  for (const PreferenceSample& s : dataset.samples) {
    json row{{"id", s.id},
             {"x_rag", s.x_rag},
             {"x_param", s.x_param},
             {"quadrant", quadrant_name(s.quadrant)},
             {"chosen_token", s.chosen_token},
             {"rejected_token", s.rejected_token},
             {"gold_token", s.gold_token},
             {"answerable", s.answerable},
             {"gold_in_context", s.gold_in_context},
             {"known_param", s.known_param}};
    out << row.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_dataset: empty file");
  json header = json::parse(line);
  if (header.value("type", "") != "era-dataset")
    throw std::runtime_error("load_dataset: not an era dataset file");
  const std::vector<std::string> order =
      header.at("quadrant_order").get<std::vector<std::string>>();
  if (order != std::vector<std::string>{"KG", "KN", "UG", "UN"})
    throw std::runtime_error("load_dataset: unexpected quadrant ordering");

  Dataset dataset;
  dataset.config = config_from_json(header.at("config"));
  dataset.config_hash = header.at("config_hash").get<std::uint64_t>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json row = json::parse(line);
    PreferenceSample s;
    s.id = row.at("id").get<std::int64_t>();
    s.x_rag = row.at("x_rag").get<std::vector<double>>();
    s.x_param = row.at("x_param").get<std::vector<double>>();
    s.quadrant = quadrant_from_name(row.at("quadrant").get<std::string>());
    s.chosen_token = row.at("chosen_token").get<int>();
    s.rejected_token = row.at("rejected_token").get<int>();
    s.gold_token = row.at("gold_token").get<int>();
    s.answerable = row.at("answerable").get<bool>();
    s.gold_in_context = row.at("gold_in_context").get<bool>();
    s.known_param = row.at("known_param").get<bool>();
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

void emit_dataset(const World& world, int n_train, int n_eval,
                  const std::string& train_path, const std::string& eval_path) {
  if (n_train < 1 || n_eval < 1)
    throw std::invalid_argument("emit_dataset: split sizes must be positive");
  const std::uint64_t hash = world_config_hash(world.config);

  Rng train_rng(derive_seed(world.config.seed, "dataset.train"));
  Dataset train{world.config, hash, draw_samples(world, n_train, 0, train_rng)};
  write_dataset(train, train_path);

  Rng eval_rng(derive_seed(world.config.seed, "dataset.eval"));
  Dataset eval{world.config, hash, draw_samples(world, n_eval, n_train, eval_rng)};
  write_dataset(eval, eval_path);
}

}  // namespace era
