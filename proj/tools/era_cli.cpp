// era: command-line surface for the synthetic honest-RAG laboratory.
// Subcommands: gen, train, eval, ablate, analyze, gradcheck, verify.
// Exit codes: 0 success, 1 usage, 2 validation, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "era/checkpoint.hpp"
#include "era/evalx.hpp"
#include "era/gradcheck.hpp"
#include "era/model.hpp"
#include "era/rng.hpp"
#include "era/scenario.hpp"
#include "era/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Flag defaults mirror the library structs so the CLI, the test suites and the
// acceptance benchmark all describe the same default experiment.
const era::WorldConfig kWorldDefaults{};
const era::TrainerConfig kTrainerDefaults{};

struct RunConfig {
  // world
  int n_facts = kWorldDefaults.n_facts;
  int vocab_size = kWorldDefaults.vocab_size;
  double p_known = kWorldDefaults.p_known;
  double p_gold = kWorldDefaults.p_gold;
  double gold_affinity = kWorldDefaults.gold_affinity;
  double cue_noise = kWorldDefaults.cue_noise;
  double noise_sigma = kWorldDefaults.noise_sigma;
  double idk_ratio = kWorldDefaults.idk_ratio;
  double delta = kWorldDefaults.delta;
  int n_samples_boundary = kWorldDefaults.n_samples_boundary;
  std::vector<double> quadrant_mix = kWorldDefaults.quadrant_mix;
  // dataset
  int n_train = 5000;
  int n_eval = 1000;
  // model
  int hidden_dim = 64;
  // objective
  double tau = 1.0;
  double gamma = 1.0;
  double sft_coeff = 1.0;
  double lambda_rag = 0.1;
  double lambda_param = 0.1;
  // trainer
  double learning_rate = kTrainerDefaults.learning_rate;
  int epochs = kTrainerDefaults.epochs;
  int sft_warmup_steps = kTrainerDefaults.sft_warmup_steps;
  long t_anneal = kTrainerDefaults.t_anneal;
  double warmup_ratio = kTrainerDefaults.warmup_ratio;
  // shared
  std::uint64_t seed = kWorldDefaults.seed;
  std::string run_dir;

  era::WorldConfig world() const {
    era::WorldConfig w;
    w.n_facts = n_facts;
    w.vocab_size = vocab_size;
    w.p_known = p_known;
    w.p_gold = p_gold;
    w.gold_affinity = gold_affinity;
    w.cue_noise = cue_noise;
    w.noise_sigma = noise_sigma;
    w.idk_ratio = idk_ratio;
    w.delta = delta;
    w.n_samples_boundary = n_samples_boundary;
    w.quadrant_mix = quadrant_mix;
    w.seed = seed;
    return w;
  }
  era::ModelConfig model() const {
    era::ModelConfig m;
    m.input_dim = 16 + 8;
    m.hidden_dim = hidden_dim;
    m.vocab_size = vocab_size;
    return m;
  }
  era::DpoConfig dpo() const {
    era::DpoConfig d;
    d.tau = tau;
    d.gamma = gamma;
    d.sft_coeff = sft_coeff;
    d.lambda_rag = lambda_rag;
    d.lambda_param = lambda_param;
    return d;
  }
  era::TrainerConfig trainer(std::uint64_t train_seed) const {
    era::TrainerConfig t;
    t.learning_rate = learning_rate;
    t.epochs = epochs;
    t.sft_warmup_steps = sft_warmup_steps;
    t.t_anneal = t_anneal;
    t.warmup_ratio = warmup_ratio;
    t.seed = train_seed;
    return t;
  }
};

json to_json(const RunConfig& c) {
  return json{{"n_facts", c.n_facts},
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
              {"n_train", c.n_train},
              {"n_eval", c.n_eval},
              {"hidden_dim", c.hidden_dim},
              {"tau", c.tau},
              {"gamma", c.gamma},
              {"sft_coeff", c.sft_coeff},
              {"lambda_rag", c.lambda_rag},
              {"lambda_param", c.lambda_param},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"sft_warmup_steps", c.sft_warmup_steps},
              {"t_anneal", c.t_anneal},
              {"warmup_ratio", c.warmup_ratio},
              {"seed", c.seed}};
}

void from_json_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j = json::parse(in);
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_facts", c.n_facts);
  get("vocab_size", c.vocab_size);
  get("p_known", c.p_known);
  get("p_gold", c.p_gold);
  get("gold_affinity", c.gold_affinity);
  get("cue_noise", c.cue_noise);
  get("noise_sigma", c.noise_sigma);
  get("idk_ratio", c.idk_ratio);
  get("delta", c.delta);
  get("n_samples_boundary", c.n_samples_boundary);
  get("quadrant_mix", c.quadrant_mix);
  get("n_train", c.n_train);
  get("n_eval", c.n_eval);
  get("hidden_dim", c.hidden_dim);
  get("tau", c.tau);
  get("gamma", c.gamma);
  get("sft_coeff", c.sft_coeff);
  get("lambda_rag", c.lambda_rag);
  get("lambda_param", c.lambda_param);
  get("learning_rate", c.learning_rate);
  get("epochs", c.epochs);
  get("sft_warmup_steps", c.sft_warmup_steps);
  get("t_anneal", c.t_anneal);
  get("warmup_ratio", c.warmup_ratio);
  get("seed", c.seed);
  get("run_dir", c.run_dir);
}

std::string default_run_dir() {
  if (const char* env = std::getenv("ERA_RUN_DIR")) return env;
  return "run";
}

std::string fmt(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_train_log(const std::vector<era::StepLog>& log, const std::string& path) {
  std::ostringstream out;
  out << "step,lr,loss_total,loss_dpo,loss_sft,loss_edl,kappa,w_ds\n";
  for (const auto& row : log)
    out << row.step << ',' << fmt(row.lr) << ',' << fmt(row.loss_total) << ','
        << fmt(row.loss_dpo) << ',' << fmt(row.loss_sft) << ',' << fmt(row.loss_edl) << ','
        << fmt(row.kappa) << ',' << fmt(row.w_ds) << '\n';
  write_text(path, out.str());
}

// Shared train routine; returns the result and saves checkpoint + log.
era::TrainResult run_training(const RunConfig& cfg, era::Variant variant,
                              std::uint64_t train_seed, const era::Dataset& train_data,
                              const std::string& stem) {
  auto result = era::train(train_data.samples, cfg.model(), cfg.dpo(),
                           cfg.trainer(train_seed), variant);
  era::save_checkpoint(result.params, train_data.config_hash, stem + ".json", stem + ".bin");
  write_train_log(result.log, stem + "_log.csv");
  return result;
}

struct EvalArtifacts {
  era::MetricsReport metrics;
  std::vector<era::DecisionRecord> records;
};

EvalArtifacts run_eval(const era::ModelParams& params, const era::Dataset& eval_data) {
  EvalArtifacts a;
  a.records = era::evaluate_model(params, eval_data.samples);
  a.metrics = era::compute_metrics(a.records);
  return a;
}

void write_eval_artifacts(const EvalArtifacts& a, const std::string& dir,
                          const std::string& suffix = "") {
  era::write_metrics_json(a.metrics, dir + "/metrics" + suffix + ".json");
  era::write_ece_csv(a.records, 15, dir + "/ece" + suffix + ".csv");
  era::write_simplex_csv(era::simplex_dump(a.records), dir + "/simplex" + suffix + ".csv");
  era::write_jsd_csv(era::conflict_sensitivity(a.records), dir + "/jsd" + suffix + ".csv");
}

void print_metrics(const era::MetricsReport& m) {
  std::cout << "  F1 " << fmt(m.f1) << "  AbstainF1 " << fmt(m.abstain_f1) << "  OverallF1 "
            << fmt(m.overall_f1) << "\n  ECE/quadrant";
  for (int q = 0; q < 4; ++q)
    std::cout << ' ' << era::kQuadrantNames[q] << '=' << fmt(m.ece_per_quadrant[q]);
  std::cout << "\n  JSD consistent " << fmt(m.jsd_consistent) << "  conflict "
            << fmt(m.jsd_conflict) << "  gap " << fmt(m.jsd_gap) << '\n';
  if (!m.undefined.empty()) {
    std::cout << "  undefined:";
    for (const auto& u : m.undefined) std::cout << ' ' << u;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  cfg.run_dir = default_run_dir();

  // The config file is applied before flag parsing so flags win.
  for (int i = 1; i < argc - 1; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        from_json_file(argv[i + 1], cfg);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
      }
    }
  }

  CLI::App app{"Synthetic laboratory for conflict-aware evidential preference training"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  auto add_common = [&cfg](CLI::App* sub) {
    sub->add_option("--run-dir", cfg.run_dir, "artifact directory (env ERA_RUN_DIR)");
    sub->add_option("--seed", cfg.seed, "root seed");
  };
  auto add_world = [&cfg](CLI::App* sub) {
    sub->add_option("--n-facts", cfg.n_facts)->check(CLI::PositiveNumber);
    sub->add_option("--n-train", cfg.n_train)->check(CLI::PositiveNumber);
    sub->add_option("--n-eval", cfg.n_eval)->check(CLI::PositiveNumber);
    sub->add_option("--noise-sigma", cfg.noise_sigma)->check(CLI::NonNegativeNumber);
    sub->add_option("--p-known", cfg.p_known)->check(CLI::Range(0.0, 1.0));
    sub->add_option("--p-gold", cfg.p_gold)->check(CLI::Range(0.0, 1.0));
    sub->add_option("--gold-affinity", cfg.gold_affinity)->check(CLI::Range(0.0, 1.0));
    sub->add_option("--cue-noise", cfg.cue_noise)->check(CLI::Range(0.0, 1.0));
    sub->add_option("--idk-ratio", cfg.idk_ratio)->check(CLI::Range(0.0, 1.0));
    sub->add_option("--delta", cfg.delta)->check(CLI::Range(0.0, 1.0));
  };
  auto add_objective = [&cfg](CLI::App* sub) {
    sub->add_option("--tau", cfg.tau)->check(CLI::PositiveNumber);
    sub->add_option("--gamma", cfg.gamma)->check(CLI::NonNegativeNumber);
    sub->add_option("--sft-coeff", cfg.sft_coeff)->check(CLI::NonNegativeNumber);
    sub->add_option("--lambda-rag", cfg.lambda_rag)->check(CLI::NonNegativeNumber);
    sub->add_option("--lambda-param", cfg.lambda_param)->check(CLI::NonNegativeNumber);
    sub->add_option("--lr", cfg.learning_rate)->check(CLI::PositiveNumber);
    sub->add_option("--epochs", cfg.epochs)->check(CLI::PositiveNumber);
    sub->add_option("--sft-warmup-steps", cfg.sft_warmup_steps)->check(CLI::NonNegativeNumber);
    sub->add_option("--t-anneal", cfg.t_anneal)->check(CLI::PositiveNumber);
  };

  CLI::App* gen = app.add_subcommand("gen", "generate train/eval datasets");
  add_common(gen);
  add_world(gen);

  std::string variant_name = "full";
  const std::string variant_help = "one of: full, no_dual, learnable_w, ce_only, no_kl";
  CLI::App* train_cmd = app.add_subcommand("train", "train one variant on train.jsonl");
  add_common(train_cmd);
  add_objective(train_cmd);
  train_cmd->add_option("--variant", variant_name, variant_help);

  std::string checkpoint_path, data_path;
  bool allow_hash_mismatch = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on eval.jsonl");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint manifest path");
  eval_cmd->add_option("--data", data_path, "dataset path (default <run-dir>/eval.jsonl)");
  eval_cmd->add_flag("--allow-hash-mismatch", allow_hash_mismatch,
                     "evaluate even when checkpoint and dataset disagree on the world config");

  int n_seeds = 3;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "train and evaluate all five variants over shared seeds");
  add_common(ablate_cmd);
  add_objective(ablate_cmd);
  ablate_cmd->add_option("--n-seeds", n_seeds)->check(CLI::PositiveNumber);

  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze",
      "calibration/conflict analysis of trained checkpoints plus abstention baselines");
  add_common(analyze_cmd);
  add_objective(analyze_cmd);

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "analytic vs finite-difference gradient suites");
  int gc_configs = 100;
  gradcheck_cmd->add_option("--configs", gc_configs)->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--seed", cfg.seed);

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "re-derive dataset and metrics files and byte-compare");
  add_common(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    const std::string dir = cfg.run_dir;

    if (*gen) {
      era::WorldConfig wc = cfg.world();
      wc.validate();
      fs::create_directories(dir);
      json run_json = to_json(cfg);
      run_json["run_dir"] = dir;
      write_text(dir + "/config.json", run_json.dump(2) + "\n");
      const era::World world = era::generate_world(wc);
      era::emit_dataset(world, cfg.n_train, cfg.n_eval, dir + "/train.jsonl",
                        dir + "/eval.jsonl");
      std::cout << "wrote " << dir << "/train.jsonl (" << cfg.n_train << ") and " << dir
                << "/eval.jsonl (" << cfg.n_eval << "), config hash "
                << era::world_config_hash(wc) << '\n';
      return 0;
    }

    if (*train_cmd) {
      era::Variant variant;
      try {
        variant = era::variant_from_name(variant_name);
      } catch (const std::invalid_argument&) {
        std::cerr << "error: unknown variant '" << variant_name << "'; " << variant_help
                  << '\n';
        return kExitUsage;
      }
      const era::Dataset data = era::load_dataset(dir + "/train.jsonl");
      const std::string stem = dir + "/checkpoint_" + era::variant_name(variant);
      const auto result = run_training(cfg, variant, cfg.seed, data, stem);
      if (result.aborted) {
        std::cerr << "error: training aborted (" << result.abort_reason
                  << "); last-good checkpoint saved to " << stem << ".json\n";
        return kExitNumerical;
      }
      std::cout << "trained " << era::variant_name(variant) << " for " << result.log.size()
                << " steps; checkpoint " << stem << ".json, log " << stem << "_log.csv\n";
      return 0;
    }

    if (*eval_cmd) {
      if (checkpoint_path.empty()) checkpoint_path = dir + "/checkpoint_full.json";
      if (data_path.empty()) data_path = dir + "/eval.jsonl";
      std::uint64_t ckpt_hash = 0;
      const era::ModelParams params = era::load_checkpoint(checkpoint_path, &ckpt_hash);
      const era::Dataset data = era::load_dataset(data_path);
      if (ckpt_hash != data.config_hash) {
        if (!allow_hash_mismatch) {
          std::cerr << "error: checkpoint world-config hash " << ckpt_hash
                    << " does not match dataset hash " << data.config_hash
                    << " (pass --allow-hash-mismatch to override)\n";
          return kExitValidation;
        }
        std::cerr << "warning: evaluating across mismatched world-config hashes\n";
      }
      const EvalArtifacts a = run_eval(params, data);
      write_eval_artifacts(a, dir);
      std::cout << "evaluated " << data.samples.size() << " samples\n";
      print_metrics(a.metrics);
      return 0;
    }

    if (*ablate_cmd) {
      const era::Dataset train_data = era::load_dataset(dir + "/train.jsonl");
      const era::Dataset eval_data = era::load_dataset(dir + "/eval.jsonl");
      const era::Variant variants[] = {era::Variant::full, era::Variant::no_dual,
                                       era::Variant::learnable_w, era::Variant::ce_only,
                                       era::Variant::no_kl};
      std::ostringstream csv;
      csv << "variant,seeds,f1_mean,f1_sd,abstain_f1_mean,abstain_f1_sd,overall_f1_mean,"
             "overall_f1_sd\n";
      struct Row {
        std::string name;
        double overall_mean;
      };
      std::vector<Row> rows;
      std::cout << "variant        seeds            F1              Abstain F1       Overall F1\n";
      for (era::Variant v : variants) {
        std::vector<double> f1s, af1s, of1s;
        std::string seed_list;
        for (int s = 0; s < n_seeds; ++s) {
          const std::uint64_t train_seed = cfg.seed + static_cast<std::uint64_t>(s);
          seed_list += (s ? "+" : "") + std::to_string(train_seed);
          const std::string stem =
              dir + "/checkpoint_" + era::variant_name(v) + "_s" + std::to_string(train_seed);
          const auto result = run_training(cfg, v, train_seed, train_data, stem);
          if (result.aborted)
            throw std::runtime_error(era::variant_name(v) + " seed " +
                                     std::to_string(train_seed) + ": " + result.abort_reason);
          const auto a = run_eval(result.params, eval_data);
          f1s.push_back(a.metrics.f1);
          af1s.push_back(a.metrics.abstain_f1);
          of1s.push_back(a.metrics.overall_f1);
        }
        auto mean_sd = [](const std::vector<double>& xs) {
          double m = 0.0;
          for (double x : xs) m += x;
          m /= xs.size();
          double var = 0.0;
          for (double x : xs) var += (x - m) * (x - m);
          const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
          return std::pair<double, double>(m, sd);
        };
        const auto [fm, fs] = mean_sd(f1s);
        const auto [am, as] = mean_sd(af1s);
        const auto [om, os] = mean_sd(of1s);
        csv << era::variant_name(v) << ',' << seed_list << ',' << fmt(fm) << ',' << fmt(fs)
            << ',' << fmt(am) << ',' << fmt(as) << ',' << fmt(om) << ',' << fmt(os) << '\n';
        char line[200];
        std::snprintf(line, sizeof(line), "%-14s %-16s %.4f±%.4f   %.4f±%.4f   %.4f±%.4f",
                      era::variant_name(v).c_str(), seed_list.c_str(), fm, fs, am, as, om, os);
        std::cout << line << '\n';
        rows.push_back(Row{era::variant_name(v), om});
      }
      bool full_first = true;
      for (const auto& r : rows)
        if (r.overall_mean > rows.front().overall_mean + 1e-15) full_first = false;
      if (full_first) std::cout << "-> full ranks first on mean Overall F1\n";
      write_text(dir + "/ablate.csv", csv.str());
      std::cout << "wrote " << dir << "/ablate.csv\n";
      return 0;
    }

    if (*analyze_cmd) {
      const era::Dataset eval_data = era::load_dataset(dir + "/eval.jsonl");
      json out;
      EvalArtifacts full_art;
      // The full model is analyzed always; other variants join the comparison
      // when their checkpoints exist (e.g. after `train --variant ce_only` or
      // `ablate`). Analysis never trains.
      for (era::Variant v : {era::Variant::full, era::Variant::ce_only, era::Variant::no_dual,
                             era::Variant::learnable_w, era::Variant::no_kl}) {
        const std::string name = era::variant_name(v);
        const std::string stem = dir + "/checkpoint_" + name;
        if (!fs::exists(stem + ".json")) {
          if (v == era::Variant::full)
            throw std::runtime_error("analyze: missing " + stem +
                                     ".json; run `train --variant full` first");
          continue;
        }
        std::uint64_t ckpt_hash = 0;
        const era::ModelParams params = era::load_checkpoint(stem + ".json", &ckpt_hash);
        if (ckpt_hash != eval_data.config_hash)
          throw std::runtime_error("analyze: " + name +
                                   " checkpoint was trained on a different world config");
        const auto a = run_eval(params, eval_data);
        write_eval_artifacts(a, dir, "_" + name);
        out[name] = {{"ece_per_quadrant", a.metrics.ece_per_quadrant},
                     {"jsd_consistent", a.metrics.jsd_consistent},
                     {"jsd_conflict", a.metrics.jsd_conflict},
                     {"jsd_gap", a.metrics.jsd_gap},
                     {"overall_f1", a.metrics.overall_f1}};
        std::cout << name << ":\n";
        print_metrics(a.metrics);
        if (v == era::Variant::full) full_art = a;
      }

      // Simple abstention baselines on the full model's policy head.
      for (double threshold : {-1.0, -2.0}) {
        auto records = era::baseline_logprob(full_art.records, threshold);
        const auto m = era::compute_metrics(records);
        const std::string key = "baseline_logprob_t" + std::to_string(int(threshold));
        out[key] = {{"overall_f1", m.overall_f1}, {"abstain_f1", m.abstain_f1}};
        std::cout << "log-prob baseline (threshold " << threshold << "): OverallF1 "
                  << fmt(m.overall_f1) << '\n';
      }
      {
        std::uint64_t ckpt_hash = 0;
        const era::ModelParams params =
            era::load_checkpoint(dir + "/checkpoint_full.json", &ckpt_hash);
        era::Rng rng(era::derive_seed(cfg.seed, "baseline.self_consistency"));
        std::vector<era::DecisionRecord> records;
        records.reserve(eval_data.samples.size());
        for (const auto& s : eval_data.samples)
          records.push_back(era::baseline_self_consistency(params, s, 10, 0.5, rng));
        const auto m = era::compute_metrics(records);
        out["baseline_self_consistency_n10"] = {{"overall_f1", m.overall_f1},
                                                {"abstain_f1", m.abstain_f1}};
        std::cout << "self-consistency baseline (n=10, threshold 0.5): OverallF1 "
                  << fmt(m.overall_f1) << '\n';
      }
      write_text(dir + "/analyze.json", out.dump(2) + "\n");
      std::cout << "wrote " << dir << "/analyze.json\n";
      return 0;
    }

    if (*gradcheck_cmd) {
      const auto report = era::run_gradient_checks(gc_configs, cfg.seed);
      for (const auto& e : report.entries) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-22s %-4s max rel err %.3e (%d configs)",
                      e.name.c_str(), e.pass ? "PASS" : "FAIL", e.max_rel_err,
                      e.configurations);
        std::cout << line << '\n';
      }
      if (!report.all_pass()) {
        std::cerr << "gradient check failed\n";
        return kExitNumerical;
      }
      return 0;
    }

    if (*verify_cmd) {
      RunConfig stored;
      from_json_file(dir + "/config.json", stored);
      stored.run_dir = dir;
      const std::string tmp = dir + "/verify_tmp";
      fs::create_directories(tmp);
      const era::World world = era::generate_world(stored.world());
      era::emit_dataset(world, stored.n_train, stored.n_eval, tmp + "/train.jsonl",
                        tmp + "/eval.jsonl");
      bool ok = true;
      for (const char* f : {"train.jsonl", "eval.jsonl"}) {
        const bool same =
            read_bytes(dir + "/" + f) == read_bytes(tmp + "/" + f);
        std::cout << f << ": " << (same ? "match" : "MISMATCH") << '\n';
        ok = ok && same;
      }
      if (fs::exists(dir + "/checkpoint_full.json") && fs::exists(dir + "/metrics.json")) {
        std::uint64_t ckpt_hash = 0;
        const era::ModelParams params =
            era::load_checkpoint(dir + "/checkpoint_full.json", &ckpt_hash);
        const era::Dataset eval_data = era::load_dataset(dir + "/eval.jsonl");
        const auto a = run_eval(params, eval_data);
        write_eval_artifacts(a, tmp);
        const bool same = read_bytes(dir + "/metrics.json") == read_bytes(tmp + "/metrics.json");
        std::cout << "metrics.json: " << (same ? "match" : "MISMATCH") << '\n';
        ok = ok && same;
      }
      fs::remove_all(tmp);
      if (!ok) {
        std::cerr << "error: artifacts are not reproducible from config + seed\n";
        return kExitValidation;
      }
      std::cout << "all artifacts reproduce byte-for-byte\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
