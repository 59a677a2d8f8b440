// Acceptance harness: one PASS/FAIL line per criterion on stdout, progress on
// stderr, exit code = number of failed criteria.
//
// Criteria 6-8 share one benchmark: the default world per seed {7, 8, 9},
// all five variants trained on the same per-seed dataset with the default
// trainer settings. Criterion 10 times the default pipeline pieces (gen,
// train full, eval, analyze-equivalent) measured during the seed-7 pass.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "era/checkpoint.hpp"
#include "era/dst.hpp"
#include "era/edl_loss.hpp"
#include "era/evalx.hpp"
#include "era/gradcheck.hpp"
#include "era/model.hpp"
#include "era/numerics.hpp"
#include "era/opinion.hpp"
#include "era/rng.hpp"
#include "era/scenario.hpp"
#include "era/trainer.hpp"

namespace fs = std::filesystem;
using namespace era;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  bool pass = false;
  std::string name;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- criterion 1: special-function and loss oracles ----

// 30-digit reference values for digamma / log-gamma on [1e-3, 50].
struct OraclePoint {
  double x, psi, lgam;
};
constexpr OraclePoint kOracle[] = {
    {0.001, -1000.5755719318103, 6.9071788853838537},
    {0.01, -100.56088545786867, 4.5994798780420217},
    {0.05, -20.49784499129987, 2.9688792010517308},
    {0.1, -10.423754940411077, 2.252712651734206},
    {0.25, -4.2274535333762654, 1.2880225246980775},
    {0.5, -1.9635100260214235, 0.57236494292470009},
    {0.75, -1.0858608797864722, 0.20328095143129537},
    {1.0, -0.57721566490153286, 0.0},
    {1.5, 0.036489973978576521, -0.12078223763524522},
    {2.0, 0.42278433509846714, 0.0},
    {3.0, 0.92278433509846714, 0.69314718055994531},
    {4.5, 1.3888709263595289, 2.4537365708424422},
    {6.0, 1.7061176684318005, 4.787491742782046},
    {8.0, 2.01564147795561, 8.5251613610654143},
    {10.0, 2.2517525890667211, 12.80182748008147},
    {15.0, 2.6743466616607937, 25.191221182738682},
    {25.0, 3.198742512851974, 54.784729398112319},
    {37.5, 3.6109483445963384, 97.521775222888204},
    {50.0, 3.9019896734278922, 144.56574394634489},
};
constexpr double kKlOracle = 0.3029610277865572855;  // KL(Dir(2,1,1,1) || Dir(1))

Criterion criterion_math_oracles() {
  Criterion c{false, "math oracles (digamma/log-gamma, fit loss 11/6, KL 0.3030)", ""};
  double worst = 0.0;
  for (const auto& pt : kOracle) {
    const double scale_psi = std::max(1.0, std::abs(pt.psi));
    const double scale_lg = std::max(1.0, std::abs(pt.lgam));
    worst = std::max(worst, std::abs(digamma(pt.x) - pt.psi) / scale_psi);
    worst = std::max(worst, std::abs(log_gamma(pt.x) - pt.lgam) / scale_lg);
  }
  const std::vector<double> ones(4, 1.0);
  const std::vector<double> onehot = {1.0, 0.0, 0.0, 0.0};
  const double fit_err = std::abs(loss_fit(ones, onehot) - 11.0 / 6.0);
  const std::vector<double> alpha2111 = {2.0, 1.0, 1.0, 1.0};
  const double kl_err = std::abs(loss_kl_to_uniform(alpha2111) - kKlOracle);
  c.pass = worst <= 1e-10 && fit_err <= 1e-12 && kl_err <= 1e-9;
  c.detail = "max scaled err " + fmt(worst) + ", fit err " + fmt(fit_err) + ", KL err " +
             fmt(kl_err);
  return c;
}

// ---- criterion 2: opinion mass conservation ----

Criterion criterion_conservation() {
  Criterion c{false, "opinion conservation |sum(b)+u-1| <= 1e-12 on 10,000 vectors", ""};
  Rng rng(derive_seed(7, "acceptance.conservation"));
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> e(4);
    for (double& v : e) v = std::exp(rng.uniform() * 16.0 - 8.0) * rng.uniform();
    const auto op = opinion_from_evidence(Evidence(e));
    double sum = op.uncertainty;
    for (double b : op.belief) sum += b;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  c.pass = worst <= 1e-12;
  c.detail = "worst |sum(b)+u-1| = " + fmt(worst);
  return c;
}

// ---- criterion 3: conflict mass vs brute force; w_ds range on a full run ----

// Literal enumeration over the 3x3 hypothesis pairs with an explicit
// empty-intersection table.
double kappa_brute_force(const BinaryMass& a, const BinaryMass& b) {
  const double ma[3] = {a.supported, a.unsupported, a.omega};
  const double mb[3] = {b.supported, b.unsupported, b.omega};
  // sets: 0 = {KG,UG}, 1 = {KN,UN}, 2 = Omega; only S vs U is disjoint
  const bool empty[3][3] = {{false, true, false}, {true, false, false}, {false, false, false}};
  double kappa = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (empty[i][j]) kappa += ma[i] * mb[j];
  return kappa;
}

BinaryMass random_mass(Rng& rng) {
  double parts[3];
  double s = 0.0;
  for (double& v : parts) {
    v = -std::log(1.0 - rng.uniform());
    s += v;
  }
  BinaryMass m;
  m.supported = parts[0] / s;
  m.unsupported = parts[1] / s;
  m.omega = 1.0 - m.supported - m.unsupported;
  return m;
}

Criterion criterion_conflict(const std::vector<const std::vector<StepLog>*>& full_logs,
                             double gamma) {
  Criterion c{false, "conflict mass: brute-force match, vacuous kappa=0, w_ds range", ""};
  Rng rng(derive_seed(7, "acceptance.dst"));
  bool exact = true;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_mass(rng);
    const auto b = random_mass(rng);
    if (conflict_kappa(a, b) != kappa_brute_force(a, b)) exact = false;
  }
  const auto vacuous = reduce_to_binary(opinion_from_evidence(Evidence({0, 0, 0, 0})));
  const bool vac_ok = conflict_kappa(vacuous, random_mass(rng)) == 0.0 &&
                      conflict_kappa(random_mass(rng), vacuous) == 0.0;
  bool range_ok = true;
  long steps = 0;
  for (const auto* log : full_logs)
    for (const auto& l : *log) {
      ++steps;
      if (!(l.w_ds >= 1.0 && l.w_ds <= 1.0 + gamma)) range_ok = false;
    }
  c.pass = exact && vac_ok && range_ok && steps > 0;
  c.detail = std::string(exact ? "1000/1000 exact" : "brute-force mismatch") +
             (vac_ok ? ", vacuous ok" : ", vacuous FAIL") + ", w_ds in range on " +
             std::to_string(steps) + " steps" + (range_ok ? "" : " FAIL");
  return c;
}

// ---- criterion 4: gradient checks ----

Criterion criterion_gradients() {
  Criterion c{false, "analytic gradients vs finite differences (rel err <= 1e-4)", ""};
  const auto report = run_gradient_checks(100, 7);
  double worst = 0.0;
  int configs = 0;
  for (const auto& e : report.entries) {
    worst = std::max(worst, e.max_rel_err);
    configs += e.configurations;
  }
  c.pass = report.all_pass() && configs >= 100;
  c.detail = std::to_string(report.entries.size()) + " suites, " + std::to_string(configs) +
             " configs, worst rel err " + fmt(worst);
  return c;
}

// ---- criterion 5: metric oracle ----

DecisionRecord make_record(Quadrant q, bool answered, bool correct) {
  DecisionRecord r;
  r.quadrant = q;
  r.known_param = (q == Quadrant::KG || q == Quadrant::KN);
  r.gold_in_context = (q == Quadrant::KG || q == Quadrant::UG);
  r.answerable = r.known_param || r.gold_in_context;
  r.decided = answered ? Decision::ANSWER : Decision::ABSTAIN;
  r.predicted_token = answered ? 1 : kIdkToken;
  r.correct = answered && correct;
  r.confidence = 0.5;
  r.p_rag = {0.25, 0.25, 0.25, 0.25};
  r.p_param = {0.25, 0.25, 0.25, 0.25};
  return r;
}

// Independent literal transcription of the metric definitions.
MetricsReport brute_force_metrics(const std::vector<DecisionRecord>& rs) {
  MetricsReport m;
  auto count = [&](auto pred) {
    long n = 0;
    for (const auto& r : rs)
      if (pred(r)) ++n;
    return n;
  };
  auto div = [](long a, long b) { return b == 0 ? 0.0 : double(a) / double(b); };
  auto harm = [](double a, double b) { return a + b > 0 ? 2 * a * b / (a + b) : 0.0; };
  auto ans = [](const DecisionRecord& r) { return r.decided == Decision::ANSWER; };
  m.recall = div(count([&](auto& r) { return ans(r) && r.correct && r.answerable; }),
                 count([&](auto& r) { return r.answerable; }));
  m.precision = div(count([&](auto& r) { return ans(r) && r.correct; }),
                    count([&](auto& r) { return ans(r); }));
  m.f1 = harm(m.precision, m.recall);
  m.denoise_rate = div(
      count([&](auto& r) { return r.known_param && !r.gold_in_context && ans(r) && r.correct; }),
      count([&](auto& r) { return r.known_param && !r.gold_in_context; }));
  m.context_util = div(
      count([&](auto& r) { return r.gold_in_context && !r.known_param && ans(r) && r.correct; }),
      count([&](auto& r) { return r.gold_in_context && !r.known_param; }));
  m.abstain_recall = div(count([&](auto& r) { return !ans(r) && !r.answerable; }),
                         count([&](auto& r) { return !r.answerable; }));
  m.abstain_precision = div(count([&](auto& r) { return !ans(r) && !r.answerable; }),
                            count([&](auto& r) { return !ans(r); }));
  m.abstain_f1 = harm(m.abstain_precision, m.abstain_recall);
  m.overall_f1 = harm(m.f1, m.abstain_f1);
  return m;
}

Criterion criterion_metric_oracle() {
  Criterion c{false, "metric oracle: brute-force match on 200 sets + worked example", ""};
  Rng rng(derive_seed(7, "acceptance.metrics"));
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(60));
    std::vector<DecisionRecord> rs;
    for (int i = 0; i < n; ++i) {
      const auto q = static_cast<Quadrant>(rng.below(4));
      const bool answered = rng.bernoulli(0.6);
      rs.push_back(make_record(q, answered, answered && rng.bernoulli(0.7)));
    }
    const auto got = compute_metrics(rs);
    const auto want = brute_force_metrics(rs);
    const double fields[][2] = {
        {got.recall, want.recall},       {got.precision, want.precision},
        {got.f1, want.f1},               {got.denoise_rate, want.denoise_rate},
        {got.context_util, want.context_util},
        {got.abstain_recall, want.abstain_recall},
        {got.abstain_precision, want.abstain_precision},
        {got.abstain_f1, want.abstain_f1},
        {got.overall_f1, want.overall_f1}};
    for (const auto& f : fields) worst = std::max(worst, std::abs(f[0] - f[1]));
  }

  // Worked 10-query example: 4 correct answers on KG, abstentions on KN/UG,
  // 1 wrong attempt + 3 abstentions on UN -> Overall F1 = 16/23.
  std::vector<DecisionRecord> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(make_record(Quadrant::KG, true, true));
  rs.push_back(make_record(Quadrant::KN, false, false));
  rs.push_back(make_record(Quadrant::UG, false, false));
  rs.push_back(make_record(Quadrant::UN, true, false));
  for (int i = 0; i < 3; ++i) rs.push_back(make_record(Quadrant::UN, false, false));
  const double worked_err = std::abs(compute_metrics(rs).overall_f1 - 16.0 / 23.0);

  c.pass = worst <= 1e-12 && worked_err <= 1e-12;
  c.detail = "worst field err " + fmt(worst) + ", worked example overall F1 = " +
             fmt(compute_metrics(rs).overall_f1) + " (err " + fmt(worked_err) + ")";
  return c;
}

// ---- benchmark shared by criteria 6-8 ----

struct VariantResult {
  MetricsReport metrics;
  std::vector<StepLog> log;
};

struct PipelineTiming {
  double gen = 0.0, train_full = 0.0, eval = 0.0, analyze = 0.0;
  double total() const { return gen + train_full + eval + analyze; }
};

constexpr std::array<Variant, 5> kVariants = {Variant::full, Variant::no_dual,
                                              Variant::learnable_w, Variant::ce_only,
                                              Variant::no_kl};
constexpr std::array<std::uint64_t, 3> kSeeds = {7, 8, 9};

// seed -> variant -> result
using Benchmark = std::map<std::uint64_t, std::map<Variant, VariantResult>>;

Benchmark run_benchmark(const fs::path& work, PipelineTiming& timing) {
  Benchmark bench;
  for (const std::uint64_t seed : kSeeds) {
    WorldConfig wc;
    wc.seed = seed;
    const int n_train = 5000, n_eval = 1000;

    auto t0 = Clock::now();
    const auto world = generate_world(wc);
    const auto train_path = (work / ("train_" + std::to_string(seed) + ".jsonl")).string();
    const auto eval_path = (work / ("eval_" + std::to_string(seed) + ".jsonl")).string();
    emit_dataset(world, n_train, n_eval, train_path, eval_path);
    const auto train_data = load_dataset(train_path);
    const auto eval_data = load_dataset(eval_path);
    if (seed == kSeeds.front()) timing.gen = seconds_since(t0);

    for (const Variant v : kVariants) {
      std::fprintf(stderr, "[acceptance] seed %llu, variant %s...\n",
                   static_cast<unsigned long long>(seed), variant_name(v).c_str());
      ModelConfig mc;
      DpoConfig dc;
      TrainerConfig tc;
      tc.seed = seed;
      t0 = Clock::now();
      auto result = train(train_data.samples, mc, dc, tc, v);
      const double train_time = seconds_since(t0);
      if (result.aborted)
        throw std::runtime_error(variant_name(v) + " seed " + std::to_string(seed) +
                                 " aborted: " + result.abort_reason);

      t0 = Clock::now();
      const auto records = evaluate_model(result.params, eval_data.samples);
      auto metrics = compute_metrics(records);
      // artifact writes are part of the timed eval step
      write_metrics_json(metrics, (work / "metrics_tmp.json").string());
      write_ece_csv(records, 15, (work / "ece_tmp.csv").string());
      write_simplex_csv(simplex_dump(records), (work / "simplex_tmp.csv").string());
      const auto cs = conflict_sensitivity(records);
      write_jsd_csv(cs, (work / "jsd_tmp.csv").string());
      const double eval_time = seconds_since(t0);

      if (seed == kSeeds.front() && v == Variant::full) {
        timing.train_full = train_time;
        timing.eval = eval_time;
        // analyze = re-derived artifacts plus the abstention baselines on the
        // trained full model (analysis never trains)
        t0 = Clock::now();
        auto lp = baseline_logprob(records, -1.0);
        (void)compute_metrics(lp);
        Rng brng(derive_seed(seed, "acceptance.baseline"));
        std::vector<DecisionRecord> sc;
        for (const auto& s : eval_data.samples)
          sc.push_back(baseline_self_consistency(result.params, s, 10, 0.5, brng));
        (void)compute_metrics(sc);
        timing.analyze = eval_time + seconds_since(t0);
      }
      bench[seed][v] = VariantResult{std::move(metrics), std::move(result.log)};
    }
  }
  return bench;
}

Criterion criterion_calibration(const Benchmark& bench) {
  Criterion c{false, "mean per-quadrant ECE: full < ce_only in all four quadrants", ""};
  std::array<double, 4> full{}, ce{};
  for (const auto& [seed, by_variant] : bench)
    for (int q = 0; q < 4; ++q) {
      full[q] += by_variant.at(Variant::full).metrics.ece_per_quadrant[q] / kSeeds.size();
      ce[q] += by_variant.at(Variant::ce_only).metrics.ece_per_quadrant[q] / kSeeds.size();
    }
  c.pass = true;
  std::string detail;
  static constexpr const char* kQ[] = {"KG", "KN", "UG", "UN"};
  for (int q = 0; q < 4; ++q) {
    if (!(full[q] < ce[q])) c.pass = false;
    detail += std::string(q ? ", " : "") + kQ[q] + " " + fmt(full[q]) + (full[q] < ce[q] ? "<" : ">=") +
              fmt(ce[q]);
  }
  c.detail = detail;
  return c;
}

Criterion criterion_jsd_gap(const Benchmark& bench) {
  Criterion c{false, "mean JSD gap (conflict - consistent): full > ce_only", ""};
  double full = 0.0, ce = 0.0;
  for (const auto& [seed, by_variant] : bench) {
    full += by_variant.at(Variant::full).metrics.jsd_gap / kSeeds.size();
    ce += by_variant.at(Variant::ce_only).metrics.jsd_gap / kSeeds.size();
  }
  c.pass = full > ce;
  c.detail = "full " + fmt(full) + (c.pass ? " > " : " <= ") + "ce_only " + fmt(ce);
  return c;
}

Criterion criterion_ablations(const Benchmark& bench) {
  Criterion c{false, "ablations: full >= all on mean Overall F1; no_dual largest Abstain-F1 drop",
              ""};
  std::map<Variant, double> overall, abstain;
  for (const auto& [seed, by_variant] : bench)
    for (const Variant v : kVariants) {
      overall[v] += by_variant.at(v).metrics.overall_f1 / kSeeds.size();
      abstain[v] += by_variant.at(v).metrics.abstain_f1 / kSeeds.size();
    }
  bool full_first = true;
  double largest_drop = -1.0;
  Variant largest_drop_variant = Variant::full;
  std::string detail = "overall:";
  for (const Variant v : kVariants) {
    detail += " " + variant_name(v) + "=" + fmt(overall[v]);
    if (v == Variant::full) continue;
    if (overall[Variant::full] < overall[v]) full_first = false;
    const double drop = abstain[Variant::full] - abstain[v];
    if (drop > largest_drop) {
      largest_drop = drop;
      largest_drop_variant = v;
    }
  }
  detail += "; largest abstain-F1 drop: " + variant_name(largest_drop_variant) + " (" +
            fmt(largest_drop) + ")";
  c.pass = full_first && largest_drop_variant == Variant::no_dual;
  c.detail = detail;
  return c;
}

// ---- criterion 9: byte-for-byte determinism ----

Criterion criterion_determinism(const fs::path& work) {
  Criterion c{false, "determinism: dataset, checkpoint and metrics bytes reproduce", ""};
  WorldConfig wc;
  wc.seed = 7;
  // small but real: full pipeline repeated twice, bytes must match
  wc.n_facts = 60;
  const int n_train = 300, n_eval = 100;
  std::array<std::string, 2> train_bytes, eval_bytes, ckpt_bytes, metric_bytes;
  for (int rep = 0; rep < 2; ++rep) {
    const auto world = generate_world(wc);
    const auto tp = (work / "det_train.jsonl").string();
    const auto ep = (work / "det_eval.jsonl").string();
    emit_dataset(world, n_train, n_eval, tp, ep);
    train_bytes[rep] = slurp(tp);
    eval_bytes[rep] = slurp(ep);

    const auto data = load_dataset(tp);
    ModelConfig mc;
    DpoConfig dc;
    TrainerConfig tc;
    tc.epochs = 1;
    tc.sft_warmup_steps = 50;
    auto result = train(data.samples, mc, dc, tc, Variant::full);
    const auto mf = (work / "det_ckpt.json").string();
    const auto bf = (work / "det_ckpt.bin").string();
    save_checkpoint(result.params, data.config_hash, mf, bf);
    ckpt_bytes[rep] = slurp(mf) + slurp(bf);

    const auto eval_data = load_dataset(ep);
    const auto records = evaluate_model(result.params, eval_data.samples);
    const auto mp = (work / "det_metrics.json").string();
    write_metrics_json(compute_metrics(records), mp);
    metric_bytes[rep] = slurp(mp);
  }
  const bool data_ok = train_bytes[0] == train_bytes[1] && eval_bytes[0] == eval_bytes[1];
  const bool ckpt_ok = ckpt_bytes[0] == ckpt_bytes[1];
  const bool metrics_ok = metric_bytes[0] == metric_bytes[1];
  c.pass = data_ok && ckpt_ok && metrics_ok;
  c.detail = std::string("datasets ") + (data_ok ? "ok" : "DIFFER") + ", checkpoints " +
             (ckpt_ok ? "ok" : "DIFFER") + ", metrics " + (metrics_ok ? "ok" : "DIFFER");
  return c;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "era_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<Criterion> out;
  out.push_back(criterion_math_oracles());
  out.push_back(criterion_conservation());

  PipelineTiming timing;
  Benchmark bench;
  try {
    bench = run_benchmark(work, timing);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[acceptance] benchmark failed: %s\n", e.what());
  }

  std::vector<const std::vector<StepLog>*> full_logs;
  for (const auto& [seed, by_variant] : bench)
    full_logs.push_back(&by_variant.at(Variant::full).log);
  out.push_back(criterion_conflict(full_logs, DpoConfig{}.gamma));
  out.push_back(criterion_gradients());
  out.push_back(criterion_metric_oracle());

  if (!bench.empty()) {
    out.push_back(criterion_calibration(bench));
    out.push_back(criterion_jsd_gap(bench));
    out.push_back(criterion_ablations(bench));
  } else {
    out.push_back({false, "mean per-quadrant ECE: full < ce_only in all four quadrants",
                   "benchmark failed"});
    out.push_back({false, "mean JSD gap (conflict - consistent): full > ce_only",
                   "benchmark failed"});
    out.push_back({false, "ablations: full >= all on mean Overall F1", "benchmark failed"});
  }

  out.push_back(criterion_determinism(work));

  Criterion runtime{timing.total() > 0.0 && timing.total() < 600.0,
                    "default pipeline (gen + train full + eval + analyze) under 600 s",
                    "gen " + fmt(timing.gen) + " s, train " + fmt(timing.train_full) +
                        " s, eval " + fmt(timing.eval) + " s, analyze " + fmt(timing.analyze) +
                        " s, total " + fmt(timing.total()) + " s"};
  out.push_back(runtime);

  int failures = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& c = out[i];
    if (!c.pass) ++failures;
    std::printf("%s  %2zu. %s: %s\n", c.pass ? "PASS" : "FAIL", i + 1, c.name.c_str(),
                c.detail.c_str());
  }
  fs::remove_all(work);
  return failures;
}
