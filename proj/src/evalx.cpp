#include "era/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "era/dst.hpp"
#include "era/numerics.hpp"
#include "era/opinion.hpp"

namespace era {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double harmonic(double a, double b) { return (a + b) > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

std::vector<double> head_distribution(std::span<const double> z, Variant variant) {
  if (variant == Variant::ce_only) return softmax(z);
  std::vector<double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) e[i] = softplus(z[i]);
  return predictive_mean(opinion_from_evidence(Evidence(std::move(e)))).p;
}

double head_uncertainty(std::span<const double> z, Variant variant) {
  if (variant == Variant::ce_only) {
    const auto p = softmax(z);
    return 1.0 - *std::max_element(p.begin(), p.end());
  }
  std::vector<double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) e[i] = softplus(z[i]);
  return opinion_from_evidence(Evidence(std::move(e))).uncertainty;
}

}  // namespace

DecisionRecord decide(const PolicyOutput& output, const PreferenceSample& sample,
                      Variant variant) {
  DecisionRecord rec;
  rec.id = sample.id;
  rec.answerable = sample.answerable;
  rec.known_param = sample.known_param;
  rec.gold_in_context = sample.gold_in_context;
  rec.quadrant = sample.quadrant;

  int best = 0;
  for (std::size_t t = 1; t < output.logits_policy.size(); ++t)
    if (output.logits_policy[t] > output.logits_policy[best]) best = static_cast<int>(t);
  rec.predicted_token = best;
  rec.decided = (best == kIdkToken) ? Decision::ABSTAIN : Decision::ANSWER;
  rec.correct = (best == sample.gold_token);
  rec.predicted_logprob = log_softmax(output.logits_policy)[best];

  rec.p_rag = head_distribution(output.z_rag, variant);
  rec.u_rag = head_uncertainty(output.z_rag, variant);
  if (variant == Variant::no_dual) {
    // single-head ablation: analyses treat both paths as identical
    rec.p_param = rec.p_rag;
    rec.u_param = rec.u_rag;
    rec.kappa = kNaN;
  } else {
    rec.p_param = head_distribution(output.z_param, variant);
    rec.u_param = head_uncertainty(output.z_param, variant);
    if (variant == Variant::ce_only) {
      rec.kappa = kNaN;  // no belief masses without an uncertainty budget
    } else {
      std::vector<double> e_rag(4), e_param(4);
      for (int k = 0; k < 4; ++k) {
        e_rag[k] = softplus(output.z_rag[k]);
        e_param[k] = softplus(output.z_param[k]);
      }
      rec.kappa =
          conflict_kappa(reduce_to_binary(opinion_from_evidence(Evidence(e_param))),
                         reduce_to_binary(opinion_from_evidence(Evidence(e_rag))));
    }
  }
  rec.confidence = *std::max_element(rec.p_rag.begin(), rec.p_rag.end());
  return rec;
}

std::vector<DecisionRecord> evaluate_model(const ModelParams& params,
                                           const std::vector<PreferenceSample>& samples) {
  std::vector<DecisionRecord> records;
  records.reserve(samples.size());
  for (const PreferenceSample& s : samples)
    records.push_back(decide(forward(params, s.x_rag, s.x_param), s, params.variant));
  std::sort(records.begin(), records.end(),
            [](const DecisionRecord& a, const DecisionRecord& b) { return a.id < b.id; });
  return records;
}

double expected_calibration_error(const std::vector<double>& confidences,
                                  const std::vector<bool>& correct_flags, int n_bins) {
  if (confidences.size() != correct_flags.size())
    throw std::invalid_argument("expected_calibration_error: length mismatch");
  if (n_bins < 1) throw std::invalid_argument("expected_calibration_error: n_bins < 1");
  if (confidences.empty()) return 0.0;
  std::vector<double> conf_sum(n_bins, 0.0), acc_sum(n_bins, 0.0);
  std::vector<long> count(n_bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0))
      throw std::invalid_argument("expected_calibration_error: confidence out of [0,1]");
    int b = std::min(n_bins - 1, static_cast<int>(c * n_bins));
    conf_sum[b] += c;
    acc_sum[b] += correct_flags[i] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(confidences.size());
  double ece = 0.0;
  for (int b = 0; b < n_bins; ++b)
    if (count[b] > 0)
      ece += (count[b] / n) * std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
  return ece;
}

ConflictSensitivity conflict_sensitivity(const std::vector<DecisionRecord>& records) {
  double sum_consistent = 0.0, sum_conflict = 0.0;
  long n_consistent = 0, n_conflict = 0;
  for (const DecisionRecord& r : records) {
    if (r.p_rag.empty() || r.p_param.empty())
      throw std::invalid_argument("conflict_sensitivity: records lack head distributions");
    const double jsd = js_divergence(r.p_rag, r.p_param);
    // consistent: sources agree on supportedness (KG, UN); conflict: KN, UG
    if (r.quadrant == Quadrant::KG || r.quadrant == Quadrant::UN) {
      sum_consistent += jsd;
      ++n_consistent;
    } else {
      sum_conflict += jsd;
      ++n_conflict;
    }
  }
  ConflictSensitivity cs;
  if (n_consistent > 0) cs.jsd_consistent = sum_consistent / n_consistent;
  if (n_conflict > 0) cs.jsd_conflict = sum_conflict / n_conflict;
  cs.gap = cs.jsd_conflict - cs.jsd_consistent;
  return cs;
}

MetricsReport compute_metrics(const std::vector<DecisionRecord>& records, int ece_bins) {
  if (records.empty()) throw std::invalid_argument("compute_metrics: empty record list");
  MetricsReport rep;

  long answerable = 0, answered = 0, correct_answered = 0, correct_on_answerable = 0;
  long noise = 0, noise_correct = 0, gold_only = 0, gold_only_correct = 0;
  long unans = 0, abstained = 0, correct_abstain = 0;
  for (const DecisionRecord& r : records) {
    const bool ans = (r.decided == Decision::ANSWER);
    if (r.answerable) ++answerable;
    if (ans) {
      ++answered;
      if (r.correct) {
        ++correct_answered;
        if (r.answerable) ++correct_on_answerable;
      }
    } else {
      ++abstained;
      if (!r.answerable) ++correct_abstain;
    }
    if (r.known_param && !r.gold_in_context) {
      ++noise;
      if (ans && r.correct) ++noise_correct;
    }
    if (r.gold_in_context && !r.known_param) {
      ++gold_only;
      if (ans && r.correct) ++gold_only_correct;
    }
    if (!r.answerable) ++unans;
  }

  auto ratio = [&rep](long num, long den, const char* name) {
    if (den == 0) {
      rep.undefined.push_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  rep.recall = ratio(correct_on_answerable, answerable, "recall");
  rep.precision = ratio(correct_answered, answered, "precision");
  rep.f1 = harmonic(rep.precision, rep.recall);
  rep.denoise_rate = ratio(noise_correct, noise, "denoise_rate");
  rep.context_util = ratio(gold_only_correct, gold_only, "context_util");
  rep.abstain_recall = ratio(correct_abstain, unans, "abstain_recall");
  rep.abstain_precision = ratio(correct_abstain, abstained, "abstain_precision");
  rep.abstain_f1 = harmonic(rep.abstain_precision, rep.abstain_recall);
  rep.overall_f1 = harmonic(rep.f1, rep.abstain_f1);

  // Per-quadrant calibration of the rag head: confidence vs quadrant-prediction
  // correctness.
  for (int q = 0; q < 4; ++q) {
    std::vector<double> conf;
    std::vector<bool> corr;
    for (const DecisionRecord& r : records) {
      if (static_cast<int>(r.quadrant) != q) continue;
      const int pred = static_cast<int>(
          std::max_element(r.p_rag.begin(), r.p_rag.end()) - r.p_rag.begin());
      conf.push_back(r.confidence);
      corr.push_back(pred == q);
    }
    rep.ece_per_quadrant[q] =
        conf.empty() ? 0.0 : expected_calibration_error(conf, corr, ece_bins);
    if (conf.empty()) rep.undefined.push_back("ece_" + std::string(kQuadrantNames[q]));
  }

  const ConflictSensitivity cs = conflict_sensitivity(records);
  rep.jsd_consistent = cs.jsd_consistent;
  rep.jsd_conflict = cs.jsd_conflict;
  rep.jsd_gap = cs.gap;
  return rep;
}

SimplexDump simplex_dump(const std::vector<DecisionRecord>& records) {
  SimplexDump dump;
  double sum_max = 0.0;
  for (const DecisionRecord& r : records) {
    if (r.p_rag.size() != 4)
      throw std::invalid_argument("simplex_dump: records lack 4-simplex distributions");
    dump.p.push_back({r.p_rag[0], r.p_rag[1], r.p_rag[2], r.p_rag[3]});
    dump.quadrant.push_back(r.quadrant);
    dump.u_rag.push_back(r.u_rag);
    sum_max += *std::max_element(r.p_rag.begin(), r.p_rag.end());
  }
  if (!records.empty()) dump.mean_max_probability = sum_max / records.size();
  return dump;
}

std::vector<DecisionRecord> baseline_logprob(std::vector<DecisionRecord> records,
                                             double threshold) {
  for (DecisionRecord& r : records) {
    if (r.predicted_logprob < threshold) {
      r.decided = Decision::ABSTAIN;
      r.predicted_token = kIdkToken;
      r.correct = false;
    }
  }
  return records;
}

DecisionRecord baseline_self_consistency(const ModelParams& params,
                                         const PreferenceSample& sample, int n_draws,
                                         double agreement_threshold, Rng& rng) {
  if (n_draws < 1) throw std::invalid_argument("baseline_self_consistency: n_draws < 1");
  const PolicyOutput out = forward(params, sample.x_rag, sample.x_param);
  DecisionRecord rec = decide(out, sample, params.variant);

  const auto probs = softmax(out.logits_policy);
  std::map<int, int> votes;
  for (int i = 0; i < n_draws; ++i) {
    double u = rng.uniform();
    int token = static_cast<int>(probs.size()) - 1;
    for (std::size_t t = 0; t < probs.size(); ++t) {
      u -= probs[t];
      if (u < 0.0) {
        token = static_cast<int>(t);
        break;
      }
    }
    ++votes[token];
  }
  int majority = votes.begin()->first;
  for (const auto& [token, count] : votes)
    if (count > votes[majority]) majority = token;
  const double agreement = static_cast<double>(votes[majority]) / n_draws;

  if (agreement >= agreement_threshold && majority != kIdkToken) {
    rec.decided = Decision::ANSWER;
    rec.predicted_token = majority;
    rec.correct = (majority == sample.gold_token);
  } else {
    rec.decided = Decision::ABSTAIN;
    rec.predicted_token = kIdkToken;
    rec.correct = false;
  }
  return rec;
}

void write_metrics_json(const MetricsReport& rep, const std::string& path) {
  json j{{"recall", rep.recall},
         {"precision", rep.precision},
         {"f1", rep.f1},
         {"denoise_rate", rep.denoise_rate},
         {"context_util", rep.context_util},
         {"abstain_recall", rep.abstain_recall},
         {"abstain_precision", rep.abstain_precision},
         {"abstain_f1", rep.abstain_f1},
         {"overall_f1", rep.overall_f1},
         {"ece_per_quadrant",
          {{"KG", rep.ece_per_quadrant[0]},
           {"KN", rep.ece_per_quadrant[1]},
           {"UG", rep.ece_per_quadrant[2]},
           {"UN", rep.ece_per_quadrant[3]}}},
         {"jsd_consistent", rep.jsd_consistent},
         {"jsd_conflict", rep.jsd_conflict},
         {"jsd_gap", rep.jsd_gap},
         {"undefined", rep.undefined}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_metrics_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

void write_ece_csv(const std::vector<DecisionRecord>& records, int n_bins,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ece_csv: cannot open " + path);
  out << "quadrant,bin,bin_lo,bin_hi,count,mean_confidence,accuracy\n";
  for (int q = 0; q < 4; ++q) {
    std::vector<double> conf_sum(n_bins, 0.0), acc_sum(n_bins, 0.0);
    std::vector<long> count(n_bins, 0);
    for (const DecisionRecord& r : records) {
      if (static_cast<int>(r.quadrant) != q) continue;
      const int b = std::min(n_bins - 1, static_cast<int>(r.confidence * n_bins));
      const int pred = static_cast<int>(
          std::max_element(r.p_rag.begin(), r.p_rag.end()) - r.p_rag.begin());
      conf_sum[b] += r.confidence;
      acc_sum[b] += (pred == q) ? 1.0 : 0.0;
      ++count[b];
    }
    for (int b = 0; b < n_bins; ++b) {
      if (count[b] == 0) continue;
      out << kQuadrantNames[q] << ',' << b << ',' << static_cast<double>(b) / n_bins << ','
          << static_cast<double>(b + 1) / n_bins << ',' << count[b] << ','
          << conf_sum[b] / count[b] << ',' << acc_sum[b] / count[b] << '\n';
    }
  }
}

void write_simplex_csv(const SimplexDump& dump, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_simplex_csv: cannot open " + path);
  out << "p1,p2,p3,p4,quadrant,u_rag\n";
  for (std::size_t i = 0; i < dump.p.size(); ++i) {
    out << dump.p[i][0] << ',' << dump.p[i][1] << ',' << dump.p[i][2] << ',' << dump.p[i][3]
        << ',' << quadrant_name(dump.quadrant[i]) << ',' << dump.u_rag[i] << '\n';
  }
  out << "# mean_max_probability," << dump.mean_max_probability << "\n";
}

void write_jsd_csv(const ConflictSensitivity& cs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_jsd_csv: cannot open " + path);
  out << "jsd_consistent,jsd_conflict,gap\n";
  out << cs.jsd_consistent << ',' << cs.jsd_conflict << ',' << cs.gap << '\n';
}

}  // namespace era
