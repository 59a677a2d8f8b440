#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "era/model.hpp"
#include "era/rng.hpp"

namespace era {

enum class Decision { ANSWER, ABSTAIN };

struct DecisionRecord {
  std::int64_t id = 0;
  Decision decided = Decision::ANSWER;
  int predicted_token = 0;
  bool correct = false;  // predicted == gold; meaningful when decided == ANSWER
  bool answerable = false;
  bool known_param = false;
  bool gold_in_context = false;
  Quadrant quadrant = Quadrant::KG;
  double confidence = 0.0;        // max of the rag head's predictive mean
  double predicted_logprob = 0.0; // log-probability of the predicted token
  std::vector<double> p_rag, p_param;  // 4-simplex predictive distributions
  double u_rag = 1.0, u_param = 1.0;
  double kappa = 0.0;  // NaN when the variant defines no conflict score
};

struct MetricsReport {
  double recall = 0.0, precision = 0.0, f1 = 0.0;
  double denoise_rate = 0.0, context_util = 0.0;
  double abstain_recall = 0.0, abstain_precision = 0.0, abstain_f1 = 0.0;
  double overall_f1 = 0.0;
  std::vector<double> ece_per_quadrant = {0.0, 0.0, 0.0, 0.0};
  double jsd_consistent = 0.0, jsd_conflict = 0.0, jsd_gap = 0.0;
  // Names of metrics whose denominator was zero (value reported as 0).
  std::vector<std::string> undefined;
};

// Argmax decision rule; abstention is exactly the IDK token. Ties break to
// the lowest token id.
DecisionRecord decide(const PolicyOutput& output, const PreferenceSample& sample,
                      Variant variant);

std::vector<DecisionRecord> evaluate_model(const ModelParams& params,
                                           const std::vector<PreferenceSample>& samples);

double expected_calibration_error(const std::vector<double>& confidences,
                                  const std::vector<bool>& correct_flags, int n_bins = 15);

struct ConflictSensitivity {
  double jsd_consistent = 0.0;
  double jsd_conflict = 0.0;
  double gap = 0.0;
};

// Mean JSD(p_rag, p_param) over consistent (KG, UN) vs conflicting (KN, UG)
// samples.
ConflictSensitivity conflict_sensitivity(const std::vector<DecisionRecord>& records);

MetricsReport compute_metrics(const std::vector<DecisionRecord>& records, int ece_bins = 15);

struct SimplexDump {
  // rows of (p1, p2, p3, p4, quadrant, u_rag)
  std::vector<std::array<double, 4>> p;
  std::vector<Quadrant> quadrant;
  std::vector<double> u_rag;
  double mean_max_probability = 0.0;
};

SimplexDump simplex_dump(const std::vector<DecisionRecord>& records);

// Abstain iff the predicted token's log-probability falls below the threshold.
std::vector<DecisionRecord> baseline_logprob(std::vector<DecisionRecord> records,
                                             double threshold);

// Sample n_draws tokens from the policy softmax; answer with the majority
// token iff its agreement rate reaches the threshold.
DecisionRecord baseline_self_consistency(const ModelParams& params,
                                         const PreferenceSample& sample, int n_draws,
                                         double agreement_threshold, Rng& rng);

// Artifact writers (plot-ready CSVs plus metrics.json).
void write_metrics_json(const MetricsReport& report, const std::string& path);
void write_ece_csv(const std::vector<DecisionRecord>& records, int n_bins,
                   const std::string& path);
void write_simplex_csv(const SimplexDump& dump, const std::string& path);
void write_jsd_csv(const ConflictSensitivity& cs, const std::string& path);

}  // namespace era
