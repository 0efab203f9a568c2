#pragma once

// Student-side metrics over median-ensembled predictions. The violation rate is
// the exception: it pools every individual run prediction, unclipped.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/gates.hpp"
#include "pars/numeric.hpp"

namespace pars::evaluation {

struct PredictionSet {
  std::string prompt_id;
  double ground_truth = 0.0;
  double envelope = 100.0;  // percent
  std::vector<double> runs;
};

struct EvalReport {
  double mae = 0.0;
  std::optional<double> r2;            // absent when the targets have zero variance
  std::optional<double> spearman_rho;  // absent when either side has constant ranks
  double violation_rate = 0.0;
  int n_prompts = 0;
  int n_predictions = 0;
};

inline double median_ensemble(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty ensemble");
  return median_of({values.begin(), values.end()});
}

// 1-based ranks, ties share the average of the positions they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2 || x.size() != y.size()) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline std::optional<double> spearman(std::span<const double> pred, std::span<const double> truth) {
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  return pearson(rp, rt);
}

inline std::optional<double> r_squared(std::span<const double> pred, std::span<const double> truth) {
  if (truth.size() < 2 || pred.size() != truth.size()) return std::nullopt;
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

inline EvalReport compute_metrics(std::span<const PredictionSet> sets, const gates::GateConfig& range = {}) {
  if (sets.empty()) throw Error(ErrorCode::EmptyInput, "no prediction sets to evaluate");
  std::vector<double> medians, truths;
  int violations = 0;
  EvalReport out;
  for (const auto& s : sets) {
    if (s.runs.empty()) throw Error(ErrorCode::InputSchemaError, "prompt '" + s.prompt_id + "' has no runs");
    medians.push_back(median_ensemble(s.runs));
    truths.push_back(s.ground_truth);
    for (double p : s.runs) {
      violations += gates::violates(p, s.envelope, range) ? 1 : 0;
      ++out.n_predictions;
    }
  }
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < medians.size(); ++i) abs_sum += std::fabs(medians[i] - truths[i]);
  out.n_prompts = static_cast<int>(sets.size());
  out.mae = abs_sum / static_cast<double>(sets.size());
  out.r2 = r_squared(medians, truths);
  out.spearman_rho = spearman(medians, truths);
  out.violation_rate = static_cast<double>(violations) / static_cast<double>(out.n_predictions);
  return out;
}

inline nlohmann::json to_json(const EvalReport& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"mae", r.mae},
          {"r2", opt(r.r2)},
          {"spearman_rho", opt(r.spearman_rho)},
          {"violation_rate", r.violation_rate},
          {"n_prompts", r.n_prompts},
          {"n_predictions", r.n_predictions}};
}

}  // namespace pars::evaluation
