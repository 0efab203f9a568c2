#pragma once

// Run reports are rebuilt from the emitted rows alone, so a resumed run and an
// uninterrupted run produce the same report.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pars/accounting.hpp"
#include "pars/gates.hpp"
#include "pars/pipeline/records.hpp"
#include "pars/pipeline/run_config.hpp"

namespace pars::pipeline {

inline accounting::PromptCost cost_from_row(const json& row) {
  accounting::PromptCost c;
  c.generated = row.value("prompt_generated", 0);
  c.tokens_in = row.value("prompt_tokens_in", std::int64_t{0});
  c.tokens_out = row.value("prompt_tokens_out", std::int64_t{0});
  c.overshoot_tokens_in = row.value("overshoot_tokens_in", std::int64_t{0});
  c.overshoot_tokens_out = row.value("overshoot_tokens_out", std::int64_t{0});
  c.select_tokens = row.value("select_tokens", std::int64_t{0});
  return c;
}

inline json build_report(Strategy strategy, const std::vector<json>& curated, const std::vector<json>& discards,
                         const gates::GateConfig& gate_cfg = {}) {
  std::vector<accounting::PromptCost> costs;
  std::set<std::string> seen;
  std::map<std::string, int> histogram;
  int rejected = 0;

  double abs_sum = 0.0;
  double max_abs = 0.0;
  int with_answer = 0;
  int violations = 0;
  double judge_sum = 0.0;
  int judge_n = 0;

  for (const auto& row : curated) {
    const std::string id = row.at("prompt_id").get<std::string>();
    if (seen.insert(id).second) {
      auto c = cost_from_row(row);
      c.accepted = true;
      costs.push_back(c);
      if (auto it = row.find("judge_composite"); it != row.end() && it->is_number()) {
        judge_sum += it->get<double>();
        ++judge_n;
      }
    }
    const auto& answer = row.at("answer");
    if (answer.is_number()) {
      const double a = answer.get<double>();
      const double e = std::fabs(a - row.at("ground_truth_y").get<double>());
      abs_sum += e;
      max_abs = std::max(max_abs, e);
      ++with_answer;
      violations += gates::violates(a, row.at("envelope_percent").get<double>(), gate_cfg) ? 1 : 0;
    }
  }
  for (const auto& row : discards) {
    const std::string reason = row.at("reason").get<std::string>();
    ++histogram[reason];
    if (reason == "rejected_input") {
      ++rejected;
      continue;
    }
    if (seen.insert(row.at("prompt_id").get<std::string>()).second) costs.push_back(cost_from_row(row));
  }

  json report = {{"schema", kReportSchema},
                 {"strategy", to_string(strategy)},
                 {"n_prompts", static_cast<int>(costs.size())},
                 {"n_rejected_input", rejected},
                 {"n_curated", static_cast<int>(curated.size())},
                 {"n_curated_with_answer", with_answer},
                 {"discard_reason_histogram", histogram}};
  report["selected_trace_mae"] = with_answer > 0 ? json(abs_sum / with_answer) : json(nullptr);
  report["selected_trace_max_abs_error"] = with_answer > 0 ? json(max_abs) : json(nullptr);
  report["curated_violation_rate"] =
      with_answer > 0 ? json(static_cast<double>(violations) / with_answer) : json(nullptr);
  report["judge_method_score"] = judge_n > 0 ? json(judge_sum / judge_n) : json(nullptr);
  if (!costs.empty()) {
    const auto cost = accounting::empirical_cost(costs, strategy == Strategy::JUDGE_RANKED);
    report["k_avg_measured"] = cost.model.k_avg;
    report["r_acc_measured"] = cost.model.r_acc;
    report["tokens"] = accounting::to_json(cost);
  } else {
    report["k_avg_measured"] = nullptr;
    report["r_acc_measured"] = nullptr;
    report["tokens"] = nullptr;
  }
  return report;
}

}  // namespace pars::pipeline
