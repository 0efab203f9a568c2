#pragma once

// Expected teacher-token cost per prompt and per accepted trace.
//
//   per_prompt        = K_avg (T_in + T_out) + T_select
//   per_prompt_judge  = 2 K_avg (T_in + T_out)
//   per_accepted      = per_prompt / r_acc

#include <cstdint>
#include <span>

#include <json.hpp>

#include "pars/error.hpp"

namespace pars::accounting {

struct TokenCostModel {
  double t_teach_in = 0.0;   // input tokens per generated trace
  double t_teach_out = 0.0;  // average output tokens per generated trace
  double t_select = 0.0;
  double k_avg = 0.0;
  double r_acc = 1.0;
  bool judge_pass = false;
};

inline double tokens_per_prompt(const TokenCostModel& m) {
  const double teacher = m.k_avg * (m.t_teach_in + m.t_teach_out);
  return m.judge_pass ? 2.0 * teacher : teacher + m.t_select;
}

inline double tokens_per_accepted(const TokenCostModel& m) {
  if (!(m.r_acc > 0.0)) throw Error(ErrorCode::ZeroAcceptance, "per-accepted cost needs r_acc > 0");
  return tokens_per_prompt(m) / m.r_acc;
}

// What one prompt actually spent.
struct PromptCost {
  int generated = 0;  // G: consumed candidates
  bool accepted = false;
  std::int64_t tokens_in = 0;   // consumed candidates only
  std::int64_t tokens_out = 0;
  std::int64_t overshoot_tokens_in = 0;
  std::int64_t overshoot_tokens_out = 0;
  std::int64_t select_tokens = 0;  // e.g. judge pass
};

struct MeasuredTotals {
  std::int64_t n_prompts = 0;
  std::int64_t n_accepted = 0;
  std::int64_t generated = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t overshoot_tokens_in = 0;
  std::int64_t overshoot_tokens_out = 0;
  std::int64_t select_tokens = 0;

  double tokens_per_prompt() const {
    return n_prompts == 0 ? 0.0
                          : static_cast<double>(tokens_in + tokens_out + select_tokens) / static_cast<double>(n_prompts);
  }
};

struct EmpiricalCost {
  TokenCostModel model;
  MeasuredTotals measured;
};

// Fits the model inputs from observed runs: K_avg = mean G, r_acc = accepted
// fraction, T_in/T_out = mean per consumed trace. Overshoot stays out of the fit.
inline EmpiricalCost empirical_cost(std::span<const PromptCost> runs, bool judge_pass = false) {
  if (runs.empty()) throw Error(ErrorCode::EmptyInput, "no runs to account");
  EmpiricalCost out;
  auto& t = out.measured;
  for (const auto& r : runs) {
    ++t.n_prompts;
    t.n_accepted += r.accepted ? 1 : 0;
    t.generated += r.generated;
    t.tokens_in += r.tokens_in;
    t.tokens_out += r.tokens_out;
    t.overshoot_tokens_in += r.overshoot_tokens_in;
    t.overshoot_tokens_out += r.overshoot_tokens_out;
    t.select_tokens += r.select_tokens;
  }
  auto& m = out.model;
  const double n = static_cast<double>(t.n_prompts);
  m.k_avg = static_cast<double>(t.generated) / n;
  m.r_acc = static_cast<double>(t.n_accepted) / n;
  if (t.generated > 0) {
    m.t_teach_in = static_cast<double>(t.tokens_in) / static_cast<double>(t.generated);
    m.t_teach_out = static_cast<double>(t.tokens_out) / static_cast<double>(t.generated);
  }
  m.t_select = static_cast<double>(t.select_tokens) / n;
  m.judge_pass = judge_pass;
  return out;
}

inline nlohmann::json to_json(const EmpiricalCost& c) {
  const auto& m = c.model;
  const auto& t = c.measured;
  nlohmann::json model = {{"t_teach_in", m.t_teach_in},   {"t_teach_out", m.t_teach_out},
                          {"t_select", m.t_select},       {"k_avg", m.k_avg},
                          {"r_acc", m.r_acc},             {"judge_pass", m.judge_pass},
                          {"tokens_per_prompt", tokens_per_prompt(m)}};
  model["tokens_per_accepted"] = m.r_acc > 0.0 ? nlohmann::json(tokens_per_accepted(m)) : nlohmann::json(nullptr);
  nlohmann::json measured = {{"n_prompts", t.n_prompts},
                             {"n_accepted", t.n_accepted},
                             {"generated", t.generated},
                             {"tokens_in", t.tokens_in},
                             {"tokens_out", t.tokens_out},
                             {"select_tokens", t.select_tokens},
                             {"overshoot_tokens_in", t.overshoot_tokens_in},
                             {"overshoot_tokens_out", t.overshoot_tokens_out},
                             {"tokens_per_prompt", t.tokens_per_prompt()}};
  return {{"model", std::move(model)}, {"measured", std::move(measured)}};
}

}  // namespace pars::accounting
