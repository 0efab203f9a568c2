#pragma once

// Runs one selection strategy on one prompt and turns the result into rows.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pars/accounting.hpp"
#include "pars/gates.hpp"
#include "pars/judge.hpp"
#include "pars/pipeline/records.hpp"
#include "pars/pipeline/run_config.hpp"
#include "pars/rng.hpp"
#include "pars/sampler.hpp"
#include "pars/selectors.hpp"

namespace pars::pipeline {

using teacher::Candidate;

struct PromptResult {
  ResolvedPrompt prompt;
  Strategy strategy = Strategy::PARS;
  std::vector<Candidate> selected;          // empty when discarded
  std::optional<std::string> discard_reason;
  std::vector<Candidate> pool;              // every consumed candidate
  std::vector<sampler::RoundStats> rounds;  // PaRS only
  accounting::PromptCost cost;
  std::optional<double> judge_composite;    // composite of the selected trace
  int judge_unparseable = 0;
};

inline std::uint64_t selection_seed(std::uint64_t run_seed, const std::string& prompt_id) {
  return rng::combine(run_seed, rng::fnv1a(prompt_id));
}

inline std::vector<Candidate> generate_pool(const ResolvedPrompt& p, const RunConfig& cfg,
                                            teacher::TraceGenerator& teacher, int k) {
  std::vector<Candidate> pool;
  pool.reserve(k);
  for (int j = 1; j <= k; ++j) {
    const teacher::GenerationRequest req{p.prompt_text, cfg.base_temperature, cfg.teacher_endpoint.max_output_tokens,
                                         cfg.teacher_endpoint.model_id};
    pool.push_back(teacher.generate(req, {p.id, p.ground_truth, 1, j}));
  }
  return pool;
}

inline PromptResult process_prompt(const ResolvedPrompt& prompt, const RunConfig& cfg,
                                   teacher::TraceGenerator& teacher, judge::JudgeBackend* judge_backend) {
  PromptResult r;
  r.prompt = prompt;
  r.strategy = cfg.strategy;

  if (cfg.strategy == Strategy::PARS) {
    const sampler::RequestOptions opts{cfg.teacher_endpoint.max_output_tokens, cfg.teacher_endpoint.model_id,
                                       cfg.concurrent_rounds};
    sampler::ParsOutcome o = sampler::run_pars(prompt, teacher, cfg.gates, cfg.pars, opts);
    if (o.accepted) r.selected.push_back(*o.accepted);
    if (o.discard_reason) r.discard_reason = std::string(sampler::to_string(*o.discard_reason));
    r.pool = std::move(o.consumed);
    r.rounds = std::move(o.rounds);
    r.cost.generated = o.candidates_generated_g;
    r.cost.accepted = o.accepted.has_value();
    r.cost.overshoot_tokens_in = o.overshoot_tokens_in;
    r.cost.overshoot_tokens_out = o.overshoot_tokens_out;
    r.cost.tokens_in = o.tokens_in - o.overshoot_tokens_in;
    r.cost.tokens_out = o.tokens_out - o.overshoot_tokens_out;
    return r;
  }

  const int k = cfg.strategy == Strategy::FIRST ? 1 : cfg.budget_k;
  r.pool = generate_pool(prompt, cfg, teacher, k);
  r.cost.generated = k;
  for (const auto& c : r.pool) {
    r.cost.tokens_in += c.tokens_in;
    r.cost.tokens_out += c.tokens_out;
  }

  try {
    switch (cfg.strategy) {
      case Strategy::FIRST: r.selected = selectors::select_first(r.pool).selected; break;
      case Strategy::RANDOM:
        r.selected = selectors::select_random(r.pool, selection_seed(cfg.seed, prompt.id)).selected;
        break;
      case Strategy::SELF_CONSISTENCY: r.selected = selectors::select_self_consistency(r.pool).selected; break;
      case Strategy::LONGEST: r.selected = selectors::select_longest(r.pool).selected; break;
      case Strategy::MULTI_ALL: r.selected = selectors::select_multi(r.pool).selected; break;
      case Strategy::JUDGE_RANKED: {
        if (judge_backend == nullptr) throw Error(ErrorCode::ConfigError, "judge strategy needs a judge backend");
        std::vector<std::optional<judge::RubricScore>> scores;
        for (const auto& c : r.pool) {
          try {
            const auto s = judge::score_trace(*judge_backend, prompt.prompt_text, c.trace, cfg.judge.parse_retries);
            r.cost.select_tokens += s.tokens_in + s.tokens_out;
            scores.emplace_back(s.score);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::UnparseableVerdict) throw;
            ++r.judge_unparseable;
            scores.emplace_back(std::nullopt);
          }
        }
        const auto sel = judge::select_judge_ranked(r.pool, scores);
        r.selected = sel.selected;
        for (std::size_t i = 0; i < r.pool.size(); ++i) {
          if (scores[i] && r.pool[i] == r.selected.front()) r.judge_composite = scores[i]->composite();
        }
        break;
      }
      case Strategy::PARS: break;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoNumericAnswers && e.code() != ErrorCode::NoScoredCandidates) throw;
    r.discard_reason = std::string(to_string(e.code()));
  }
  r.cost.accepted = !r.selected.empty();
  return r;
}

inline json cost_fields(const PromptResult& r) {
  return {{"prompt_generated", r.cost.generated},
          {"prompt_tokens_in", r.cost.tokens_in},
          {"prompt_tokens_out", r.cost.tokens_out},
          {"overshoot_tokens_in", r.cost.overshoot_tokens_in},
          {"overshoot_tokens_out", r.cost.overshoot_tokens_out},
          {"select_tokens", r.cost.select_tokens}};
}

inline std::vector<json> curated_rows(const PromptResult& r, const gates::GateConfig& gate_cfg) {
  std::vector<json> rows;
  for (const auto& c : r.selected) {
    json row = {{"schema", kCuratedSchema},
                {"prompt_id", r.prompt.id},
                {"prompt_text", r.prompt.prompt_text},
                {"trace", c.trace},
                {"answer", c.prediction ? json(*c.prediction) : json(nullptr)},
                {"strategy", to_string(r.strategy)},
                {"round_index", c.round_index},
                {"batch_index_j", c.batch_index_j},
                {"temperature", c.temperature},
                {"tokens_in", c.tokens_in},
                {"tokens_out", c.tokens_out},
                {"tokens_estimated", c.tokens_estimated},
                {"ground_truth_y", r.prompt.ground_truth},
                {"envelope_percent", r.prompt.envelope.value_percent}};
    row["accepted"] = c.prediction &&
                      gates::check(*c.prediction, r.prompt.ground_truth, r.prompt.envelope, gate_cfg).pass;
    row.update(cost_fields(r));
    if (r.strategy == Strategy::JUDGE_RANKED) {
      row["judge_composite"] = r.judge_composite ? json(*r.judge_composite) : json(nullptr);
      row["judge_unparseable"] = r.judge_unparseable;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json discard_row(const PromptResult& r) {
  json rounds = json::array();
  for (const auto& s : r.rounds) rounds.push_back(sampler::to_json(s));
  json row = {{"schema", kDiscardSchema},
              {"prompt_id", r.prompt.id},
              {"strategy", to_string(r.strategy)},
              {"reason", r.discard_reason.value_or("")},
              {"ground_truth_y", r.prompt.ground_truth},
              {"envelope_percent", r.prompt.envelope.value_percent},
              {"rounds", std::move(rounds)}};
  row.update(cost_fields(r));
  return row;
}

inline json rejected_row(const std::string& prompt_id, Strategy strategy, const Error& e) {
  return {{"schema", kDiscardSchema},
          {"prompt_id", prompt_id},
          {"strategy", to_string(strategy)},
          {"reason", "rejected_input"},
          {"error", e.what()},
          {"rounds", json::array()}};
}

}  // namespace pars::pipeline
