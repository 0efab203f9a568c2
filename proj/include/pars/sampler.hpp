#pragma once

// Physics-aware rejection sampling for one prompt.
//
// Round r draws min(b, K_max - G) candidates at temperature T_r. The smallest-j
// candidate passing every gate is accepted. Otherwise the halting checks run in
// order (variance, improvement, budget) and the temperature advances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/gates.hpp"
#include "pars/prompt.hpp"
#include "pars/teacher.hpp"

namespace pars::sampler {

using teacher::Candidate;

struct TemperatureSchedule {
  enum class Mode { Additive, Multiplicative };

  double t_min = 0.6;
  double t_max = 1.0;
  Mode mode = Mode::Additive;
  double delta_t = 0.2;  // additive step
  double gamma = 1.5;    // multiplicative factor
};

struct ParsConfig {
  int batch_size_b = 4;
  int k_max = 12;
  double eps_var = 1.0;
  double delta_imp = 1.0;
  bool adaptive_halting = true;  // false skips the variance and improvement checks
  TemperatureSchedule schedule;
};

inline void validate(const ParsConfig& cfg) {
  const auto& s = cfg.schedule;
  if (cfg.batch_size_b < 1 || cfg.k_max < cfg.batch_size_b) {
    throw Error(ErrorCode::ConfigError, "PaRS requires 1 <= batch_size_b <= k_max");
  }
  if (!(cfg.eps_var >= 0.0) || std::isnan(cfg.delta_imp)) {
    throw Error(ErrorCode::ConfigError, "PaRS requires eps_var >= 0 and a numeric delta_imp");
  }
  if (!(s.t_min > 0.0) || !(s.t_max >= s.t_min)) {
    throw Error(ErrorCode::ConfigError, "temperature schedule requires 0 < t_min <= t_max");
  }
  if (s.mode == TemperatureSchedule::Mode::Additive && !(s.delta_t > 0.0)) {
    throw Error(ErrorCode::ConfigError, "additive schedule requires delta_t > 0");
  }
  if (s.mode == TemperatureSchedule::Mode::Multiplicative && !(s.gamma > 1.0)) {
    throw Error(ErrorCode::ConfigError, "multiplicative schedule requires gamma > 1");
  }
}

struct RoundStats {
  int round_index = 1;
  double temperature = 0.0;
  int batch_size = 0;     // candidates drawn this round
  int numeric_count = 0;  // candidates with an extracted answer
  double mean_error = std::numeric_limits<double>::quiet_NaN();
  double sample_variance = std::numeric_limits<double>::quiet_NaN();
  double best_error = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> improvement;

  bool has_numeric() const { return numeric_count > 0; }
};

enum class DiscardReason { VARIANCE_HALT, IMPROVEMENT_HALT, BUDGET_EXHAUSTED };

constexpr std::string_view to_string(DiscardReason r) {
  switch (r) {
    case DiscardReason::VARIANCE_HALT: return "variance_halt";
    case DiscardReason::IMPROVEMENT_HALT: return "improvement_halt";
    case DiscardReason::BUDGET_EXHAUSTED: return "budget_exhausted";
  }
  return "budget_exhausted";
}

struct ParsOutcome {
  std::optional<Candidate> accepted;
  std::optional<DiscardReason> discard_reason;
  std::vector<RoundStats> rounds;
  std::vector<Candidate> consumed;  // every candidate counted in G, in (round, j) order
  int candidates_generated_g = 0;
  std::int64_t tokens_in = 0;   // all spent tokens, overshoot included
  std::int64_t tokens_out = 0;
  std::int64_t overshoot_tokens_in = 0;  // completed but unconsumed after acceptance
  std::int64_t overshoot_tokens_out = 0;
};

// Mean, (n-1)-denominator variance (0 when n = 1) and minimum of one batch.
inline RoundStats round_stats(std::span<const double> errors, std::optional<double> prev_best) {
  if (errors.empty()) throw Error(ErrorCode::EmptyBatch, "round statistics need at least one error");
  for (double e : errors) {
    if (!std::isfinite(e) || e < 0.0) throw Error(ErrorCode::NonFiniteInput, "errors must be finite and >= 0");
  }
  const double n = static_cast<double>(errors.size());
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double mean = sum / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);

  RoundStats s;
  s.batch_size = static_cast<int>(errors.size());
  s.numeric_count = static_cast<int>(errors.size());
  s.mean_error = mean;
  s.sample_variance = errors.size() > 1 ? ss / (n - 1.0) : 0.0;
  s.best_error = *std::min_element(errors.begin(), errors.end());
  if (prev_best) s.improvement = *prev_best - s.best_error;
  return s;
}

// Called only after a round with no passing candidate.
inline std::optional<DiscardReason> should_halt(const RoundStats& stats, const ParsConfig& cfg,
                                                int cumulative_candidates) {
  if (cfg.adaptive_halting && stats.has_numeric()) {
    if (stats.sample_variance <= cfg.eps_var) return DiscardReason::VARIANCE_HALT;
    if (stats.round_index >= 2 && stats.improvement && *stats.improvement <= cfg.delta_imp) {
      return DiscardReason::IMPROVEMENT_HALT;
    }
  }
  if (cumulative_candidates >= cfg.k_max) return DiscardReason::BUDGET_EXHAUSTED;
  return std::nullopt;
}

inline double next_temperature(double t, const TemperatureSchedule& s) {
  const double raised = s.mode == TemperatureSchedule::Mode::Additive ? t + s.delta_t : s.gamma * t;
  return std::min(s.t_max, raised);
}

struct RequestOptions {
  int max_output_tokens = 4096;
  std::string model_id;
  // Dispatch every request of a round concurrently. When false, candidates are
  // generated in j order and the round stops at the first passer.
  bool concurrent_rounds = false;
};

namespace detail {

inline std::vector<Candidate> dispatch_concurrent(teacher::TraceGenerator& teacher,
                                                  const std::vector<teacher::GenerationRequest>& requests,
                                                  const std::vector<teacher::GenerationContext>& contexts) {
  std::vector<std::future<Candidate>> futures;
  futures.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&teacher, &requests, &contexts, i] {
      return teacher.generate(requests[i], contexts[i]);
    }));
  }
  // Wait for every request so no future outlives the round.
  std::vector<Candidate> out;
  std::exception_ptr first_error;
  for (auto& f : futures) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace detail

inline ParsOutcome run_pars(const ResolvedPrompt& prompt, teacher::TraceGenerator& teacher,
                            const gates::GateConfig& gate_cfg, const ParsConfig& cfg,
                            const RequestOptions& options = {}) {
  validate(cfg);
  gates::validate(gate_cfg);

  ParsOutcome out;
  std::optional<double> prev_best;
  double temperature = cfg.schedule.t_min;

  const auto passes = [&](const Candidate& c) {
    return c.prediction && gates::check(*c.prediction, prompt.ground_truth, prompt.envelope, gate_cfg).pass;
  };

  for (int round = 1;; ++round) {
    const int n = std::min(cfg.batch_size_b, cfg.k_max - out.candidates_generated_g);

    std::vector<teacher::GenerationRequest> requests(n);
    std::vector<teacher::GenerationContext> contexts(n);
    for (int j = 1; j <= n; ++j) {
      requests[j - 1] = {prompt.prompt_text, temperature, options.max_output_tokens, options.model_id};
      contexts[j - 1] = {prompt.id, prompt.ground_truth, round, j};
    }

    std::vector<Candidate> consumed;
    std::optional<std::size_t> accepted_at;
    if (options.concurrent_rounds && !teacher.deterministic()) {
      std::vector<Candidate> batch = detail::dispatch_concurrent(teacher, requests, contexts);
      std::sort(batch.begin(), batch.end(), teacher::earlier);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        out.tokens_in += batch[i].tokens_in;
        out.tokens_out += batch[i].tokens_out;
        if (accepted_at) {
          out.overshoot_tokens_in += batch[i].tokens_in;
          out.overshoot_tokens_out += batch[i].tokens_out;
          continue;
        }
        consumed.push_back(batch[i]);
        if (passes(batch[i])) accepted_at = i;
      }
    } else {
      for (int j = 0; j < n && !accepted_at; ++j) {
        consumed.push_back(teacher.generate(requests[j], contexts[j]));
        out.tokens_in += consumed.back().tokens_in;
        out.tokens_out += consumed.back().tokens_out;
        if (passes(consumed.back())) accepted_at = static_cast<std::size_t>(j);
      }
    }

    std::vector<double> errors;
    for (const auto& c : consumed) {
      if (c.prediction) errors.push_back(std::fabs(*c.prediction - prompt.ground_truth));
    }
    RoundStats stats;
    if (!errors.empty()) stats = round_stats(errors, prev_best);
    stats.round_index = round;
    stats.temperature = temperature;
    stats.batch_size = static_cast<int>(consumed.size());
    out.rounds.push_back(stats);

    out.candidates_generated_g += static_cast<int>(consumed.size());
    for (auto& c : consumed) out.consumed.push_back(std::move(c));

    if (accepted_at) {
      out.accepted = out.consumed.back();
      return out;
    }
    if (auto reason = should_halt(stats, cfg, out.candidates_generated_g)) {
      out.discard_reason = reason;
      return out;
    }
    prev_best = stats.has_numeric() ? std::optional<double>(stats.best_error) : std::nullopt;
    temperature = next_temperature(temperature, cfg.schedule);
  }
}

inline nlohmann::json to_json(const RoundStats& s) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"round_index", s.round_index},
          {"temperature", s.temperature},
          {"batch_size", s.batch_size},
          {"numeric_count", s.numeric_count},
          {"mean_error", num(s.mean_error)},
          {"sample_variance", num(s.sample_variance)},
          {"best_error", num(s.best_error)},
          {"improvement", s.improvement ? num(*s.improvement) : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const ParsOutcome& o) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : o.rounds) rounds.push_back(to_json(r));
  nlohmann::json consumed = nlohmann::json::array();
  for (const auto& c : o.consumed) consumed.push_back(teacher::to_json(c));
  return {{"accepted", o.accepted ? teacher::to_json(*o.accepted) : nlohmann::json(nullptr)},
          {"discard_reason", o.discard_reason ? nlohmann::json(to_string(*o.discard_reason)) : nlohmann::json(nullptr)},
          {"rounds", std::move(rounds)},
          {"consumed", std::move(consumed)},
          {"candidates_generated_g", o.candidates_generated_g},
          {"tokens_in", o.tokens_in},
          {"tokens_out", o.tokens_out},
          {"overshoot_tokens_in", o.overshoot_tokens_in},
          {"overshoot_tokens_out", o.overshoot_tokens_out}};
}

}  // namespace pars::sampler
