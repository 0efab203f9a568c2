#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pars/chat_client.hpp"
#include "pars/config.hpp"
#include "pars/error.hpp"
#include "pars/gates.hpp"
#include "pars/judge.hpp"
#include "pars/sampler.hpp"
#include "pars/teacher.hpp"

namespace pars::pipeline {

enum class Strategy { PARS, FIRST, RANDOM, SELF_CONSISTENCY, LONGEST, JUDGE_RANKED, MULTI_ALL };

inline constexpr Strategy kAllStrategies[] = {Strategy::FIRST,   Strategy::RANDOM,       Strategy::LONGEST,
                                              Strategy::SELF_CONSISTENCY, Strategy::JUDGE_RANKED,
                                              Strategy::MULTI_ALL, Strategy::PARS};

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::PARS: return "pars";
    case Strategy::FIRST: return "first";
    case Strategy::RANDOM: return "random";
    case Strategy::SELF_CONSISTENCY: return "self_consistency";
    case Strategy::LONGEST: return "longest";
    case Strategy::JUDGE_RANKED: return "judge";
    case Strategy::MULTI_ALL: return "multi";
  }
  return "pars";
}

inline Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::ConfigError, "unknown strategy '" + std::string(name) +
                                          "' (expected pars, first, random, self_consistency, longest, judge, multi)");
}

struct RunConfig {
  Strategy strategy = Strategy::PARS;
  int budget_k = 12;              // pool size for the fixed-K baselines
  double base_temperature = 0.6;  // temperature of the fixed-K baselines
  int concurrency = 4;            // prompt-level workers
  std::uint64_t seed = 0;
  bool use_sim = false;
  bool concurrent_rounds = true;  // remote teacher: dispatch a round's b requests at once
  gates::GateConfig gates;
  sampler::ParsConfig pars;
  teacher::SimTeacherConfig sim;
  chat::EndpointConfig teacher_endpoint;
  judge::JudgeConfig judge;
};

inline void validate(const RunConfig& cfg) {
  if (cfg.budget_k < 1) throw Error(ErrorCode::ConfigError, "budget_k must be >= 1");
  if (!(cfg.base_temperature > 0.0)) throw Error(ErrorCode::ConfigError, "base_temperature must be > 0");
  if (cfg.concurrency < 1) throw Error(ErrorCode::ConfigError, "concurrency must be >= 1");
  gates::validate(cfg.gates);
  sampler::validate(cfg.pars);
  teacher::validate(cfg.sim);
}

namespace detail {

inline void read_endpoint(const config::Document& doc, const std::string& section, chat::EndpointConfig& e) {
  doc.read(section + ".base_url", e.base_url);
  doc.read(section + ".path", e.path);
  doc.read(section + ".model_id", e.model_id);
  doc.read(section + ".api_key_env", e.api_key_env);
  doc.read(section + ".system_prompt", e.system_prompt);
  doc.read(section + ".temperature", e.default_temperature);
  doc.read(section + ".timeout_s", e.timeout_s);
  doc.read(section + ".max_attempts", e.max_attempts);
  doc.read(section + ".backoff_initial_ms", e.backoff_initial_ms);
  doc.read(section + ".backoff_multiplier", e.backoff_multiplier);
  doc.read(section + ".backoff_max_ms", e.backoff_max_ms);
  doc.read(section + ".max_concurrency", e.max_concurrency);
  doc.read(section + ".max_output_tokens", e.max_output_tokens);
  doc.read(section + ".chars_per_token", e.chars_per_token);
}

}  // namespace detail

inline RunConfig from_document(const config::Document& doc) {
  RunConfig cfg;
  if (auto s = doc.get<std::string>("run.strategy")) cfg.strategy = parse_strategy(*s);
  doc.read("run.budget_k", cfg.budget_k);
  doc.read("run.base_temperature", cfg.base_temperature);
  doc.read("run.concurrency", cfg.concurrency);
  doc.read("run.seed", cfg.seed);
  cfg.sim.seed = cfg.seed;
  doc.read("run.sim", cfg.use_sim);
  doc.read("run.concurrent_rounds", cfg.concurrent_rounds);

  doc.read("gates.eps_mae", cfg.gates.eps_mae);

  auto& p = cfg.pars;
  doc.read("pars.batch_size", p.batch_size_b);
  doc.read("pars.k_max", p.k_max);
  doc.read("pars.eps_var", p.eps_var);
  doc.read("pars.delta_imp", p.delta_imp);
  doc.read("pars.adaptive_halting", p.adaptive_halting);
  doc.read("pars.t_min", p.schedule.t_min);
  doc.read("pars.t_max", p.schedule.t_max);
  doc.read("pars.delta_t", p.schedule.delta_t);
  doc.read("pars.gamma", p.schedule.gamma);
  if (auto mode = doc.get<std::string>("pars.schedule")) {
    if (*mode == "additive") p.schedule.mode = sampler::TemperatureSchedule::Mode::Additive;
    else if (*mode == "multiplicative") p.schedule.mode = sampler::TemperatureSchedule::Mode::Multiplicative;
    else throw Error(ErrorCode::ConfigError, "pars.schedule must be 'additive' or 'multiplicative'");
  }

  auto& s = cfg.sim;
  doc.read("sim.seed", s.seed);
  doc.read("sim.bias", s.bias);
  doc.read("sim.prompt_bias_sd", s.prompt_bias_sd);
  doc.read("sim.sigma_base", s.sigma_base);
  doc.read("sim.sigma_per_temp", s.sigma_per_temp);
  doc.read("sim.outlier_prob", s.outlier_prob);
  doc.read("sim.outlier_scale", s.outlier_scale);
  doc.read("sim.out_of_range_prob", s.out_of_range_prob);
  doc.read("sim.token_len_log_mean", s.token_len_log_mean);
  doc.read("sim.token_len_log_sd", s.token_len_log_sd);

  detail::read_endpoint(doc, "teacher", cfg.teacher_endpoint);
  detail::read_endpoint(doc, "judge", cfg.judge.endpoint);
  doc.read("judge.parse_retries", cfg.judge.parse_retries);
  return cfg;
}

}  // namespace pars::pipeline
