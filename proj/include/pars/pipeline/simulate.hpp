#pragma once

// Seeded Monte-Carlo experiments against the simulated teacher: a synthetic
// recipe corpus, the compute-accuracy frontier, and the correctness-ratio sweep.
// Everything here is in memory and a pure function of its configuration.

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pars/accounting.hpp"
#include "pars/gates.hpp"
#include "pars/judge.hpp"
#include "pars/numeric.hpp"
#include "pars/pipeline/run_config.hpp"
#include "pars/pipeline/strategies.hpp"
#include "pars/prompt.hpp"
#include "pars/rng.hpp"
#include "pars/teacher.hpp"

namespace pars::pipeline {

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace detail

// Synthetic QD-LED recipes. The target is film PLQY scaled by an outcoupling and
// a charge-balance factor, so it always sits under the PLQY envelope.
inline std::vector<PromptRecord> make_sim_corpus(int n, std::uint64_t seed) {
  static constexpr const char* kHil[] = {"PEDOT:PSS", "MoO3", "HAT-CN"};
  static constexpr const char* kHtl[] = {"TFB", "PVK", "poly-TPD", "TCTA"};
  static constexpr const char* kQd[] = {"CdSe/ZnS", "InP/ZnSe/ZnS", "CdSe/CdS/ZnS", "ZnSeTe/ZnSe/ZnS"};
  static constexpr const char* kEtl[] = {"ZnO nanoparticles", "ZnMgO nanoparticles", "TPBi"};
  static constexpr const char* kCathode[] = {"Al", "Ag"};

  std::vector<PromptRecord> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    rng::KeyedStream s(seed, {0x434F'5250'5553ULL, static_cast<std::uint64_t>(i)});
    const double plqy = 0.5 + 0.45 * s.uniform();
    const double outcoupling = 0.2 + 0.1 * s.uniform();
    const double balance = 0.5 + 0.5 * s.uniform();
    const double y = std::round(plqy * 100.0 * outcoupling * balance * 100.0) / 100.0;
    const double emission = 460.0 + 170.0 * s.uniform();

    std::string r;
    r += "QD-LED recipe:\n";
    r += "substrate:\n";
    r += "  type: ITO/glass, thickness_nm: 150, rsheet_ohm_sq: " + detail::fixed(10.0 + 10.0 * s.uniform(), 1) + "\n";
    r += "stack:\n";
    r += "  [HIL layer]\n";
    r += std::string("    substances: ") + kHil[s.index(3)] + ", thickness_nm: " +
         detail::fixed(20.0 + 30.0 * s.uniform(), 0) + "\n";
    r += "    process: spin (4000 rpm, 60 s); annealing (" + detail::fixed(120.0 + 30.0 * s.uniform(), 0) +
         " C, 10 min, air)\n";
    r += "  [HTL layer]\n";
    r += std::string("    substances: ") + kHtl[s.index(4)] + ", thickness_nm: " +
         detail::fixed(20.0 + 25.0 * s.uniform(), 0) + ", HOMO_eV: " + detail::fixed(-5.0 - 0.6 * s.uniform(), 2) +
         "\n";
    r += "  [EML layer]\n";
    r += std::string("    substances: ") + kQd[s.index(4)] + " core/shell QDs, emission_peak_nm: " +
         detail::fixed(emission, 0) + ", FWHM_nm: " + detail::fixed(18.0 + 20.0 * s.uniform(), 0) + "\n";
    r += "    thickness_nm: " + detail::fixed(15.0 + 25.0 * s.uniform(), 0) +
         ", process: spin (2000 rpm, 30 s); annealing (80 C, 5 min)\n";
    r += "    PLQY_solution_fraction: " + detail::fixed(std::min(0.99, plqy + 0.04), 2) + ", " +
         std::string(recipe::kPlqyFilmKey) + ": " + detail::fixed(plqy, 4) + "\n";
    r += "  [ETL layer]\n";
    r += std::string("    substances: ") + kEtl[s.index(3)] + ", thickness_nm: " +
         detail::fixed(30.0 + 30.0 * s.uniform(), 0) + "\n";
    r += std::string("  [cathode layer]\n    substances: ") + kCathode[s.index(2)] + ", thickness_nm: 100\n";

    PromptRecord rec;
    rec.id = "sim-" + std::to_string(seed) + "-" + std::to_string(i);
    rec.recipe_text = std::move(r);
    rec.ground_truth_y = y;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<ResolvedPrompt> resolve_all(const std::vector<PromptRecord>& records) {
  std::vector<ResolvedPrompt> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(resolve(r));
  return out;
}

// Runs one strategy over every prompt; results keep input order.
inline std::vector<PromptResult> run_strategy(const std::vector<ResolvedPrompt>& prompts, const RunConfig& cfg,
                                              teacher::TraceGenerator& teacher, judge::JudgeBackend* judge_backend) {
  std::vector<PromptResult> results(prompts.size());
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, cfg.concurrency)),
                                                      prompts.size());
  const auto chunk = [&](std::size_t t) {
    for (std::size_t i = t; i < prompts.size(); i += n_threads) {
      results[i] = process_prompt(prompts[i], cfg, teacher, judge_backend);
    }
  };
  if (n_threads <= 1) {
    if (!prompts.empty()) chunk(0);
    return results;
  }
  std::vector<std::exception_ptr> errors(n_threads);
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      threads.emplace_back([&, t] {
        try {
          chunk(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

struct StrategySummary {
  Strategy strategy = Strategy::PARS;
  std::uint64_t seed = 0;
  int n_prompts = 0;
  int n_curated = 0;
  double k_avg = 0.0;
  double r_acc = 0.0;
  double selected_mae = NAN;      // over selected traces with an answer
  double selected_max_error = NAN;
  double pool_mae = NAN;          // over every consumed candidate with an answer
  double candidate_pass_rate = 0.0;
  double curated_violation_rate = 0.0;
  double pool_violation_rate = 0.0;
  double tokens_per_prompt_measured = 0.0;
  double tokens_per_prompt_model = 0.0;
  double fixed_k_tokens = 0.0;    // K * (t_in + t_out) at the fitted per-trace sizes
  double t_in = 0.0;
  double t_out = 0.0;
  std::int64_t overshoot_tokens = 0;
  std::map<std::string, int> discard_histogram;
};

inline StrategySummary summarize(const std::vector<PromptResult>& results, const RunConfig& cfg) {
  StrategySummary s;
  s.strategy = cfg.strategy;
  s.seed = cfg.seed;
  s.n_prompts = static_cast<int>(results.size());
  if (results.empty()) return s;

  std::vector<accounting::PromptCost> costs;
  double sel_sum = 0.0, sel_max = 0.0, pool_sum = 0.0;
  int sel_n = 0, pool_n = 0, pool_total = 0, pool_pass = 0, sel_viol = 0, pool_viol = 0;
  for (const auto& r : results) {
    costs.push_back(r.cost);
    if (r.discard_reason) ++s.discard_histogram[*r.discard_reason];
    s.n_curated += static_cast<int>(r.selected.size());
    for (const auto& c : r.selected) {
      if (!c.prediction) continue;
      const double e = std::fabs(*c.prediction - r.prompt.ground_truth);
      sel_sum += e;
      sel_max = std::max(sel_max, e);
      ++sel_n;
      sel_viol += gates::violates(*c.prediction, r.prompt.envelope.value_percent, cfg.gates) ? 1 : 0;
    }
    for (const auto& c : r.pool) {
      ++pool_total;
      if (!c.prediction) continue;
      pool_sum += std::fabs(*c.prediction - r.prompt.ground_truth);
      ++pool_n;
      pool_viol += gates::violates(*c.prediction, r.prompt.envelope.value_percent, cfg.gates) ? 1 : 0;
      pool_pass += gates::check(*c.prediction, r.prompt.ground_truth, r.prompt.envelope, cfg.gates).pass ? 1 : 0;
    }
  }
  const auto cost = accounting::empirical_cost(costs, cfg.strategy == Strategy::JUDGE_RANKED);
  s.k_avg = cost.model.k_avg;
  s.r_acc = cost.model.r_acc;
  s.t_in = cost.model.t_teach_in;
  s.t_out = cost.model.t_teach_out;
  s.tokens_per_prompt_measured = cost.measured.tokens_per_prompt();
  s.tokens_per_prompt_model = accounting::tokens_per_prompt(cost.model);
  s.fixed_k_tokens = cfg.budget_k * (s.t_in + s.t_out);
  s.overshoot_tokens = cost.measured.overshoot_tokens_in + cost.measured.overshoot_tokens_out;
  if (sel_n > 0) {
    s.selected_mae = sel_sum / sel_n;
    s.selected_max_error = sel_max;
    s.curated_violation_rate = static_cast<double>(sel_viol) / sel_n;
  }
  if (pool_n > 0) {
    s.pool_mae = pool_sum / pool_n;
    s.pool_violation_rate = static_cast<double>(pool_viol) / pool_n;
  }
  if (pool_total > 0) s.candidate_pass_rate = static_cast<double>(pool_pass) / pool_total;
  return s;
}

inline nlohmann::json to_json(const StrategySummary& s) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"strategy", to_string(s.strategy)},
          {"seed", s.seed},
          {"n_prompts", s.n_prompts},
          {"n_curated", s.n_curated},
          {"k_avg", s.k_avg},
          {"r_acc", s.r_acc},
          {"selected_mae", num(s.selected_mae)},
          {"selected_max_error", num(s.selected_max_error)},
          {"pool_mae", num(s.pool_mae)},
          {"candidate_pass_rate", s.candidate_pass_rate},
          {"curated_violation_rate", s.curated_violation_rate},
          {"pool_violation_rate", s.pool_violation_rate},
          {"tokens_per_prompt_measured", s.tokens_per_prompt_measured},
          {"tokens_per_prompt_model", s.tokens_per_prompt_model},
          {"fixed_k_tokens", s.fixed_k_tokens},
          {"overshoot_tokens", s.overshoot_tokens},
          {"discard_reason_histogram", s.discard_histogram}};
}

// One run of `strategy` on a fresh seeded corpus. The teacher, corpus and judge
// all derive from `seed`, so paired comparisons share every draw.
inline StrategySummary simulate_one(const RunConfig& base, Strategy strategy, std::uint64_t seed, int n_prompts) {
  RunConfig cfg = base;
  cfg.strategy = strategy;
  cfg.seed = seed;
  cfg.sim.seed = seed;
  validate(cfg);
  const auto prompts = resolve_all(make_sim_corpus(n_prompts, seed));
  teacher::SimTeacher teacher(cfg.sim, cfg.teacher_endpoint.chars_per_token);
  judge::SimJudge judge_backend(seed);
  return summarize(run_strategy(prompts, cfg, teacher, &judge_backend), cfg);
}

inline std::vector<StrategySummary> simulate_frontier(const RunConfig& base, const std::vector<Strategy>& strategies,
                                                      const std::vector<std::uint64_t>& seeds, int n_prompts) {
  std::vector<StrategySummary> rows;
  for (std::uint64_t seed : seeds) {
    for (Strategy s : strategies) rows.push_back(simulate_one(base, s, seed, n_prompts));
  }
  return rows;
}

inline std::string frontier_csv(const std::vector<StrategySummary>& rows) {
  std::ostringstream os;
  os << "strategy,seed,n_prompts,n_curated,k_avg,r_acc,tokens_per_prompt,tokens_per_prompt_model,selected_mae,"
        "pool_mae,curated_violation_rate\n";
  const auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
  for (const auto& r : rows) {
    os << to_string(r.strategy) << ',' << r.seed << ',' << r.n_prompts << ',' << r.n_curated << ','
       << num(r.k_avg) << ',' << num(r.r_acc) << ',' << num(r.tokens_per_prompt_measured) << ','
       << num(r.tokens_per_prompt_model) << ',' << num(r.selected_mae) << ',' << num(r.pool_mae) << ','
       << num(r.curated_violation_rate) << '\n';
  }
  return os.str();
}

// Per-strategy means over seeds, the shape a frontier plot needs.
inline nlohmann::json frontier_summary(const std::vector<StrategySummary>& rows) {
  struct Acc {
    double tokens = 0, mae = 0, k = 0, r = 0;
    int n = 0, mae_n = 0;
  };
  std::map<std::string, Acc> acc;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    const std::string key(to_string(r.strategy));
    if (!acc.count(key)) order.push_back(key);
    auto& a = acc[key];
    a.tokens += r.tokens_per_prompt_measured;
    a.k += r.k_avg;
    a.r += r.r_acc;
    ++a.n;
    if (std::isfinite(r.selected_mae)) {
      a.mae += r.selected_mae;
      ++a.mae_n;
    }
  }
  nlohmann::json points = nlohmann::json::array();
  for (const auto& key : order) {
    const auto& a = acc[key];
    points.push_back({{"strategy", key},
                      {"seeds", a.n},
                      {"tokens_per_prompt", a.tokens / a.n},
                      {"k_avg", a.k / a.n},
                      {"r_acc", a.r / a.n},
                      {"selected_mae", a.mae_n > 0 ? nlohmann::json(a.mae / a.mae_n) : nlohmann::json(nullptr)}});
  }
  return {{"points", points}};
}

struct SweepRow {
  double noise_scale = 1.0;
  StrategySummary summary;
};

// Scales every noise source of the sim teacher (spread, per-prompt offset) and
// reports the PaRS acceptance ratio and curated-set error at each level.
inline std::vector<SweepRow> sweep_correctness_ratio(const RunConfig& base, const std::vector<double>& noise_scales,
                                                     int n_prompts, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  for (double scale : noise_scales) {
    if (!(scale >= 0.0)) throw Error(ErrorCode::ConfigError, "noise scales must be >= 0");
    RunConfig cfg = base;
    cfg.sim.sigma_base *= scale;
    cfg.sim.sigma_per_temp *= scale;
    cfg.sim.prompt_bias_sd *= scale;
    rows.push_back({scale, simulate_one(cfg, Strategy::PARS, seed, n_prompts)});
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "noise_scale,acceptance_ratio,candidate_pass_rate,k_avg,curated_mae,curated_max_error,"
        "curated_violation_rate,pool_violation_rate\n";
  const auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
  for (const auto& r : rows) {
    const auto& s = r.summary;
    os << num(r.noise_scale) << ',' << num(s.r_acc) << ',' << num(s.candidate_pass_rate) << ',' << num(s.k_avg)
       << ',' << num(s.selected_mae) << ',' << num(s.selected_max_error) << ',' << num(s.curated_violation_rate)
       << ',' << num(s.pool_violation_rate) << '\n';
  }
  return os.str();
}

}  // namespace pars::pipeline
