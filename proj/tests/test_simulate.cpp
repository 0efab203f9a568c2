#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pars/pipeline.hpp"

using namespace pars;
using namespace pars::pipeline;

namespace {

RunConfig quiet() {
  RunConfig cfg;
  cfg.use_sim = true;
  cfg.sim.prompt_bias_sd = 0;
  cfg.sim.sigma_base = 0;
  cfg.sim.sigma_per_temp = 0;
  cfg.sim.outlier_prob = 0;
  cfg.sim.out_of_range_prob = 0;
  return cfg;
}

}  // namespace

TEST(SimCorpus, WellFormedAndDeterministic) {
  const auto a = make_sim_corpus(200, 3);
  const auto b = make_sim_corpus(200, 3);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
    const auto p = resolve(a[i]);
    EXPECT_EQ(p.envelope.source, recipe::EnvelopeSource::PLQY_FILM);
    EXPECT_GE(p.envelope.value_percent, 50.0);
    EXPECT_LE(p.envelope.value_percent, 95.0);
    EXPECT_LE(p.ground_truth, p.envelope.value_percent);
    EXPECT_GT(p.ground_truth, 0.0);
  }
  EXPECT_NE(to_json(make_sim_corpus(1, 4)[0]).dump(), to_json(a[0]).dump());
}

TEST(Frontier, NoiselessTeacher) {
  const auto rows = simulate_frontier(quiet(), {Strategy::PARS, Strategy::FIRST, Strategy::RANDOM, Strategy::LONGEST,
                                                Strategy::SELF_CONSISTENCY, Strategy::JUDGE_RANKED},
                                      {1}, 100);
  double pars_tokens = 0, t_in = 0, t_out = 0;
  for (const auto& r : rows) {
    EXPECT_EQ(r.selected_mae, 0.0) << to_string(r.strategy);
    if (r.strategy == Strategy::PARS) {
      EXPECT_EQ(r.k_avg, 1.0);
      EXPECT_EQ(r.r_acc, 1.0);
      pars_tokens = r.tokens_per_prompt_measured;
      t_in = r.t_in;
      t_out = r.t_out;
    }
  }
  EXPECT_NEAR(pars_tokens, t_in + t_out, 1e-9);
  for (const auto& r : rows) {
    if (r.strategy != Strategy::PARS && r.strategy != Strategy::FIRST) {
      EXPECT_LT(pars_tokens, r.tokens_per_prompt_measured) << to_string(r.strategy);
      EXPECT_EQ(r.k_avg, 12.0);
    }
  }
}

TEST(Frontier, HaltingNeverCostsMoreGenerations) {
  RunConfig off;
  off.use_sim = true;
  off.pars.adaptive_halting = false;
  for (std::uint64_t seed : {11u, 12u}) {
    const auto on = simulate_one(RunConfig{}, Strategy::PARS, seed, 1000);
    const auto no = simulate_one(off, Strategy::PARS, seed, 1000);
    EXPECT_LE(on.k_avg, no.k_avg);
    EXPECT_LE(on.selected_max_error, 1.0);
    EXPECT_LE(no.selected_max_error, 1.0);
  }
}

TEST(Frontier, ParsBeatsRandomUnderDefaultNoise) {
  const auto rows = simulate_frontier(RunConfig{}, {Strategy::PARS, Strategy::RANDOM}, {21, 22}, 500);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    EXPECT_LT(rows[i].selected_mae, rows[i + 1].selected_mae);
    EXPECT_LE(rows[i].selected_mae, 1.0);
    EXPECT_EQ(rows[i].curated_violation_rate, 0.0);
  }
}

TEST(Frontier, CsvAndSummaryShape) {
  const auto rows = simulate_frontier(RunConfig{}, {Strategy::PARS, Strategy::FIRST}, {1, 2}, 30);
  const std::string csv = frontier_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("strategy,seed,", 0), 0u);
  const auto summary = frontier_summary(rows);
  ASSERT_EQ(summary["points"].size(), 2u);
  EXPECT_EQ(summary["points"][0]["strategy"], "pars");
  EXPECT_EQ(summary["points"][0]["seeds"], 2);
  EXPECT_DOUBLE_EQ(summary["points"][1]["k_avg"].get<double>(), 1.0);
}

TEST(Sweep, ZeroNoiseAcceptsEverything) {
  RunConfig cfg;
  cfg.use_sim = true;
  cfg.sim.outlier_prob = 0;
  cfg.sim.out_of_range_prob = 0;
  const auto rows = sweep_correctness_ratio(cfg, {0.0, 1.0, 3.0}, 300, 5);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].summary.r_acc, 1.0);
  EXPECT_EQ(rows[0].summary.selected_mae, 0.0);
  EXPECT_EQ(rows[0].summary.k_avg, 1.0);
  EXPECT_GT(rows[0].summary.r_acc, rows[2].summary.r_acc);
  EXPECT_GE(rows[1].summary.candidate_pass_rate, rows[2].summary.candidate_pass_rate);
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_THROW(sweep_correctness_ratio(cfg, {-1.0}, 10, 1), Error);
}

// Halting off, pure gaussian error: each candidate passes with
// p = P(|N(0, sigma)| <= 1.005) (answers sit on a 0.01 grid) and a prompt is
// accepted unless all twelve fail.
TEST(Sweep, AcceptanceMatchesNormalTail) {
  for (double sigma : {3.0, 10.0}) {
    RunConfig cfg = quiet();
    cfg.sim.sigma_base = sigma;
    cfg.pars.adaptive_halting = false;
    const int n = 4000;
    const auto s = simulate_one(cfg, Strategy::PARS, 77, n);
    const double p = std::erf(1.005 / (sigma * std::sqrt(2.0)));
    const double expect = 1.0 - std::pow(1.0 - p, 12);
    const double sd = std::sqrt(expect * (1 - expect) / n);
    EXPECT_NEAR(s.r_acc, expect, 4 * sd) << sigma;
    EXPECT_EQ(s.discard_histogram.count("budget_exhausted") ? s.discard_histogram.at("budget_exhausted") : 0,
              n - s.n_curated);
  }
}

TEST(Sweep, BiasWithoutSpreadHaltsInRoundOne) {
  RunConfig cfg = quiet();
  cfg.sim.bias = 3.0;
  const auto prompts = resolve_all(make_sim_corpus(200, 9));
  teacher::SimTeacher t(cfg.sim);
  const auto results = run_strategy(prompts, cfg, t, nullptr);
  for (const auto& r : results) {
    EXPECT_TRUE(r.selected.empty());
    ASSERT_TRUE(r.discard_reason);
    EXPECT_EQ(*r.discard_reason, "variance_halt");
    EXPECT_EQ(r.rounds.size(), 1u);
    EXPECT_EQ(r.cost.generated, 4);
  }
  EXPECT_EQ(summarize(results, cfg).r_acc, 0.0);
}

TEST(Simulate, SummaryJsonHandlesEmptySelections) {
  RunConfig cfg = quiet();
  cfg.sim.bias = 3.0;
  const auto j = to_json(simulate_one(cfg, Strategy::PARS, 1, 20));
  EXPECT_TRUE(j["selected_mae"].is_null());
  EXPECT_EQ(j["n_curated"], 0);
  EXPECT_EQ(j["discard_reason_histogram"]["variance_halt"], 20);
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  RunConfig a;
  a.use_sim = true;
  a.concurrency = 1;
  RunConfig b = a;
  b.concurrency = 7;
  for (Strategy s : {Strategy::PARS, Strategy::RANDOM, Strategy::JUDGE_RANKED}) {
    EXPECT_EQ(to_json(simulate_one(a, s, 3, 300)).dump(), to_json(simulate_one(b, s, 3, 300)).dump());
  }
}
