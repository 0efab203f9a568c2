#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pars/accounting.hpp"
#include "pars/pipeline/simulate.hpp"

using namespace pars;
using namespace pars::accounting;

namespace {

TokenCostModel worked(bool judge, double r_acc = 1.0) {
  TokenCostModel m;
  m.t_teach_in = 900;
  m.t_teach_out = 2000;
  m.t_select = 0;
  m.k_avg = 6.4;
  m.r_acc = r_acc;
  m.judge_pass = judge;
  return m;
}

}  // namespace

TEST(Accounting, WorkedExamplePerPrompt) {
  EXPECT_NEAR(tokens_per_prompt(worked(false)), 18560.0, 1e-9);
  EXPECT_NEAR(tokens_per_prompt(worked(true)), 37120.0, 1e-9);
}

TEST(Accounting, WorkedExamplePerAccepted) {
  EXPECT_NEAR(tokens_per_accepted(worked(false, 0.8)), 23200.0, 1e-9);
  EXPECT_NEAR(tokens_per_accepted(worked(true, 0.8)), 46400.0, 1e-9);
  EXPECT_DOUBLE_EQ(tokens_per_accepted(worked(false, 1.0)), tokens_per_prompt(worked(false, 1.0)));
}

TEST(Accounting, EmptyBudgetCostsNothing) {
  TokenCostModel m = worked(false);
  m.k_avg = 0;
  EXPECT_EQ(tokens_per_prompt(m), 0.0);
}

TEST(Accounting, SelectTermOnlyWithoutJudge) {
  TokenCostModel m = worked(false);
  m.t_select = 100;
  EXPECT_NEAR(tokens_per_prompt(m), 18660.0, 1e-9);
  m.judge_pass = true;
  EXPECT_NEAR(tokens_per_prompt(m), 37120.0, 1e-9);
}

TEST(Accounting, ZeroAcceptance) {
  try {
    tokens_per_accepted(worked(false, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroAcceptance);
  }
}

TEST(EmpiricalCost, ArithmeticExamples) {
  std::vector<PromptCost> runs{{1, true, 100, 200, 0, 0, 0}, {3, false, 300, 600, 40, 80, 0}};
  const auto c = empirical_cost(runs);
  EXPECT_DOUBLE_EQ(c.model.k_avg, 2.0);
  EXPECT_DOUBLE_EQ(c.model.r_acc, 0.5);
  EXPECT_DOUBLE_EQ(c.model.t_teach_in, 100.0);
  EXPECT_DOUBLE_EQ(c.model.t_teach_out, 200.0);
  EXPECT_EQ(c.measured.overshoot_tokens_in, 40);
  EXPECT_EQ(c.measured.overshoot_tokens_out, 80);
  EXPECT_EQ(c.measured.tokens_in + c.measured.tokens_out, 1200);

  std::vector<PromptCost> all(5, PromptCost{1, true, 10, 20, 0, 0, 0});
  const auto d = empirical_cost(all);
  EXPECT_EQ(d.model.k_avg, 1.0);
  EXPECT_EQ(d.model.r_acc, 1.0);
  EXPECT_THROW(empirical_cost({}), Error);
}

TEST(EmpiricalCost, JsonCarriesBothViews) {
  std::vector<PromptCost> runs{{2, false, 10, 10, 0, 0, 0}};
  const auto j = to_json(empirical_cost(runs));
  EXPECT_TRUE(j["model"]["tokens_per_accepted"].is_null());
  EXPECT_EQ(j["measured"]["generated"], 2);
  EXPECT_EQ(j["model"]["tokens_per_prompt"], 20.0);
}

TEST(EmpiricalCost, FixedBaselineReportsFullBudget) {
  pipeline::RunConfig cfg;
  cfg.strategy = pipeline::Strategy::SELF_CONSISTENCY;
  cfg.use_sim = true;
  cfg.concurrency = 1;
  teacher::SimTeacher t(cfg.sim);
  const auto prompts = pipeline::resolve_all(pipeline::make_sim_corpus(50, 1));
  const auto results = pipeline::run_strategy(prompts, cfg, t, nullptr);
  std::vector<PromptCost> costs;
  for (const auto& r : results) costs.push_back(r.cost);
  EXPECT_EQ(empirical_cost(costs).model.k_avg, 12.0);
}

// The fitted model must predict what the run log adds up to.
TEST(EmpiricalCost, SimRunModelMatchesMeasuredTokens) {
  pipeline::RunConfig cfg;
  cfg.use_sim = true;
  cfg.seed = 42;
  cfg.sim.seed = 42;
  teacher::SimTeacher t(cfg.sim);
  const auto prompts = pipeline::resolve_all(pipeline::make_sim_corpus(1000, 42));
  const auto results = pipeline::run_strategy(prompts, cfg, t, nullptr);

  std::int64_t oracle = 0, generated = 0;
  std::vector<PromptCost> costs;
  for (const auto& r : results) {
    for (const auto& c : r.pool) oracle += c.tokens_in + c.tokens_out;
    generated += static_cast<std::int64_t>(r.pool.size());
    costs.push_back(r.cost);
  }
  const auto fit = empirical_cost(costs);
  EXPECT_EQ(fit.measured.generated, generated);
  EXPECT_EQ(fit.measured.tokens_in + fit.measured.tokens_out, oracle);
  const double predicted = tokens_per_prompt(fit.model) * static_cast<double>(results.size());
  EXPECT_LE(std::fabs(predicted - static_cast<double>(oracle)) / static_cast<double>(oracle), 0.05);
  EXPECT_GT(fit.model.r_acc, 0.0);
  EXPECT_NEAR(tokens_per_accepted(fit.model) * fit.model.r_acc, tokens_per_prompt(fit.model), 1e-9);
}

TEST(AccountingProperty, IdentityAndMonotonicity) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> tok(0, 5000), k(0, 12), r(0.01, 1), bump(0, 100);
  std::uniform_int_distribution<int> field(0, 3), coin(0, 1);
  for (int i = 0; i < 20000; ++i) {
    TokenCostModel m{tok(gen), tok(gen), tok(gen), k(gen), r(gen), coin(gen) == 1};
    const double per_prompt = tokens_per_prompt(m);
    ASSERT_NEAR(tokens_per_accepted(m) * m.r_acc, per_prompt, 1e-9 * std::max(1.0, per_prompt));
    TokenCostModel up = m;
    switch (field(gen)) {
      case 0: up.t_teach_in += bump(gen); break;
      case 1: up.t_teach_out += bump(gen); break;
      case 2: up.t_select += bump(gen); break;
      default: up.k_avg += bump(gen); break;
    }
    ASSERT_GE(tokens_per_prompt(up), per_prompt);
    TokenCostModel judged = m;
    judged.judge_pass = true;
    TokenCostModel plain = m;
    plain.judge_pass = false;
    plain.t_select = 0;
    ASSERT_GE(tokens_per_prompt(judged), tokens_per_prompt(plain));
  }
}
