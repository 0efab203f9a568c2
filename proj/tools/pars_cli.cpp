#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pars/pars.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pars;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::string out_dir;
  std::optional<int> concurrency;
  bool sim = false;
};

pipeline::RunConfig load_config(const GlobalFlags& g) {
  pipeline::RunConfig cfg;
  if (!g.config_path.empty()) cfg = pipeline::from_document(config::load(g.config_path));
  if (g.seed) cfg.seed = cfg.sim.seed = *g.seed;
  if (g.strategy) cfg.strategy = pipeline::parse_strategy(*g.strategy);
  if (g.concurrency) cfg.concurrency = *g.concurrency;
  if (g.sim) cfg.use_sim = true;
  pipeline::validate(cfg);
  return cfg;
}

std::unique_ptr<teacher::TraceGenerator> make_teacher(const pipeline::RunConfig& cfg) {
  if (cfg.use_sim) return std::make_unique<teacher::SimTeacher>(cfg.sim, cfg.teacher_endpoint.chars_per_token);
  return std::make_unique<teacher::RemoteTeacher>(cfg.teacher_endpoint);
}

std::unique_ptr<judge::JudgeBackend> make_judge(const pipeline::RunConfig& cfg) {
  if (cfg.use_sim) return std::make_unique<judge::SimJudge>(cfg.seed);
  return std::make_unique<judge::HttpJudge>(cfg.judge.endpoint);
}

fs::path out_dir(const GlobalFlags& g) { return g.out_dir.empty() ? fs::path("out") : fs::path(g.out_dir); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

std::vector<pipeline::Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<pipeline::Strategy> out;
  if (names.empty()) return {std::begin(pipeline::kAllStrategies), std::end(pipeline::kAllStrategies)};
  for (const auto& n : names) out.push_back(pipeline::parse_strategy(n));
  return out;
}

int run_curate(const GlobalFlags& g, const std::string& input, bool fresh) {
  const auto cfg = load_config(g);
  auto teacher = make_teacher(cfg);
  std::unique_ptr<judge::JudgeBackend> judge_backend;
  if (cfg.strategy == pipeline::Strategy::JUDGE_RANKED) judge_backend = make_judge(cfg);
  const auto summary = pipeline::curate({input, out_dir(g), fresh}, cfg, *teacher, judge_backend.get());
  std::cout << summary.report.dump(2) << '\n';
  if (summary.resumed_from > 0) {
    std::cerr << "resumed after " << summary.resumed_from << " of " << summary.total << " committed records\n";
  }
  return 0;
}

int run_simulate(const GlobalFlags& g, int n_prompts, std::vector<std::uint64_t> seeds,
                 const std::vector<std::string>& strategy_names, const std::string& corpus_path) {
  auto cfg = load_config(g);
  if (!corpus_path.empty()) {
    std::vector<json> rows;
    for (const auto& r : pipeline::make_sim_corpus(n_prompts, cfg.seed)) rows.push_back(pipeline::to_json(r));
    if (fs::path(corpus_path).has_parent_path()) fs::create_directories(fs::path(corpus_path).parent_path());
    pipeline::write_jsonl(corpus_path, rows);
    std::cerr << "wrote " << rows.size() << " prompts to " << corpus_path << '\n';
    return 0;
  }
  if (seeds.empty()) seeds = {cfg.seed};
  const auto rows = pipeline::simulate_frontier(cfg, parse_strategies(strategy_names), seeds, n_prompts);
  const auto dir = out_dir(g);
  write_text(dir / "frontier.csv", pipeline::frontier_csv(rows));
  json summary = pipeline::frontier_summary(rows);
  summary["rows"] = json::array();
  for (const auto& r : rows) summary["rows"].push_back(pipeline::to_json(r));
  write_text(dir / "frontier_summary.json", summary.dump(2) + "\n");
  std::cout << pipeline::frontier_csv(rows);
  return 0;
}

int run_sweep(const GlobalFlags& g, int n_prompts, const std::vector<double>& scales) {
  const auto cfg = load_config(g);
  const auto rows = pipeline::sweep_correctness_ratio(cfg, scales, n_prompts, cfg.seed);
  write_text(out_dir(g) / "sweep.csv", pipeline::sweep_csv(rows));
  std::cout << pipeline::sweep_csv(rows);
  return 0;
}

int run_judge_score(const GlobalFlags& g, const std::string& input) {
  const auto cfg = load_config(g);
  auto backend = make_judge(cfg);
  std::vector<json> out_rows;
  std::vector<double> composites;
  int unparseable = 0;
  const auto lines = pipeline::read_lines(input);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = fs::path(input).filename().string() + ":" + std::to_string(i + 1);
    const json row = pipeline::parse_row(lines[i], where);
    if (!row.contains("prompt_text") || !row["prompt_text"].is_string() || !row.contains("trace") ||
        !row["trace"].is_string()) {
      throw Error(ErrorCode::InputSchemaError, where + ": needs string 'prompt_text' and 'trace'");
    }
    json scored = {{"schema", pipeline::kJudgeScoreSchema}, {"prompt_id", row.value("prompt_id", "")}};
    try {
      const auto s = judge::score_trace(*backend, row["prompt_text"].get<std::string>(),
                                        row["trace"].get<std::string>(), cfg.judge.parse_retries);
      json sub = json::object();
      for (const auto& item : judge::kRubric) sub[std::string(item.label)] = s.score.*item.member;
      scored["scores"] = sub;
      scored["composite"] = s.score.composite();
      scored["attempts"] = s.attempts;
      scored["tokens_in"] = s.tokens_in;
      scored["tokens_out"] = s.tokens_out;
      composites.push_back(s.score.composite());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableVerdict) throw;
      ++unparseable;
      scored["scores"] = nullptr;
      scored["composite"] = nullptr;
      scored["error"] = std::string(to_string(e.code()));
    }
    out_rows.push_back(std::move(scored));
  }
  const auto dir = out_dir(g);
  fs::create_directories(dir);
  pipeline::write_jsonl(dir / "judge_scores.jsonl", out_rows);
  json summary = {{"n_traces", out_rows.size()}, {"n_unparseable", unparseable}};
  summary["method_score"] = composites.empty() ? json(nullptr) : json(judge::method_score(composites));
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_account(const std::string& report_path, accounting::TokenCostModel m) {
  if (!report_path.empty()) {
    std::ifstream in(report_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + report_path + "'");
    const json report = json::parse(in, nullptr, false);
    if (report.is_discarded() || !report.contains("tokens") || !report["tokens"].is_object()) {
      throw Error(ErrorCode::InputSchemaError, report_path + ": not a run report with a 'tokens' block");
    }
    const auto& model = report["tokens"].at("model");
    m.t_teach_in = model.at("t_teach_in").get<double>();
    m.t_teach_out = model.at("t_teach_out").get<double>();
    m.t_select = model.at("t_select").get<double>();
    m.k_avg = model.at("k_avg").get<double>();
    m.r_acc = model.at("r_acc").get<double>();
    m.judge_pass = model.at("judge_pass").get<bool>();
  }
  json out = {{"t_teach_in", m.t_teach_in}, {"t_teach_out", m.t_teach_out}, {"t_select", m.t_select},
              {"k_avg", m.k_avg},           {"r_acc", m.r_acc},             {"judge_pass", m.judge_pass},
              {"tokens_per_prompt", accounting::tokens_per_prompt(m)}};
  out["tokens_per_accepted"] = m.r_acc > 0.0 ? json(accounting::tokens_per_accepted(m)) : json(nullptr);
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_evaluate(const GlobalFlags& g, const std::string& input) {
  const auto cfg = load_config(g);
  std::vector<evaluation::PredictionSet> sets;
  const auto lines = pipeline::read_lines(input);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = fs::path(input).filename().string() + ":" + std::to_string(i + 1);
    sets.push_back(pipeline::prediction_from_json(pipeline::parse_row(lines[i], where), where));
  }
  const json report = evaluation::to_json(evaluation::compute_metrics(sets, cfg.gates));
  if (!g.out_dir.empty()) write_text(fs::path(g.out_dir) / "eval.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PaRS trace curation: physics-gated rejection sampling of teacher reasoning traces"};
  app.require_subcommand(1);

  GlobalFlags g;
  std::uint64_t seed = 0;
  std::string strategy;
  int concurrency = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Run seed")->group("Global");
  auto* strategy_opt = app.add_option("--strategy", strategy,
                                      "pars | first | random | self_consistency | longest | judge | multi")
                           ->group("Global");
  auto* conc_opt = app.add_option("--concurrency", concurrency, "Prompt-level worker cap")
                       ->check(CLI::PositiveNumber)
                       ->group("Global");
  app.add_option("--config", g.config_path, "TOML config file")->check(CLI::ExistingFile)->group("Global");
  app.add_option("--out", g.out_dir, "Output directory")->group("Global");
  app.add_flag("--sim", g.sim, "Use the simulated teacher and judge")->group("Global");
  app.fallthrough();

  std::string input;
  bool fresh = false;
  auto* curate = app.add_subcommand("curate", "Curate traces for a prompts JSONL file");
  curate->add_option("--input,-i", input, "Prompts JSONL")->required()->check(CLI::ExistingFile);
  curate->add_flag("--fresh", fresh, "Ignore any cursor and overwrite outputs");

  int n_prompts = 1000;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> strategies;
  std::string corpus_path;
  auto* simulate = app.add_subcommand("simulate", "Compute-accuracy frontier on a seeded sim corpus");
  simulate->add_option("--prompts,-n", n_prompts, "Prompts per run")->check(CLI::PositiveNumber);
  simulate->add_option("--seeds", seeds, "Seeds (default: the run seed)");
  simulate->add_option("--strategies", strategies, "Strategies to compare (default: all)");
  simulate->add_option("--write-corpus", corpus_path, "Write the sim corpus as prompts JSONL and exit");

  std::vector<double> scales{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0};
  auto* sweep = app.add_subcommand("sweep", "Acceptance ratio and curated error across noise levels");
  sweep->add_option("--prompts,-n", n_prompts, "Prompts per noise level")->check(CLI::PositiveNumber);
  sweep->add_option("--scales", scales, "Noise multipliers");

  auto* judge_cmd = app.add_subcommand("judge-score", "Score traces with the rubric judge");
  judge_cmd->add_option("--input,-i", input, "JSONL with prompt_text and trace")->required()->check(CLI::ExistingFile);

  std::string report_path;
  accounting::TokenCostModel model;
  auto* account = app.add_subcommand("account", "Token cost per prompt and per accepted trace");
  account->add_option("--report", report_path, "Read the fitted model from a run report")->check(CLI::ExistingFile);
  account->add_option("--t-in", model.t_teach_in, "Input tokens per trace");
  account->add_option("--t-out", model.t_teach_out, "Output tokens per trace");
  account->add_option("--k-avg", model.k_avg, "Average generated traces per prompt");
  account->add_option("--t-select", model.t_select, "Selection overhead tokens per prompt");
  account->add_option("--r-acc", model.r_acc, "Acceptance rate");
  account->add_flag("--judge", model.judge_pass, "Judge-ranked cost variant");

  auto* evaluate = app.add_subcommand("evaluate", "MAE, R2, Spearman and violation rate of predictions");
  evaluate->add_option("--input,-i", input, "Predictions JSONL (prompt_id, y, envelope, runs)")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (*seed_opt) g.seed = seed;
  if (*strategy_opt) g.strategy = strategy;
  if (*conc_opt) g.concurrency = concurrency;

  try {
    if (*curate) return run_curate(g, input, fresh);
    if (*simulate) return run_simulate(g, n_prompts, seeds, strategies, corpus_path);
    if (*sweep) return run_sweep(g, n_prompts, scales);
    if (*judge_cmd) return run_judge_score(g, input);
    if (*account) return run_account(report_path, model);
    if (*evaluate) return run_evaluate(g, input);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
