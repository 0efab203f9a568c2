#pragma once

// Corpus curation with a bounded worker pool and in-order commit.
//
// Prompts are processed concurrently but rows are committed strictly in input
// order by a single appender, so outputs are byte-identical for any worker
// count. After every commit batch the cursor records how many input records are
// committed and the byte length of both row files; a rerun truncates the files
// to those lengths and continues with the next record.

#include <atomic>
#include <bit>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/judge.hpp"
#include "pars/pipeline/records.hpp"
#include "pars/pipeline/report.hpp"
#include "pars/pipeline/run_config.hpp"
#include "pars/pipeline/strategies.hpp"
#include "pars/rng.hpp"

namespace pars::pipeline {

struct CuratePaths {
  std::filesystem::path curated;
  std::filesystem::path discards;
  std::filesystem::path report;
  std::filesystem::path cursor;

  explicit CuratePaths(const std::filesystem::path& dir)
      : curated(dir / "curated.jsonl"),
        discards(dir / "discards.jsonl"),
        report(dir / "report.json"),
        cursor(dir / "cursor.json") {}
};

struct CurateOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  bool fresh = false;  // ignore any existing cursor
};

struct CurateSummary {
  json report;
  std::size_t total = 0;
  std::size_t resumed_from = 0;  // records already committed before this run
};

namespace detail {

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Identifies the input plus every setting that changes results, so a cursor is only reused for the same run.
// Concurrency and endpoint transport settings are deliberately left out.
inline std::string run_fingerprint(const std::string& input_bytes, const RunConfig& cfg) {
  std::uint64_t h = rng::fnv1a(input_bytes);
  const auto mix = [&h](auto v) {
    if constexpr (std::is_floating_point_v<decltype(v)>) {
      h = rng::combine(h, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
    } else {
      h = rng::combine(h, static_cast<std::uint64_t>(v));
    }
  };
  h = rng::combine(h, rng::fnv1a(to_string(cfg.strategy)));
  mix(cfg.seed), mix(cfg.budget_k), mix(cfg.base_temperature), mix(cfg.use_sim);
  mix(cfg.gates.eps_mae), mix(cfg.gates.range_lo), mix(cfg.gates.range_hi);
  const auto& p = cfg.pars;
  mix(p.batch_size_b), mix(p.k_max), mix(p.eps_var), mix(p.delta_imp), mix(p.adaptive_halting);
  mix(static_cast<int>(p.schedule.mode)), mix(p.schedule.t_min), mix(p.schedule.t_max);
  mix(p.schedule.delta_t), mix(p.schedule.gamma);
  if (cfg.use_sim) {
    const auto& s = cfg.sim;
    mix(s.seed), mix(s.bias), mix(s.prompt_bias_sd), mix(s.sigma_base), mix(s.sigma_per_temp);
    mix(s.outlier_prob), mix(s.outlier_scale), mix(s.out_of_range_prob);
    mix(s.token_len_log_mean), mix(s.token_len_log_sd);
  } else {
    h = rng::combine(h, rng::fnv1a(cfg.teacher_endpoint.model_id));
  }
  if (cfg.strategy == Strategy::JUDGE_RANKED) {
    h = rng::combine(h, rng::fnv1a(cfg.judge.endpoint.model_id));
    mix(cfg.judge.parse_retries);
  }
  return std::to_string(h);
}

inline void write_cursor(const CuratePaths& paths, const std::string& fingerprint, std::size_t committed,
                         std::size_t total, std::uintmax_t curated_bytes, std::uintmax_t discard_bytes,
                         bool complete) {
  const json cursor = {{"schema", kCursorSchema},       {"fingerprint", fingerprint},
                       {"committed", committed},        {"total", total},
                       {"curated_bytes", curated_bytes}, {"discard_bytes", discard_bytes},
                       {"complete", complete}};
  const auto tmp = paths.cursor.string() + ".tmp";
  write_json(tmp, cursor);
  std::filesystem::rename(tmp, paths.cursor);
}

inline std::vector<json> read_rows(const std::filesystem::path& path) {
  std::vector<json> rows;
  if (!std::filesystem::exists(path)) return rows;
  for (const auto& line : read_lines(path)) rows.push_back(parse_row(line, path.string()));
  return rows;
}

}  // namespace detail

inline CurateSummary curate(const CurateOptions& opts, const RunConfig& cfg, teacher::TraceGenerator& teacher,
                            judge::JudgeBackend* judge_backend) {
  validate(cfg);
  const std::string input_bytes = detail::slurp(opts.input);
  const std::vector<PromptRecord> records = read_prompts(opts.input);
  {
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.id).second) throw Error(ErrorCode::InputSchemaError, "duplicate prompt id '" + r.id + "'");
    }
  }

  std::filesystem::create_directories(opts.out_dir);
  const CuratePaths paths(opts.out_dir);
  const std::string fingerprint = detail::run_fingerprint(input_bytes, cfg);

  std::size_t start = 0;
  std::uintmax_t curated_bytes = 0;
  std::uintmax_t discard_bytes = 0;
  if (!opts.fresh && std::filesystem::exists(paths.cursor)) {
    const json cursor = json::parse(detail::slurp(paths.cursor), nullptr, false);
    if (cursor.is_discarded() || cursor.value("fingerprint", "") != fingerprint) {
      throw Error(ErrorCode::InputSchemaError,
                  "existing cursor in '" + opts.out_dir.string() + "' belongs to a different run; use --fresh");
    }
    start = cursor.at("committed").get<std::size_t>();
    curated_bytes = cursor.at("curated_bytes").get<std::uintmax_t>();
    discard_bytes = cursor.at("discard_bytes").get<std::uintmax_t>();
    for (auto [path, bytes] : {std::pair{paths.curated, curated_bytes}, std::pair{paths.discards, discard_bytes}}) {
      if (!std::filesystem::exists(path)) std::ofstream(path, std::ios::binary).close();
      std::filesystem::resize_file(path, bytes);
    }
  } else {
    std::ofstream(paths.curated, std::ios::binary | std::ios::trunc).close();
    std::ofstream(paths.discards, std::ios::binary | std::ios::trunc).close();
  }

  std::ofstream curated_out(paths.curated, std::ios::binary | std::ios::app);
  std::ofstream discard_out(paths.discards, std::ios::binary | std::ios::app);
  if (!curated_out || !discard_out) throw Error(ErrorCode::IoError, "cannot open output files for append");

  const std::size_t total = records.size();
  struct Slot {
    std::optional<std::vector<json>> curated_rows;
    std::optional<json> discard;
    std::exception_ptr error;
    bool ready = false;
  };
  std::vector<Slot> slots(total);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{start};
  std::size_t committed = start;
  bool stop = false;
  const std::size_t window = static_cast<std::size_t>(4 * cfg.concurrency);

  const auto work = [&](std::size_t i) {
    Slot out;
    try {
      std::optional<ResolvedPrompt> resolved;
      try {
        resolved = resolve(records[i]);
      } catch (const Error& e) {
        out.discard = rejected_row(records[i].id, cfg.strategy, e);
      }
      if (resolved) {
        const PromptResult r = process_prompt(*resolved, cfg, teacher, judge_backend);
        if (r.selected.empty()) out.discard = discard_row(r);
        else out.curated_rows = curated_rows(r, cfg.gates);
      }
    } catch (...) {
      out.error = std::current_exception();
    }
    out.ready = true;
    {
      std::lock_guard lock(mu);
      slots[i] = std::move(out);
    }
    cv.notify_all();
  };

  const auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stop || next.load() >= total || next.load() < committed + window; });
        if (stop || next.load() >= total) return;
        i = next.fetch_add(1);
      }
      work(i);
    }
  };

  std::vector<std::jthread> threads;
  const int n_threads = std::max(1, cfg.concurrency);
  if (n_threads > 1) {
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }

  std::exception_ptr failure;
  while (committed < total) {
    if (n_threads == 1) {
      next.store(committed + 1);
      work(committed);
    }
    std::vector<Slot> batch;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return slots[committed].ready; });
      for (std::size_t i = committed; i < total && slots[i].ready; ++i) {
        if (slots[i].error) break;
        batch.push_back(std::move(slots[i]));
        slots[i] = Slot{};
      }
      if (batch.empty()) {
        failure = slots[committed].error;
        stop = true;
      }
    }
    cv.notify_all();
    if (failure) break;
    for (const auto& s : batch) {
      if (s.curated_rows) {
        std::string buf;
        for (const auto& row : *s.curated_rows) buf += row.dump() + "\n";
        curated_out << buf;
        curated_bytes += buf.size();
      }
      if (s.discard) {
        const std::string buf = s.discard->dump() + "\n";
        discard_out << buf;
        discard_bytes += buf.size();
      }
    }
    curated_out.flush();
    discard_out.flush();
    if (!curated_out || !discard_out) throw Error(ErrorCode::IoError, "failed writing curated outputs");
    {
      std::lock_guard lock(mu);
      committed += batch.size();
    }
    cv.notify_all();
    detail::write_cursor(paths, fingerprint, committed, total, curated_bytes, discard_bytes, false);
  }
  {
    std::lock_guard lock(mu);
    stop = true;
  }
  cv.notify_all();
  threads.clear();

  if (failure) {
    detail::write_cursor(paths, fingerprint, committed, total, curated_bytes, discard_bytes, false);
    std::rethrow_exception(failure);
  }

  curated_out.close();
  discard_out.close();
  CurateSummary summary;
  summary.total = total;
  summary.resumed_from = start;
  summary.report = build_report(cfg.strategy, detail::read_rows(paths.curated), detail::read_rows(paths.discards),
                                cfg.gates);
  write_json(paths.report, summary.report);
  detail::write_cursor(paths, fingerprint, committed, total, curated_bytes, discard_bytes, true);
  return summary;
}

}  // namespace pars::pipeline
