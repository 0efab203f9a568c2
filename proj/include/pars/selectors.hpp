#pragma once

// Fixed-pool trace selection baselines. Ties always go to the smallest (round, j).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pars/error.hpp"
#include "pars/numeric.hpp"
#include "pars/rng.hpp"
#include "pars/teacher.hpp"

namespace pars::selectors {

using teacher::Candidate;
using Pool = std::span<const Candidate>;

enum class SelectionStrategy { FIRST, RANDOM, SELF_CONSISTENCY, LONGEST, JUDGE_RANKED, MULTI_ALL };

constexpr std::string_view to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::FIRST: return "first";
    case SelectionStrategy::RANDOM: return "random";
    case SelectionStrategy::SELF_CONSISTENCY: return "self_consistency";
    case SelectionStrategy::LONGEST: return "longest";
    case SelectionStrategy::JUDGE_RANKED: return "judge";
    case SelectionStrategy::MULTI_ALL: return "multi";
  }
  return "first";
}

struct SelectionResult {
  std::vector<Candidate> selected;
  SelectionStrategy strategy = SelectionStrategy::FIRST;
  std::string rationale;
};

namespace detail {

inline void require_pool(Pool pool) {
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "selection pool is empty");
}

// Index of the best element under `better`, falling back to (round, j) on ties.
template <typename Better>
std::size_t best_index(Pool pool, Better better) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (better(pool[i], pool[best])) {
      best = i;
    } else if (!better(pool[best], pool[i]) && teacher::earlier(pool[i], pool[best])) {
      best = i;
    }
  }
  return best;
}

}  // namespace detail

inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty set");
  return median_of(std::move(values));
}

inline SelectionResult select_first(Pool pool) {
  detail::require_pool(pool);
  const auto i = detail::best_index(pool, [](const Candidate&, const Candidate&) { return false; });
  return {{pool[i]}, SelectionStrategy::FIRST, "first generated trace"};
}

inline SelectionResult select_random(Pool pool, std::uint64_t seed) {
  detail::require_pool(pool);
  rng::KeyedStream s(seed, {0x52414E44ULL, pool.size()});
  const auto i = static_cast<std::size_t>(s.index(pool.size()));
  return {{pool[i]}, SelectionStrategy::RANDOM, "uniform index " + std::to_string(i)};
}

inline SelectionResult select_self_consistency(Pool pool) {
  std::vector<double> answers;
  for (const auto& c : pool) {
    if (c.prediction) answers.push_back(*c.prediction);
  }
  if (answers.empty()) throw Error(ErrorCode::NoNumericAnswers, "no candidate has an extracted answer");
  const double m = median(answers);

  const Candidate* best = nullptr;
  double best_dist = 0.0;
  for (const auto& c : pool) {
    if (!c.prediction) continue;
    const double d = std::fabs(*c.prediction - m);
    if (best == nullptr || d < best_dist || (d == best_dist && teacher::earlier(c, *best))) {
      best = &c;
      best_dist = d;
    }
  }
  return {{*best}, SelectionStrategy::SELF_CONSISTENCY, "median " + format_number(m)};
}

inline SelectionResult select_longest(Pool pool) {
  detail::require_pool(pool);
  const auto i = detail::best_index(
      pool, [](const Candidate& a, const Candidate& b) { return a.tokens_out > b.tokens_out; });
  return {{pool[i]}, SelectionStrategy::LONGEST, "tokens_out " + std::to_string(pool[i].tokens_out)};
}

inline SelectionResult select_multi(Pool pool) {
  detail::require_pool(pool);
  return {{pool.begin(), pool.end()}, SelectionStrategy::MULTI_ALL, "all " + std::to_string(pool.size())};
}

}  // namespace pars::selectors
