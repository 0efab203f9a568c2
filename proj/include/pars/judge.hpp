#pragma once

// LLM-as-a-judge rubric scoring. The rubric prompt is rendered with the device
// prompt and the response under evaluation, and a labeled line-per-rubric reply
// format is appended. A verdict is valid only when all five labels are present
// and every score lies within its cap.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pars/chat_client.hpp"
#include "pars/error.hpp"
#include "pars/numeric.hpp"
#include "pars/rng.hpp"
#include "pars/selectors.hpp"

namespace pars::judge {

struct RubricScore {
  double groundedness = 0.0;        // [0, 2.5]
  double causal = 0.0;              // [0, 2.0]
  double numeric_discipline = 0.0;  // [0, 2.0]
  double assumption_quality = 0.0;  // [0, 2.0]
  double clarity = 0.0;             // [0, 1.5]

  double composite() const {
    return groundedness + causal + numeric_discipline + assumption_quality + clarity;
  }
  bool operator==(const RubricScore&) const = default;
};

struct RubricItem {
  std::string_view label;
  double cap;
  double RubricScore::*member;
};

inline constexpr RubricItem kRubric[] = {
    {"Groundedness", 2.5, &RubricScore::groundedness},
    {"Causal Reasoning", 2.0, &RubricScore::causal},
    {"Numerical Discipline", 2.0, &RubricScore::numeric_discipline},
    {"Assumption Quality", 2.0, &RubricScore::assumption_quality},
    {"Clarity", 1.5, &RubricScore::clarity},
};

inline bool within_caps(const RubricScore& s) {
  for (const auto& item : kRubric) {
    const double v = s.*item.member;
    if (!(v >= 0.0 && v <= item.cap)) return false;
  }
  return true;
}

inline constexpr std::string_view kPromptPlaceholder = "<Prompt>: Device recipe";
inline constexpr std::string_view kResponsePlaceholder = "<Response>: Model's reasoning trace + final prediction.";

// Must stay byte-identical to assets/judge_rubric.txt.
inline constexpr std::string_view kRubricTemplate =
    R"(<Prompt>: Device recipe
<Response>: Model's reasoning trace + final prediction.

# Role
You evaluate QD-LED EQE prediction responses (especially reasoning trace) quality with following rubric. Judge only against the provided device prompt.

# Scoring rubric (0~10)
1. Groundedness to Prompt (0~2.5): Quote prompt substrings for all used parameters; mark extra info as Assumption.
- 0.0~0.5: Largely ungrounded; few/no quotes; multiple unstated details.
- 0.6~1.3: Some quotes, but several parameters not cited; occasional unstated claims
- 1.4~2.0: Mostly grounded; 1-2 minor misses; assumptions called out but one is vague
- 2.1~2.3: Fully grounded with trivial omissions only
- 2.4~2.5: Every device parameter quoted; zero unstated details

2. Causal Reasoning Quality (0~2.0): Link given factors -> mechanisms -> EQE impact; separate Given / Inference / Implication.
- 0.0~0.4: Descriptive or hand-wavy; leaps from factors to EQE without mechanism.
- 0.5~1.0: Some correct factor->effect links but gaps and mixing of Given /Inference.
- 1.1~1.5: Coherent chains for most factors; clear separation with one notable gap
- 1.6~1.8: Mechanism-first, no unjustified jumps; discusses main loss channels
- 1.9~2.0: Exemplary: prioritizes the limiting mechanism.

3. Numerical & Unit Discipline (0~2.0): Show steps; keep %/nm/eV consistent; sensible rounding of final EQE.
- 0.0~0.4: Arithmetic or unit errors ; missing key steps.
- 0.5~1.0: Mostly correct; one error or unit slip.
- 1.1~1.5: Correct math; consistent units; minor omission .
- 1.6~1.8: Fully worked steps (e.g., IQE x outcoupling); sanity checks.
- 1.9~2.0: Clean, reproducible pipeline; precision noted where relevant.

4. Assumption Quality (0~2.0): Assumptions explicit, minimal, non-contradictory, each briefly justified.
- 0.0~0.4: Many hidden or contradictory assumptions.
- 0.5~1.0: Several assumptions; some lack justification.
- 1.1~1.5: Only necessary assumptions; short, credible justifications.
- 1.6~1.8: Minimal & well-justified; references common baselines.
- 1.9~2.0: Parsimonious and transparent; each assumption tied to its EQE impact; brief sensitivity note if applicable.

5. Clarity & Structure (0~1.5): Use sections: Given / Assumptions / Reasoning / Result; keep high signal-to-noise.
* 0.0~0.3: Disorganized; sections missing; EQE result absent or hard to find.
* 0.4~0.7: Sections present but uneven; some redundancy; result line imprecise.
* 0.8~1.1: Clear sections; stepwise logic; minor verbosity or formatting slips.
* 1.2~1.3: Crisp, concise, well-formatted; Result line prominent.
* 1.4~1.5: Polished, minimal, easy to audit; bullets/tables used judiciously.
)";

inline constexpr std::string_view kReplyFormat = R"(
# Reply format
Reply with exactly these five lines in this order, each score a plain decimal number, followed by one sentence of justification:
Groundedness: <score>
Causal Reasoning: <score>
Numerical Discipline: <score>
Assumption Quality: <score>
Clarity: <score>
)";

inline std::string render_judge_prompt(std::string_view prompt_text, std::string_view trace) {
  std::string out(kRubricTemplate);
  const std::string prompt_line = "<Prompt>: " + std::string(prompt_text);
  const std::string response_line = "<Response>: " + std::string(trace);
  out.replace(out.find(kPromptPlaceholder), kPromptPlaceholder.size(), prompt_line);
  out.replace(out.find(kResponsePlaceholder, prompt_line.size()), kResponsePlaceholder.size(), response_line);
  out += kReplyFormat;
  return out;
}

inline std::string format_verdict(const RubricScore& s) {
  std::string out;
  for (const auto& item : kRubric) out += std::string(item.label) + ": " + format_number(s.*item.member) + "\n";
  return out;
}

namespace detail {

inline bool iequal_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

// Matches `[decoration][N. ]**<label>...: <number>` on one line.
inline std::optional<double> labeled_value(std::string_view line, std::string_view label) {
  std::size_t i = 0;
  while (i < line.size() && std::string_view(" \t>*#-").find(line[i]) != std::string_view::npos) ++i;
  if (i + 1 < line.size() && line[i] >= '1' && line[i] <= '5' && (line[i + 1] == '.' || line[i + 1] == ')')) {
    i += 2;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  }
  while (i < line.size() && line[i] == '*') ++i;
  if (!iequal_prefix(line.substr(i), label)) return std::nullopt;
  const std::size_t colon = line.find(':', i + label.size());
  if (colon == std::string_view::npos) return std::nullopt;
  std::size_t b = colon + 1;
  while (b < line.size() && (line[b] == ' ' || line[b] == '\t' || line[b] == '*')) ++b;
  std::size_t e = b;
  while (e < line.size() && std::isdigit(static_cast<unsigned char>(line[e]))) ++e;
  if (e == b) return std::nullopt;
  if (e + 1 < line.size() && line[e] == '.' && std::isdigit(static_cast<unsigned char>(line[e + 1]))) {
    ++e;
    while (e < line.size() && std::isdigit(static_cast<unsigned char>(line[e]))) ++e;
  }
  return parse_number(line.substr(b, e - b));
}

}  // namespace detail

// Strict by label: the last `<Label>...: <number>` line per rubric wins.
inline std::optional<RubricScore> parse_verdict(std::string_view reply) {
  std::optional<double> found[std::size(kRubric)];
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    std::size_t nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    const std::string_view line = reply.substr(pos, nl - pos);
    for (std::size_t k = 0; k < std::size(kRubric); ++k) {
      if (auto v = detail::labeled_value(line, kRubric[k].label)) found[k] = v;
    }
    pos = nl + 1;
  }
  RubricScore score;
  for (std::size_t k = 0; k < std::size(kRubric); ++k) {
    if (!found[k]) return std::nullopt;
    score.*kRubric[k].member = *found[k];
  }
  if (!within_caps(score)) return std::nullopt;
  return score;
}

struct JudgeReply {
  std::string content;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  // `attempt` is 1-based; a fresh request is issued for each attempt.
  virtual JudgeReply ask(const std::string& judge_prompt, int attempt) = 0;
};

struct JudgeConfig {
  chat::EndpointConfig endpoint = [] {
    chat::EndpointConfig e;
    e.model_id = "judge";
    e.api_key_env = "PARS_JUDGE_API_KEY";
    e.fallback_key_env = "PARS_API_KEY";
    e.default_temperature = 0.0;
    return e;
  }();
  int parse_retries = 2;
};

class HttpJudge final : public JudgeBackend {
 public:
  explicit HttpJudge(chat::EndpointConfig cfg)
      : client_(std::make_shared<chat::ChatClient>(std::move(cfg), ErrorCode::JudgeUnavailable)) {}

  JudgeReply ask(const std::string& judge_prompt, int) override {
    const auto& cfg = client_->config();
    std::vector<chat::Message> messages;
    if (!cfg.system_prompt.empty()) messages.push_back({"system", cfg.system_prompt});
    messages.push_back({"user", judge_prompt});
    const auto res = client_->complete(messages, cfg.default_temperature, cfg.max_output_tokens);
    JudgeReply r;
    r.content = res.content;
    r.tokens_in = res.prompt_tokens.value_or(teacher::estimate_tokens(judge_prompt, cfg.chars_per_token));
    r.tokens_out = res.completion_tokens.value_or(teacher::estimate_tokens(res.content, cfg.chars_per_token));
    return r;
  }

 private:
  std::shared_ptr<chat::ChatClient> client_;
};

// Offline stand-in: scores are a pure function of (seed, prompt, trace).
class SimJudge final : public JudgeBackend {
 public:
  explicit SimJudge(std::uint64_t seed) : seed_(seed) {}

  JudgeReply ask(const std::string& judge_prompt, int) override {
    rng::KeyedStream s(seed_, {rng::fnv1a(judge_prompt)});
    RubricScore score;
    for (const auto& item : kRubric) {
      score.*item.member = std::round(item.cap * (0.3 + 0.7 * s.uniform()) * 10.0) / 10.0;
    }
    JudgeReply r;
    r.content = format_verdict(score);
    r.tokens_in = teacher::estimate_tokens(judge_prompt);
    r.tokens_out = teacher::estimate_tokens(r.content);
    return r;
  }

 private:
  std::uint64_t seed_;
};

struct ScoredTrace {
  RubricScore score;
  int attempts = 1;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

inline ScoredTrace score_trace(JudgeBackend& backend, std::string_view prompt_text, std::string_view trace,
                               int parse_retries) {
  const std::string judge_prompt = render_judge_prompt(prompt_text, trace);
  ScoredTrace out;
  const int attempts = 1 + std::max(0, parse_retries);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const JudgeReply reply = backend.ask(judge_prompt, attempt);
    out.tokens_in += reply.tokens_in;
    out.tokens_out += reply.tokens_out;
    out.attempts = attempt;
    if (auto score = parse_verdict(reply.content)) {
      out.score = *score;
      return out;
    }
  }
  throw Error(ErrorCode::UnparseableVerdict,
              "judge reply lacked five in-range rubric scores after " + std::to_string(attempts) + " attempts");
}

// scores[i] belongs to pool[i]; absent entries were unparseable and are skipped.
inline selectors::SelectionResult select_judge_ranked(std::span<const teacher::Candidate> pool,
                                                      std::span<const std::optional<RubricScore>> scores) {
  if (scores.size() != pool.size()) {
    throw Error(ErrorCode::NoScoredCandidates, "score list does not match the pool");
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!scores[i]) continue;
    if (!best) {
      best = i;
      continue;
    }
    const double a = scores[i]->composite();
    const double b = scores[*best]->composite();
    if (a > b || (a == b && teacher::earlier(pool[i], pool[*best]))) best = i;
  }
  if (!best) throw Error(ErrorCode::NoScoredCandidates, "no candidate received a valid judge score");
  return {{pool[*best]},
          selectors::SelectionStrategy::JUDGE_RANKED,
          "composite " + format_number(scores[*best]->composite())};
}

inline double method_score(std::span<const double> composites) {
  if (composites.empty()) throw Error(ErrorCode::EmptyInput, "method score over no traces");
  double sum = 0.0;
  for (double c : composites) sum += c;
  return sum / static_cast<double>(composites.size());
}

}  // namespace pars::judge
