#pragma once

// Teacher side: prompt rendering, answer extraction and the trace generators
// (the simulated teacher here, the remote client in remote_teacher.hpp).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/numeric.hpp"
#include "pars/rng.hpp"

namespace pars::teacher {

inline constexpr std::string_view kQuerySlot = "<Query QD-LED recipe>";

// Must stay byte-identical to assets/prompt_template.txt.
inline constexpr std::string_view kPromptTemplate =
    R"(You are a world-class expert in quantum-dot light-emitting-diode (QD-LED) device physics and fabrication.

<Query QD-LED recipe>

TASK: Predict external quantum efficiency for a QD-LED device fabricated by the query recipe.

Final output format (only json output)
Please provide your final report in a structured JSON format.
{
  "answer": <PREDICTED_VALUE> %
}
)";

inline std::string render_prompt(std::string_view recipe_text) {
  if (trim(recipe_text).empty()) throw Error(ErrorCode::EmptyRecipe, "cannot render a prompt without a recipe");
  std::string out(kPromptTemplate);
  out.replace(out.find(kQuerySlot), kQuerySlot.size(), recipe_text);
  return out;
}

struct GenerationRequest {
  std::string prompt_text;
  double temperature = 0.6;
  int max_output_tokens = 4096;
  std::string model_id;
};

struct Candidate {
  std::string trace;
  std::optional<double> prediction;  // percent; absent when extraction failed
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  int round_index = 1;
  int batch_index_j = 1;
  double temperature = 0.0;
  bool tokens_estimated = false;

  bool operator==(const Candidate&) const = default;
};

// Ordering used by every tie-break: smallest (round, j) first.
inline bool earlier(const Candidate& a, const Candidate& b) {
  if (a.round_index != b.round_index) return a.round_index < b.round_index;
  return a.batch_index_j < b.batch_index_j;
}

inline std::int64_t estimate_tokens(std::size_t chars, double chars_per_token = 4.0) {
  if (chars == 0) return 0;
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(chars) / chars_per_token));
}

inline std::int64_t estimate_tokens(std::string_view text, double chars_per_token = 4.0) {
  return estimate_tokens(text.size(), chars_per_token);
}

namespace detail {

// End index (inclusive) of the object starting at `start`, honouring strings.
inline std::optional<std::size_t> matching_brace(std::string_view s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::nullopt;
}

inline std::optional<double> answer_value(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.back() == '%') text = trim(text.substr(0, text.size() - 1));
  return parse_number(text);
}

// Lenient member scan for blocks that are not strict JSON, e.g. `"answer": 12.5 %`.
inline std::optional<double> loose_answer(std::string_view block) {
  constexpr std::string_view key = "\"answer\"";
  const auto k = block.find(key);
  if (k == std::string_view::npos) return std::nullopt;
  std::size_t i = k + key.size();
  while (i < block.size() && (block[i] == ' ' || block[i] == '\t' || block[i] == '\n')) ++i;
  if (i >= block.size() || block[i] != ':') return std::nullopt;
  ++i;
  std::size_t end = i;
  while (end < block.size() && block[end] != ',' && block[end] != '}' && block[end] != '\n') ++end;
  std::string_view raw = trim(block.substr(i, end - i));
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') raw = raw.substr(1, raw.size() - 2);
  return answer_value(raw);
}

}  // namespace detail

// Numeric answer of the last JSON object in the trace that has an "answer" member.
inline std::optional<double> extract_answer(std::string_view trace) {
  for (std::size_t start = trace.rfind('{'); start != std::string_view::npos;
       start = start == 0 ? std::string_view::npos : trace.rfind('{', start - 1)) {
    const auto end = detail::matching_brace(trace, start);
    if (!end) continue;
    const std::string_view block = trace.substr(start, *end - start + 1);
    const auto parsed = nlohmann::json::parse(block, nullptr, false);
    if (!parsed.is_discarded()) {
      if (!parsed.is_object() || !parsed.contains("answer")) continue;
      const auto& a = parsed["answer"];
      if (a.is_number()) {
        const double v = a.get<double>();
        if (std::isfinite(v)) return v;
        return std::nullopt;
      }
      if (a.is_string()) return detail::answer_value(a.get<std::string>());
      return std::nullopt;
    }
    if (auto v = detail::loose_answer(block)) return v;
  }
  return std::nullopt;
}

// Identity of one generation slot within a prompt's sampling run.
struct GenerationContext {
  std::string prompt_id;
  double ground_truth = 0.0;  // consumed only by the simulated teacher
  int round_index = 1;
  int batch_index_j = 1;
};

class TraceGenerator {
 public:
  virtual ~TraceGenerator() = default;
  virtual Candidate generate(const GenerationRequest& request, const GenerationContext& context) = 0;
  // True when generate() is a pure, cheap function and rounds may be consumed lazily.
  virtual bool deterministic() const { return false; }
};

struct SimTeacherConfig {
  double bias = 0.0;
  double prompt_bias_sd = 2.0;  // per-prompt systematic offset
  double sigma_base = 0.5;
  double sigma_per_temp = 1.5;  // spread = sigma_base + sigma_per_temp * T
  double outlier_prob = 0.05;
  double outlier_scale = 8.0;
  double out_of_range_prob = 0.02;
  double token_len_log_mean = 7.6;  // exp(7.6) ~ 2000 tokens
  double token_len_log_sd = 0.35;
  std::uint64_t seed = 0;
};

inline void validate(const SimTeacherConfig& cfg) {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(cfg.outlier_prob) || !prob(cfg.out_of_range_prob)) {
    throw Error(ErrorCode::ConfigError, "sim teacher probabilities must lie in [0, 1]");
  }
  if (!(cfg.sigma_base >= 0.0) || !(cfg.sigma_per_temp >= 0.0) || !(cfg.token_len_log_sd >= 0.0) ||
      !(cfg.prompt_bias_sd >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "sim teacher spreads must be non-negative");
  }
}

inline double sim_prompt_offset(const SimTeacherConfig& cfg, std::string_view prompt_id) {
  if (cfg.prompt_bias_sd == 0.0) return 0.0;
  rng::KeyedStream s(cfg.seed, {rng::fnv1a(prompt_id), 0x5052'4F4D'5054ULL});
  return s.normal(0.0, cfg.prompt_bias_sd);
}

inline std::string sim_trace_text(double prediction, double temperature, int round, int j) {
  const std::string p = format_number(prediction);
  std::string t;
  t += "Given: device stack and process parameters as quoted in the prompt.\n";
  t += "Assumptions: outcoupling near 20%; charge balance limited by the transport layers.\n";
  t += "Reasoning: round " + std::to_string(round) + ", sample " + std::to_string(j) +
       ", temperature " + format_number(temperature) +
       "; film PLQY bounds the radiative yield, scaled by outcoupling and balance.\n";
  t += "Result: EQE = " + p + " %\n";
  t += "{\n  \"answer\": \"" + p + " %\"\n}\n";
  return t;
}

// Pure function of (cfg, y, temperature, prompt_id, round, j). Every draw comes
// from a stream keyed by (seed, prompt_id, round, j) with a fixed layout.
inline Candidate sim_generate(const SimTeacherConfig& cfg, double y, double temperature,
                              std::string_view prompt_id, int round, int j) {
  rng::KeyedStream s(cfg.seed, {rng::fnv1a(prompt_id), static_cast<std::uint64_t>(round),
                                static_cast<std::uint64_t>(j)});
  const double spread = cfg.sigma_base + cfg.sigma_per_temp * temperature;
  const double noise = s.normal(0.0, 1.0);
  const bool outlier = s.bernoulli(cfg.outlier_prob);
  const double outlier_mag = std::fabs(s.normal(0.0, 1.0));
  const bool outlier_up = s.bernoulli(0.5);
  const bool out_of_range = s.bernoulli(cfg.out_of_range_prob);
  const bool range_high = s.bernoulli(0.5);
  const double range_mag = s.uniform();
  const double length = s.lognormal(cfg.token_len_log_mean, cfg.token_len_log_sd);

  double deviation = spread * noise;
  if (outlier) deviation = (outlier_up ? 1.0 : -1.0) * cfg.outlier_scale * (1.0 + outlier_mag);
  double prediction = y + cfg.bias + sim_prompt_offset(cfg, prompt_id) + deviation;
  if (out_of_range) prediction = range_high ? 100.5 + 20.0 * range_mag : -(0.5 + 10.0 * range_mag);
  prediction = std::round(prediction * 100.0) / 100.0;
  if (prediction == 0.0) prediction = 0.0;  // drop negative zero

  Candidate c;
  c.trace = sim_trace_text(prediction, temperature, round, j);
  c.prediction = prediction;
  c.tokens_out = std::max<std::int64_t>(1, std::llround(length));
  c.round_index = round;
  c.batch_index_j = j;
  c.temperature = temperature;
  return c;
}

class SimTeacher final : public TraceGenerator {
 public:
  explicit SimTeacher(SimTeacherConfig cfg, double chars_per_token = 4.0)
      : cfg_(cfg), chars_per_token_(chars_per_token) {
    validate(cfg_);
  }

  Candidate generate(const GenerationRequest& request, const GenerationContext& ctx) override {
    Candidate c = sim_generate(cfg_, ctx.ground_truth, request.temperature, ctx.prompt_id,
                               ctx.round_index, ctx.batch_index_j);
    c.tokens_in = estimate_tokens(request.prompt_text, chars_per_token_);
    c.tokens_estimated = true;
    return c;
  }

  bool deterministic() const override { return true; }
  const SimTeacherConfig& config() const { return cfg_; }

 private:
  SimTeacherConfig cfg_;
  double chars_per_token_;
};

inline nlohmann::json to_json(const Candidate& c) {
  nlohmann::json j;
  j["trace"] = c.trace;
  j["prediction"] = c.prediction ? nlohmann::json(*c.prediction) : nlohmann::json(nullptr);
  j["tokens_in"] = c.tokens_in;
  j["tokens_out"] = c.tokens_out;
  j["round_index"] = c.round_index;
  j["batch_index_j"] = c.batch_index_j;
  j["temperature"] = c.temperature;
  j["tokens_estimated"] = c.tokens_estimated;
  return j;
}

}  // namespace pars::teacher
