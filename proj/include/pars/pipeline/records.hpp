#pragma once

// JSON-lines rows and file helpers. Every emitted row carries a versioned
// "schema" id; the matching JSON Schema documents live under schemas/.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/evaluation.hpp"
#include "pars/prompt.hpp"
#include "pars/sampler.hpp"

namespace pars::pipeline {

inline constexpr std::string_view kPromptSchema = "pars.prompt.v1";
inline constexpr std::string_view kCuratedSchema = "pars.curated.v1";
inline constexpr std::string_view kDiscardSchema = "pars.discard.v1";
inline constexpr std::string_view kReportSchema = "pars.report.v1";
inline constexpr std::string_view kJudgeScoreSchema = "pars.judge_score.v1";
inline constexpr std::string_view kCursorSchema = "pars.cursor.v1";

using nlohmann::json;

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

inline json parse_row(const std::string& line, const std::string& where) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InputSchemaError, where + ": not a JSON object");
  return j;
}

namespace detail {

inline std::optional<std::string> opt_string(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::InputSchemaError, where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

inline std::optional<double> opt_number(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw Error(ErrorCode::InputSchemaError, where + ": '" + key + "' must be a number");
  return it->get<double>();
}

}  // namespace detail

inline PromptRecord prompt_from_json(const json& j, const std::string& where) {
  PromptRecord r;
  auto id = detail::opt_string(j, "id", where);
  if (!id || id->empty()) throw Error(ErrorCode::InputSchemaError, where + ": missing string 'id'");
  r.id = *id;
  r.recipe_text = detail::opt_string(j, "recipe_text", where);
  r.prompt_text = detail::opt_string(j, "prompt_text", where);
  auto y = detail::opt_number(j, "ground_truth_y", where);
  if (!y) throw Error(ErrorCode::InputSchemaError, where + ": missing number 'ground_truth_y'");
  r.ground_truth_y = *y;
  r.envelope_override = detail::opt_number(j, "envelope_override", where);
  if (!r.recipe_text && !r.prompt_text) {
    throw Error(ErrorCode::InputSchemaError, where + ": needs 'recipe_text' or 'prompt_text'");
  }
  return r;
}

inline json to_json(const PromptRecord& r) {
  json j = {{"schema", kPromptSchema}, {"id", r.id}, {"ground_truth_y", r.ground_truth_y}};
  if (r.recipe_text) j["recipe_text"] = *r.recipe_text;
  if (r.prompt_text) j["prompt_text"] = *r.prompt_text;
  if (r.envelope_override) j["envelope_override"] = *r.envelope_override;
  return j;
}

inline std::vector<PromptRecord> read_prompts(const std::filesystem::path& path) {
  std::vector<PromptRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = path.filename().string() + ":" + std::to_string(i + 1);
    out.push_back(prompt_from_json(parse_row(lines[i], where), where));
  }
  return out;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  for (const auto& r : rows) out << r.dump() << '\n';
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

inline evaluation::PredictionSet prediction_from_json(const json& j, const std::string& where) {
  evaluation::PredictionSet s;
  auto id = detail::opt_string(j, "prompt_id", where);
  if (!id) throw Error(ErrorCode::InputSchemaError, where + ": missing string 'prompt_id'");
  s.prompt_id = *id;
  auto y = detail::opt_number(j, "y", where);
  if (!y) throw Error(ErrorCode::InputSchemaError, where + ": missing number 'y'");
  s.ground_truth = *y;
  s.envelope = detail::opt_number(j, "envelope", where).value_or(100.0);
  auto runs = j.find("runs");
  if (runs == j.end() || !runs->is_array() || runs->empty()) {
    throw Error(ErrorCode::InputSchemaError, where + ": 'runs' must be a non-empty array");
  }
  for (const auto& v : *runs) {
    if (!v.is_number()) throw Error(ErrorCode::InputSchemaError, where + ": 'runs' entries must be numbers");
    s.runs.push_back(v.get<double>());
  }
  return s;
}

}  // namespace pars::pipeline
