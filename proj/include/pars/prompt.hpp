#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "pars/error.hpp"
#include "pars/recipe.hpp"
#include "pars/teacher.hpp"

namespace pars {

// One (recipe, measured EQE) pair from the prompt corpus.
struct PromptRecord {
  std::string id;
  std::optional<std::string> recipe_text;
  std::optional<std::string> prompt_text;  // rendered from recipe_text when absent
  double ground_truth_y = 0.0;             // percent
  std::optional<double> envelope_override;  // percent
};

// A record with its prompt rendered and envelope resolved.
struct ResolvedPrompt {
  std::string id;
  std::string prompt_text;
  double ground_truth = 0.0;
  recipe::Envelope envelope;
};

inline ResolvedPrompt resolve(const PromptRecord& record) {
  if (record.id.empty()) throw Error(ErrorCode::InputSchemaError, "prompt record has an empty id");
  if (!std::isfinite(record.ground_truth_y)) {
    throw Error(ErrorCode::InputSchemaError, "prompt '" + record.id + "' has a non-finite ground truth");
  }
  if (!record.recipe_text && !record.prompt_text) {
    throw Error(ErrorCode::InputSchemaError, "prompt '" + record.id + "' needs recipe_text or prompt_text");
  }
  ResolvedPrompt out;
  out.id = record.id;
  out.ground_truth = record.ground_truth_y;
  out.prompt_text = record.prompt_text ? *record.prompt_text : teacher::render_prompt(*record.recipe_text);
  if (record.envelope_override) {
    out.envelope = recipe::envelope_override(*record.envelope_override);
  } else if (record.recipe_text) {
    out.envelope = recipe::envelope(recipe::parse_recipe(*record.recipe_text));
  }
  return out;
}

}  // namespace pars
