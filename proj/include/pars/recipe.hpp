#pragma once

// Structured device-recipe documents and the recipe-specific EQE envelope.
//
// The accepted text layout is the indented block format used for QD-LED
// recipes: an optional `substrate:` block, a `stack:` marker, and one
// `[<NAME> layer]` block per layer. Each block line holds comma-separated
// `key: value` items. Commas inside parentheses do not split items, an item
// without a key continues the previous value, and a line whose first item
// has no key either fills a dangling `key:` from the previous line or is kept
// verbatim under a synthesized `_line<N>` key.

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pars/error.hpp"
#include "pars/numeric.hpp"

namespace pars::recipe {

using AttributeValue = std::variant<double, std::string>;

struct Attribute {
  std::string key;
  AttributeValue value;

  bool operator==(const Attribute&) const = default;
};

class AttributeMap {
 public:
  void add(std::string key, AttributeValue value) {
    items_.push_back({std::move(key), std::move(value)});
  }

  const AttributeValue* find(std::string_view key) const {
    for (const auto& a : items_) {
      if (a.key == key) return &a.value;
    }
    return nullptr;
  }

  std::optional<double> number(std::string_view key) const {
    const auto* v = find(key);
    if (v == nullptr || !std::holds_alternative<double>(*v)) return std::nullopt;
    return std::get<double>(*v);
  }

  const std::vector<Attribute>& items() const { return items_; }
  std::vector<Attribute>& items() { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  bool operator==(const AttributeMap&) const = default;

 private:
  std::vector<Attribute> items_;
};

enum class LayerRole { HIL, HTL, EML, ETL, OTHER };

constexpr std::string_view to_string(LayerRole role) {
  switch (role) {
    case LayerRole::HIL: return "HIL";
    case LayerRole::HTL: return "HTL";
    case LayerRole::EML: return "EML";
    case LayerRole::ETL: return "ETL";
    case LayerRole::OTHER: return "OTHER";
  }
  return "OTHER";
}

struct Layer {
  std::string name;  // header text between the brackets, e.g. "EML layer"
  LayerRole role = LayerRole::OTHER;
  AttributeMap attributes;

  bool operator==(const Layer&) const = default;
};

struct RecipeDocument {
  std::string raw_text;
  AttributeMap substrate;
  std::vector<Layer> layers;

  // Structural equality ignores the stored source text.
  bool same_structure(const RecipeDocument& other) const {
    return substrate == other.substrate && layers == other.layers;
  }
};

enum class EnvelopeSource { PLQY_FILM, DEFAULT_FULL_RANGE, OVERRIDE };

constexpr std::string_view to_string(EnvelopeSource s) {
  switch (s) {
    case EnvelopeSource::PLQY_FILM: return "plqy_film";
    case EnvelopeSource::DEFAULT_FULL_RANGE: return "default_full_range";
    case EnvelopeSource::OVERRIDE: return "override";
  }
  return "default_full_range";
}

struct Envelope {
  double value_percent = 100.0;  // in (0, 100]
  EnvelopeSource source = EnvelopeSource::DEFAULT_FULL_RANGE;

  bool operator==(const Envelope&) const = default;
};

inline constexpr std::string_view kPlqyFilmKey = "PLQY_film_fraction";

namespace detail {

inline std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

inline LayerRole role_from_header(std::string_view name) {
  const std::string u = upper(name);
  if (u.find("EML") != std::string::npos) return LayerRole::EML;
  if (u.find("HIL") != std::string::npos) return LayerRole::HIL;
  if (u.find("HTL") != std::string::npos) return LayerRole::HTL;
  if (u.find("ETL") != std::string::npos) return LayerRole::ETL;
  return LayerRole::OTHER;
}

inline int paren_balance(std::string_view s) {
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')' && depth > 0) --depth;
  }
  return depth;
}

inline std::vector<std::string_view> split_items(std::string_view line) {
  std::vector<std::string_view> items;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '(') ++depth;
    if (c == ')' && depth > 0) --depth;
    if (c == ',' && depth == 0) {
      items.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  items.push_back(trim(line.substr(start)));
  return items;
}

inline bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

// Returns (key, value) when the item is a keyed `key: value` pair.
inline std::optional<std::pair<std::string_view, std::string_view>> split_key(std::string_view item) {
  if (item.empty()) return std::nullopt;
  const char first = item.front();
  if (!(std::isalpha(static_cast<unsigned char>(first)) || first == '_')) return std::nullopt;
  std::size_t i = 0;
  while (i < item.size() && is_key_char(item[i])) ++i;
  std::size_t key_end = i;
  while (i < item.size() && (item[i] == ' ' || item[i] == '\t')) ++i;
  if (i >= item.size() || item[i] != ':') return std::nullopt;
  return std::pair{item.substr(0, key_end), trim(item.substr(i + 1))};
}

inline std::optional<std::string_view> layer_header(std::string_view t) {
  if (t.size() >= 2 && t.front() == '[' && t.back() == ']') {
    return trim(t.substr(1, t.size() - 2));
  }
  return std::nullopt;
}

struct LogicalLine {
  std::size_t number;  // 1-based source line of the first physical line
  std::string text;
};

// Joins physical lines while a '(' group remains open.
inline std::vector<LogicalLine> logical_lines(std::string_view text) {
  std::vector<LogicalLine> out;
  std::size_t pos = 0;
  std::size_t number = 0;
  int open = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view physical =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++number;
    const std::string_view t = trim(physical);
    const bool header = layer_header(t).has_value();
    if (open > 0 && !header && !out.empty()) {
      out.back().text += ' ';
      out.back().text += t;
    } else if (!t.empty()) {
      out.push_back({number, std::string(t)});
    }
    open = out.empty() ? 0 : paren_balance(out.back().text);
    if (header || t.empty()) open = 0;
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

inline AttributeValue typed_value(std::string raw) {
  if (auto n = parse_number(raw)) return *n;
  return raw;
}

}  // namespace detail

inline RecipeDocument parse_recipe(std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorCode::EmptyInput, "recipe text is empty");

  RecipeDocument doc;
  doc.raw_text = std::string(text);

  // Raw string values during the scan; typed once the block is complete.
  struct RawAttr {
    std::string key;
    std::string value;
  };
  std::vector<RawAttr> substrate;
  std::vector<std::pair<Layer, std::vector<RawAttr>>> layers;
  std::vector<RawAttr>* target = nullptr;

  for (const auto& line : detail::logical_lines(text)) {
    const std::string_view t = line.text;
    if (auto header = detail::layer_header(t)) {
      Layer layer;
      layer.name = std::string(*header);
      layer.role = detail::role_from_header(*header);
      layers.emplace_back(std::move(layer), std::vector<RawAttr>{});
      target = &layers.back().second;
      continue;
    }
    if (t.back() == ':' && t.find(':') == t.size() - 1) {
      const std::string marker = detail::upper(trim(t.substr(0, t.size() - 1)));
      if (marker == "SUBSTRATE") {
        target = &substrate;
        continue;
      }
      if (marker == "STACK") {
        target = nullptr;
        continue;
      }
      if (target == nullptr) continue;  // document title such as "QD-LED recipe:"
    }
    if (target == nullptr) continue;

    const auto items = detail::split_items(t);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::string_view item = items[i];
      if (item.empty()) continue;
      if (auto kv = detail::split_key(item)) {
        target->push_back({std::string(kv->first), std::string(kv->second)});
        continue;
      }
      const bool line_start = (i == 0);
      if (!target->empty() && line_start && target->back().value.empty()) {
        target->back().value = std::string(item);
      } else if (!target->empty() && !line_start) {
        target->back().value += ", ";
        target->back().value += item;
      } else {
        target->push_back({"_line" + std::to_string(line.number), std::string(item)});
      }
    }
  }

  if (layers.empty()) {
    throw Error(ErrorCode::MalformedStructure, "no [<name> layer] blocks found in recipe");
  }
  for (auto& a : substrate) doc.substrate.add(std::move(a.key), detail::typed_value(std::move(a.value)));
  for (auto& [layer, raw] : layers) {
    for (auto& a : raw) layer.attributes.add(std::move(a.key), detail::typed_value(std::move(a.value)));
    doc.layers.push_back(std::move(layer));
  }
  return doc;
}

// Canonical writer: one attribute per line, numbers in shortest round-trip form.
inline std::string serialize(const RecipeDocument& doc) {
  const auto value_text = [](const AttributeValue& v) {
    if (const double* d = std::get_if<double>(&v)) return format_number(*d);
    return std::get<std::string>(v);
  };
  std::string out = "substrate:\n";
  for (const auto& a : doc.substrate.items()) out += "  " + a.key + ": " + value_text(a.value) + "\n";
  out += "stack:\n";
  for (const auto& layer : doc.layers) {
    out += "  [" + layer.name + "]\n";
    for (const auto& a : layer.attributes.items()) {
      out += "    " + a.key + ": " + value_text(a.value) + "\n";
    }
  }
  return out;
}

// Highest film PLQY over the emissive layers, in percent.
inline Envelope envelope(const RecipeDocument& doc) {
  std::optional<double> best;
  for (const auto& layer : doc.layers) {
    if (layer.role != LayerRole::EML) continue;
    for (const auto& a : layer.attributes.items()) {
      if (a.key != kPlqyFilmKey) continue;
      const double* fraction = std::get_if<double>(&a.value);
      if (fraction == nullptr || !(*fraction > 0.0 && *fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidPlqy,
                    std::string(kPlqyFilmKey) + " must be a number in (0, 1] in layer '" + layer.name + "'");
      }
      best = std::max(best.value_or(*fraction), *fraction);
    }
  }
  if (!best) return {100.0, EnvelopeSource::DEFAULT_FULL_RANGE};
  return {std::min(100.0, 100.0 * *best), EnvelopeSource::PLQY_FILM};
}

inline Envelope envelope_override(double value_percent) {
  if (!(value_percent > 0.0 && value_percent <= 100.0)) {
    throw Error(ErrorCode::InputSchemaError, "envelope override must lie in (0, 100]");
  }
  return {value_percent, EnvelopeSource::OVERRIDE};
}

}  // namespace pars::recipe
