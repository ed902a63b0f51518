#pragma once

// Text side of a language agent policy: prompt templates and the action
// parser. The model side lives in toy_policy.hpp; lap_policy.hpp joins them.

#include <filesystem>
#include <string>
#include <string_view>

#include "msgrpo/common.hpp"

namespace msgrpo {

inline constexpr std::string_view kObservationPlaceholder = "[OBS]";

/// A template string holding exactly one observation placeholder.
class PromptTemplate {
 public:
  PromptTemplate(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;

 private:
  std::string id_;
  std::string text_;
  std::size_t placeholder_ = 0;

  friend std::string build_prompt(const PromptTemplate&, std::string_view);
};

std::string build_prompt(const PromptTemplate& tmpl, std::string_view observation);

/// Environment-agnostic instructions asking for
/// `<think>...</think><action>...</action>`.
const PromptTemplate& canonical_template();

/// Loads `<dir>/<id>.txt`. The id "canonical" resolves to the built-in
/// template when no such file exists.
PromptTemplate load_template(const std::filesystem::path& dir, const std::string& id);

struct ParsedAction {
  Action value;          // nullopt is the parse failure (bottom)
  std::string raw_span;  // text inside the selected action tags

  bool valid() const { return value.has_value(); }
  friend bool operator==(const ParsedAction&, const ParsedAction&) = default;
};

/// Reads the last `<action>...</action>` pair, trims and lowercases the
/// content and maps up/down/left/right to a direction. Total over strings.
ParsedAction parse_action(std::string_view completion);

/// Canonical answer text for a direction, used by scripted policies.
std::string canonical_completion(Direction d);

}  // namespace msgrpo
