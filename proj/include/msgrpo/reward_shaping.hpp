#pragma once

#include <cstddef>
#include <string_view>

namespace msgrpo {

struct EpisodeRecord;

inline constexpr double kInvalidActionPenalty = -0.5;
inline constexpr double kFormatDefectPenalty = -0.5;

struct FormatPenalty {
  double length = 0.0;
  double structure = 0.0;
  double extra_text = 0.0;

  double total() const { return length + structure + extra_text; }
  friend bool operator==(const FormatPenalty&, const FormatPenalty&) = default;
};

/// 0 up to 180 tokens, linear down to -0.5 at 200 and beyond.
double length_penalty(std::size_t n_tokens);

/// Number of defects against `<think>...</think><action>...</action>`:
/// missing tags, surplus tags (a surplus open/close pair counts once) and
/// ordering faults (a pair closed before it opens, or think not strictly
/// before action).
int structure_defects(std::string_view completion);
double structure_penalty(std::string_view completion);

/// -0.5 when non-whitespace follows the last `</action>`.
double extra_text_penalty(std::string_view completion);

FormatPenalty format_penalty(std::string_view completion, std::size_t n_tokens);

/// Sum over steps of environment reward, invalid-action penalty and the
/// three format penalties.
double composite_reward(const EpisodeRecord& episode);

}  // namespace msgrpo
