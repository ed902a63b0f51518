#include "msgrpo/reward_shaping.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string_view>
#include <vector>

#include "msgrpo/tmsg.hpp"

namespace msgrpo {

namespace {

constexpr double kLengthFree = 180.0;
constexpr double kLengthSaturated = 200.0;

struct TagPositions {
  std::vector<std::size_t> opens;
  std::vector<std::size_t> closes;
};

// Positions of `<name>` and `</name>` in order of appearance.
TagPositions scan_tag(std::string_view text, std::string_view name) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  TagPositions t;
  for (auto p = text.find(open); p != std::string_view::npos; p = text.find(open, p + 1)) t.opens.push_back(p);
  for (auto p = text.find(close); p != std::string_view::npos; p = text.find(close, p + 1)) t.closes.push_back(p);
  return t;
}

struct Span {
  std::size_t open;
  std::size_t close;
};

// The first open tag with the first close tag after it.
std::optional<Span> first_pair(const TagPositions& t) {
  if (t.opens.empty()) return std::nullopt;
  const std::size_t open = t.opens.front();
  auto it = std::find_if(t.closes.begin(), t.closes.end(), [&](std::size_t c) { return c > open; });
  if (it == t.closes.end()) return std::nullopt;
  return Span{open, *it};
}

int defects_for(const TagPositions& t, std::optional<Span>& pair) {
  int d = 0;
  if (t.opens.empty()) ++d;
  if (t.closes.empty()) ++d;
  const std::size_t most = std::max(t.opens.size(), t.closes.size());
  if (most > 1) d += static_cast<int>(most - 1);
  pair = first_pair(t);
  if (!t.opens.empty() && !t.closes.empty() && !pair) ++d;  // closed before opened
  return d;
}

}  // namespace

double length_penalty(std::size_t n_tokens) {
  const double x = (static_cast<double>(n_tokens) - kLengthFree) / (kLengthSaturated - kLengthFree);
  return -0.5 * std::clamp(x, 0.0, 1.0);
}

int structure_defects(std::string_view completion) {
  const TagPositions think = scan_tag(completion, "think");
  const TagPositions action = scan_tag(completion, "action");
  std::optional<Span> think_pair;
  std::optional<Span> action_pair;
  int defects = defects_for(think, think_pair) + defects_for(action, action_pair);
  if (think_pair && action_pair && !(think_pair->close < action_pair->open)) ++defects;
  return defects;
}

double structure_penalty(std::string_view completion) {
  return kFormatDefectPenalty * structure_defects(completion);
}

double extra_text_penalty(std::string_view completion) {
  constexpr std::string_view kClose = "</action>";
  const std::size_t close = completion.rfind(kClose);
  if (close == std::string_view::npos) return 0.0;
  const auto tail = completion.substr(close + kClose.size());
  const bool has_text =
      std::any_of(tail.begin(), tail.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) == 0; });
  return has_text ? kFormatDefectPenalty : 0.0;
}

FormatPenalty format_penalty(std::string_view completion, std::size_t n_tokens) {
  return {length_penalty(n_tokens), structure_penalty(completion), extra_text_penalty(completion)};
}

double composite_reward(const EpisodeRecord& episode) {
  double total = 0.0;
  for (const StepRecord& s : episode.steps) total += s.env_reward + s.invalid_penalty + s.format.total();
  return total;
}

}  // namespace msgrpo
