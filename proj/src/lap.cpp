#include "msgrpo/lap.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace msgrpo {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Up:
      return "up";
    case Direction::Down:
      return "down";
    case Direction::Left:
      return "left";
    case Direction::Right:
      return "right";
  }
  return "up";
}

std::string action_to_string(Action a) { return a ? std::string(to_string(*a)) : std::string("none"); }

std::optional<Direction> direction_from_word(std::string_view word) {
  for (Direction d : kDirections) {
    if (word == to_string(d)) return d;
  }
  return std::nullopt;
}

std::string to_string(GridPos p) { return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")"; }

PromptTemplate::PromptTemplate(std::string id, std::string text) : id_(std::move(id)), text_(std::move(text)) {
  require(count_occurrences(text_, kObservationPlaceholder) == 1,
          "prompt template '" + id_ + "' must contain exactly one " + std::string(kObservationPlaceholder));
  placeholder_ = text_.find(kObservationPlaceholder);
}

std::string build_prompt(const PromptTemplate& tmpl, std::string_view observation) {
  std::string out;
  out.reserve(tmpl.text_.size() - kObservationPlaceholder.size() + observation.size());
  out.append(tmpl.text_, 0, tmpl.placeholder_);
  out.append(observation);
  out.append(tmpl.text_, tmpl.placeholder_ + kObservationPlaceholder.size());
  return out;
}

const PromptTemplate& canonical_template() {
  static const PromptTemplate tmpl(
      "canonical",
      "You are playing a grid game. Read the observation and pick your next move.\n"
      "\n"
      "[OBS]\n"
      "\n"
      "Think briefly inside <think></think>, then answer with exactly one of up, down, left or right "
      "inside <action></action>. Write nothing after </action>.\n");
  return tmpl;
}

PromptTemplate load_template(const std::filesystem::path& dir, const std::string& id) {
  const auto path = dir / (id + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (id == canonical_template().id()) return canonical_template();
    throw std::runtime_error("prompt template '" + id + "' not found at " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(id, buf.str());
}

ParsedAction parse_action(std::string_view completion) {
  constexpr std::string_view kOpen = "<action>";
  constexpr std::string_view kClose = "</action>";
  const std::size_t close = completion.rfind(kClose);
  if (close == std::string_view::npos) return {};
  const std::size_t open = completion.substr(0, close).rfind(kOpen);
  if (open == std::string_view::npos) return {};
  ParsedAction parsed;
  parsed.raw_span = std::string(completion.substr(open + kOpen.size(), close - open - kOpen.size()));
  std::string word(trim(parsed.raw_span));
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  parsed.value = direction_from_word(word);
  return parsed;
}

std::string canonical_completion(Direction d) {
  return "<think></think><action>" + std::string(to_string(d)) + "</action>";
}

}  // namespace msgrpo
