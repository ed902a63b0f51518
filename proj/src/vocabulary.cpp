#include "msgrpo/vocabulary.hpp"

#include <limits>
#include <optional>

#include "msgrpo/common.hpp"

namespace msgrpo {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    require(!tokens_[i].empty(), "vocabulary: empty token at index " + std::to_string(i));
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    require(inserted, "vocabulary: duplicate token '" + tokens_[i] + "'");
    if (tokens_[i] == kEnd) end_id_ = static_cast<TokenId>(i);
  }
  require(end_id_ >= 0, "vocabulary: END token missing");
}

const std::string& Vocabulary::token(TokenId id) const {
  require(contains(id), "vocabulary: token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

TokenId Vocabulary::id_of(std::string_view token) const {
  TokenId id = find(token);
  require(id >= 0, "vocabulary: unknown token '" + std::string(token) + "'");
  return id;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == end_id_) continue;
    out += token(id);
  }
  return out;
}

std::optional<std::vector<TokenId>> Vocabulary::try_encode(std::string_view text) const {
  // Shortest segmentation by dynamic programming over prefix lengths.
  const std::size_t n = text.size();
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> cost(n + 1, kInf);
  std::vector<TokenId> choice(n + 1, -1);
  cost[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cost[i] == kInf) continue;
    for (std::size_t t = 0; t < tokens_.size(); ++t) {
      if (static_cast<TokenId>(t) == end_id_) continue;
      const std::string& tok = tokens_[t];
      if (text.substr(i, tok.size()) != tok) continue;
      std::size_t j = i + tok.size();
      if (cost[i] + 1 < cost[j]) {
        cost[j] = cost[i] + 1;
        choice[j] = static_cast<TokenId>(t);
      }
    }
  }
  if (cost[n] == kInf) return std::nullopt;
  std::vector<TokenId> ids(cost[n]);
  for (std::size_t j = n, k = ids.size(); j > 0;) {
    TokenId t = choice[j];
    ids[--k] = t;
    j -= tokens_[static_cast<std::size_t>(t)].size();
  }
  return ids;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  auto ids = try_encode(text);
  require(ids.has_value(), "vocabulary: text is not representable: '" + std::string(text) + "'");
  return *std::move(ids);
}

const Vocabulary& default_vocabulary() {
  static const Vocabulary vocab({
      std::string(Vocabulary::kEnd), "<think>", "</think>", "<action>", "</action>",
      "up", "down", "left", "right",
      " ", "\n", "the", "goal", "hole", "is", "go", "safe", "wall", "apple", "avoid", "move",
      "so", "I", ".",
  });
  return vocab;
}

}  // namespace msgrpo
