#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace msgrpo {

using TokenId = int;

/// Ordered token inventory of the toy language model. Token strings are
/// concatenated on decode; END decodes to nothing and terminates generation.
class Vocabulary {
 public:
  static constexpr std::string_view kEnd = "<END>";

  /// `tokens` must be unique and contain kEnd.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId end_id() const { return end_id_; }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// -1 if the string is not a token.
  TokenId find(std::string_view token) const;
  TokenId id_of(std::string_view token) const;
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }

  std::string decode(std::span<const TokenId> ids) const;

  /// Fewest-token segmentation of `text`; nullopt when the text cannot be
  /// written with this vocabulary. Never emits END.
  std::optional<std::vector<TokenId>> try_encode(std::string_view text) const;
  std::vector<TokenId> encode(std::string_view text) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId end_id_ = -1;
};

/// The 24-token default: END, the four tags, the four direction words and
/// fifteen filler pieces.
const Vocabulary& default_vocabulary();

}  // namespace msgrpo
