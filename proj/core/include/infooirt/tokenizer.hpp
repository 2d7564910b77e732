#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace infooirt {

using TokenId = std::int32_t;

inline constexpr std::string_view kIndentToken = "<INDENT>";
inline constexpr std::string_view kNewlineToken = "<NL>";

/// Splits text into tokens: lexemes of each line, a `<NL>` between lines, and
/// one `<INDENT>` per four columns of leading whitespace (a tab counts as
/// four). Comments are dropped. Other whitespace is not represented.
std::vector<std::string> tokenize(std::string_view text);

/// Inverse of `tokenize` up to canonical whitespace: tokens on a line are
/// joined by single spaces and indentation is rendered as four spaces.
std::string detokenize(std::span<const std::string> tokens);

/// Bidirectional token/id map. Ids 0..4 are reserved for the special tokens,
/// ordinary tokens follow in descending frequency, ties lexicographic.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kSep = 4;
  static constexpr int kNumSpecial = 5;

  /// Builds from raw texts. Throws ConfigError when no text yields a token.
  static Vocabulary build(std::span<const std::string> texts);

  /// Rebuilds from an id-ordered token list (first five must be the specials).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<TokenId> encode(std::string_view text) const;
  std::vector<TokenId> encode_tokens(std::span<const std::string> tokens) const;
  /// Throws ConfigError for an id outside [0, size()).
  std::string decode(std::span<const TokenId> ids) const;

  TokenId id_of(std::string_view token) const;
  const std::string& token(TokenId id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace infooirt
