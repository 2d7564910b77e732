#include "infooirt/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "infooirt/error.hpp"
#include "infooirt/lexer.hpp"

namespace infooirt {
namespace {

const std::vector<std::string> kSpecials = {"<pad>", "<bos>", "<eos>", "<unk>", "<sep>"};

int indent_units(std::string_view line) {
  int columns = 0;
  for (char c : line) {
    if (c == ' ') {
      ++columns;
    } else if (c == '\t') {
      columns += 4;
    } else {
      break;
    }
  }
  return columns / 4;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  const std::string clean = strip_comments(text);
  std::vector<std::string> out;
  std::size_t start = 0;
  bool first = true;
  while (start <= clean.size()) {
    std::size_t end = clean.find('\n', start);
    if (end == std::string::npos) end = clean.size();
    const std::string_view line(clean.data() + start, end - start);
    if (!first) out.emplace_back(kNewlineToken);
    first = false;
    const auto lexemes = lex(line);
    if (!lexemes.empty()) {
      for (int i = indent_units(line); i > 0; --i) out.emplace_back(kIndentToken);
      for (const auto& lx : lexemes) out.push_back(lx.text);
    }
    if (end == clean.size()) break;
    start = end + 1;
  }
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool line_start = true;
  for (const auto& tok : tokens) {
    if (tok == kNewlineToken) {
      out.push_back('\n');
      line_start = true;
    } else if (tok == kIndentToken) {
      if (line_start) out.append("    ");
    } else {
      if (!line_start) out.push_back(' ');
      out.append(tok);
      line_start = false;
    }
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
  std::map<std::string, long> counts;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(text)) ++counts[std::move(tok)];
  }
  for (const auto& s : kSpecials) counts.erase(s);
  if (counts.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = kSpecials;
  for (auto& [tok, n] : ranked) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kSpecials.size() ||
      !std::equal(kSpecials.begin(), kSpecials.end(), tokens.begin())) {
    throw ConfigError("vocabulary must start with the five special tokens");
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& tok : tokens_) out << tok << '\n';
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  const auto toks = tokenize(text);
  return encode_tokens(toks);
}

std::vector<TokenId> Vocabulary::encode_tokens(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> toks;
  toks.reserve(ids.size());
  for (TokenId id : ids) toks.push_back(token(id));
  return detokenize(toks);
}

TokenId Vocabulary::id_of(std::string_view tok) const {
  const auto it = index_.find(std::string(tok));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw ConfigError("token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

}  // namespace infooirt
