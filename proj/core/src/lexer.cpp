#include "infooirt/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace infooirt {
namespace {

constexpr std::array<std::string_view, 13> kTwoCharOps = {
    "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%="};

constexpr std::array<std::string_view, 38> kKeywords = {
    "abstract", "boolean", "break",   "byte",      "case",    "catch",  "char",
    "class",    "continue", "default", "do",        "double",  "else",   "extends",
    "false",    "final",   "float",   "for",       "if",      "import", "instanceof",
    "int",      "long",    "new",     "null",      "private", "protected",
    "public",   "return",  "short",   "static",    "super",   "switch", "this",
    "throw",    "true",    "void",    "while"};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_part(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

}  // namespace

bool is_java_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::string strip_comments(std::string_view src) {
  std::string out(src);
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    const char c = src[i];
    if (c == '"' || c == '\'') {
      // Skip literal bodies so "//" inside a string survives.
      std::size_t j = i + 1;
      while (j < n && src[j] != c && src[j] != '\n') {
        j += (src[j] == '\\' && j + 1 < n) ? 2 : 1;
      }
      i = (j < n && src[j] == c) ? j + 1 : i + 1;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') out[i++] = ' ';
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t j = i;
      const std::size_t end = src.find("*/", i + 2);
      const std::size_t stop = end == std::string_view::npos ? n : end + 2;
      for (; j < stop; ++j) {
        if (out[j] != '\n') out[j] = ' ';
      }
      i = stop;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<Lexeme> lex(std::string_view raw) {
  const std::string src = strip_comments(raw);
  std::vector<Lexeme> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto emit = [&](std::size_t len, LexKind kind) {
    out.push_back({src.substr(i, len), kind, line, col, i});
    i += len;
    col += static_cast<int>(len);
  };

  while (i < n) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      ++col;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < n && ident_part(src[j])) ++j;
      const std::string_view word(src.data() + i, j - i);
      emit(j - i, is_java_keyword(word) ? LexKind::keyword : LexKind::identifier);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < n && (ident_part(src[j]) || src[j] == '.')) ++j;
      emit(j - i, LexKind::number);
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && src[j] != c && src[j] != '\n') {
        j += (src[j] == '\\' && j + 1 < n && src[j + 1] != '\n') ? 2 : 1;
      }
      if (j < n && src[j] == c) {
        emit(j + 1 - i, c == '"' ? LexKind::string_literal : LexKind::char_literal);
      } else {
        emit(1, LexKind::punct);  // unterminated quote
      }
      continue;
    }
    if (i + 1 < n) {
      const std::string_view two(src.data() + i, 2);
      if (std::find(kTwoCharOps.begin(), kTwoCharOps.end(), two) != kTwoCharOps.end()) {
        emit(2, LexKind::punct);
        continue;
      }
    }
    emit(1, LexKind::punct);
  }
  return out;
}

}  // namespace infooirt
