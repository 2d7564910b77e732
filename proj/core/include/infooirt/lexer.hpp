#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace infooirt {

enum class LexKind { identifier, keyword, number, string_literal, char_literal, punct };

struct Lexeme {
  std::string text;
  LexKind kind;
  int line;    // 1-based
  int column;  // 1-based, tabs count as one column
  std::size_t offset;
};

/// Splits Java-like source into lexemes. Comments are skipped, multi-character
/// operators are matched greedily, string and char literals stay whole. Any
/// other non-space character becomes a one-character punct lexeme, so lexing
/// never fails.
std::vector<Lexeme> lex(std::string_view source);

/// Replaces comment characters with spaces while keeping newlines, so line
/// structure survives.
std::string strip_comments(std::string_view source);

bool is_java_keyword(std::string_view word);

}  // namespace infooirt
