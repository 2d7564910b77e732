#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "infooirt/error.hpp"

namespace infooirt {

enum class NodeKind {
  unit,
  method,
  modifier,
  type,
  name,  // method or member name, never a variable
  params,
  param,
  block,
  var_decl,
  declarator,
  if_stmt,
  for_stmt,
  for_init,
  for_update,
  while_stmt,
  return_stmt,
  break_stmt,
  continue_stmt,
  expr_stmt,
  empty_stmt,
  assign,
  ternary,
  binary,
  unary,
  prefix_incdec,
  postfix_incdec,
  cast,
  call,
  member,
  index,
  new_array,
  array_init,
  identifier,  // variable reference
  int_literal,
  string_literal,
  char_literal,
  bool_literal,
  null_literal,
};

std::string_view node_kind_name(NodeKind kind);

struct Span {
  std::size_t begin = 0;  // byte offsets into the source, end exclusive
  std::size_t end = 0;
  int line = 1;
  int column = 1;
};

/// Rooted ordered syntax tree. Leaves carry their source text (identifier
/// name, literal, operator for unary/binary/assign nodes).
struct AstNode {
  NodeKind kind = NodeKind::unit;
  std::string text;
  Span span;
  std::vector<AstNode> children;

  bool is_leaf() const { return children.empty(); }
  /// Height of the subtree rooted here; a leaf has depth 1.
  int depth() const;
  std::size_t size() const;
  /// Kind-only s-expression, e.g. "(block (return_stmt (identifier)))".
  std::string sexp() const;
  void visit(const std::function<void(const AstNode&)>& fn) const;
};

struct MiniAst {
  AstNode root;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, std::vector<std::string> expected, std::string found);
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  int line_;
  int column_;
  std::vector<std::string> expected_;
  std::string found_;
};

/// Parses one method declaration (optional modifiers, return type, name,
/// parameters, body). This is the acceptance rule for corpus filtering.
/// Throws SyntaxError.
MiniAst parse_mini_java(std::string_view code);

/// Parses either a method declaration or a bare statement sequence. Used by
/// the similarity metrics, which also score fragments.
MiniAst parse_snippet(std::string_view code);

bool parses(std::string_view code);

}  // namespace infooirt
