#pragma once

#include <string>
#include <utility>
#include <vector>

#include "infooirt/parser.hpp"

namespace infooirt {

/// One occurrence of a variable in the program.
struct VarOccurrence {
  std::string name;
  bool is_def = false;
  /// Syntactic role: for defs one of param/decl/assign/update, for uses the
  /// kind of the innermost enclosing statement.
  std::string context;
  Span span;
};

/// Def-use graph. Occurrences are stored in program (preorder) order; edges
/// index into `occurrences` as (def, use).
struct DataflowGraph {
  std::vector<VarOccurrence> occurrences;
  std::vector<std::pair<int, int>> edges;

  /// Position-free edge labels for matching, with variables renamed by first
  /// occurrence order (var_0, var_1, ...). Sorted.
  std::vector<std::string> normalized_edges() const;
};

/// Reaching-definitions over the structured AST: a forward scan per lexical
/// scope, branch states merged at joins, loops iterated to a fixed point.
DataflowGraph dataflow(const MiniAst& ast);

}  // namespace infooirt
