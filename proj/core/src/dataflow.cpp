#include "infooirt/dataflow.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace infooirt {
namespace {

bool is_statement(NodeKind k) {
  switch (k) {
    case NodeKind::block:
    case NodeKind::var_decl:
    case NodeKind::if_stmt:
    case NodeKind::for_stmt:
    case NodeKind::while_stmt:
    case NodeKind::return_stmt:
    case NodeKind::expr_stmt:
      return true;
    default:
      return false;
  }
}

using State = std::map<std::string, std::set<int>>;

State merge(const State& a, const State& b) {
  State out = a;
  for (const auto& [name, defs] : b) out[name].insert(defs.begin(), defs.end());
  return out;
}

class Analyzer {
 public:
  DataflowGraph run(const AstNode& root) {
    collect(root, "unit");
    State s;
    walk_top(root, s);
    graph_.edges.assign(edges_.begin(), edges_.end());
    return std::move(graph_);
  }

 private:
  DataflowGraph graph_;
  std::unordered_map<const AstNode*, int> use_of_;
  std::unordered_map<const AstNode*, int> def_of_;
  std::set<std::pair<int, int>> edges_;

  int add(const AstNode& n, bool is_def, std::string context) {
    graph_.occurrences.push_back({n.text, is_def, std::move(context), n.span});
    const int id = static_cast<int>(graph_.occurrences.size()) - 1;
    (is_def ? def_of_ : use_of_)[&n] = id;
    return id;
  }

  // Pass 1: number every variable occurrence in preorder.
  void collect(const AstNode& n, const std::string& ctx) {
    const std::string here = is_statement(n.kind) ? std::string(node_kind_name(n.kind)) : ctx;
    switch (n.kind) {
      case NodeKind::param:
        add(n.children[1], true, "param");
        return;
      case NodeKind::declarator:
        if (n.children.size() > 1) {
          add(n.children[0], true, "decl");
          collect(n.children[1], here);
        }
        return;
      case NodeKind::assign: {
        const AstNode& lhs = n.children[0];
        if (lhs.kind == NodeKind::identifier) {
          if (n.text != "=") add(lhs, false, here);
          add(lhs, true, "assign");
        } else {
          collect(lhs, here);
        }
        collect(n.children[1], here);
        return;
      }
      case NodeKind::prefix_incdec:
      case NodeKind::postfix_incdec: {
        const AstNode& operand = n.children[0];
        if (operand.kind == NodeKind::identifier) {
          add(operand, false, here);
          add(operand, true, "update");
        } else {
          collect(operand, here);
        }
        return;
      }
      case NodeKind::identifier:
        add(n, false, here);
        return;
      default:
        for (const auto& c : n.children) collect(c, here);
    }
  }

  void use(const AstNode& n, const State& s) {
    const auto it = use_of_.find(&n);
    if (it == use_of_.end()) return;
    const auto defs = s.find(n.text);
    if (defs == s.end()) return;
    for (int d : defs->second) edges_.emplace(d, it->second);
  }

  void define(const AstNode& n, State& s) {
    const auto it = def_of_.find(&n);
    if (it != def_of_.end()) s[n.text] = {it->second};
  }

  // Pass 2: reaching definitions.
  void expr(const AstNode& n, State& s) {
    switch (n.kind) {
      case NodeKind::identifier:
        use(n, s);
        return;
      case NodeKind::prefix_incdec:
      case NodeKind::postfix_incdec:
        if (n.children[0].kind == NodeKind::identifier) {
          use(n.children[0], s);
          define(n.children[0], s);
        } else {
          expr(n.children[0], s);
        }
        return;
      case NodeKind::assign: {
        expr(n.children[1], s);
        const AstNode& lhs = n.children[0];
        if (lhs.kind == NodeKind::identifier) {
          if (n.text != "=") use(lhs, s);
          define(lhs, s);
        } else {
          expr(lhs, s);
        }
        return;
      }
      default:
        for (const auto& c : n.children) expr(c, s);
    }
  }

  void walk_top(const AstNode& unit, State& s) {
    for (const auto& c : unit.children) {
      if (c.kind == NodeKind::method) {
        for (const auto& m : c.children) {
          if (m.kind == NodeKind::params) {
            for (const auto& p : m.children) define(p.children[1], s);
          } else if (m.kind == NodeKind::block) {
            stmt(m, s);
          }
        }
      } else {
        stmt(c, s);
      }
    }
  }

  void loop(const AstNode* cond, const AstNode& body, const AstNode* update, State& s) {
    State entry = s;
    State after_cond;
    for (int iter = 0; iter < 64; ++iter) {
      after_cond = entry;
      if (cond) expr(*cond, after_cond);
      State st = after_cond;
      stmt(body, st);
      if (update) {
        for (const auto& u : update->children) stmt(u, st);
      }
      State merged = merge(entry, st);
      if (merged == entry) break;
      entry = std::move(merged);
    }
    s = std::move(after_cond);
  }

  void stmt(const AstNode& n, State& s) {
    switch (n.kind) {
      case NodeKind::block: {
        std::vector<std::string> declared;
        for (const auto& c : n.children) {
          if (c.kind == NodeKind::var_decl) {
            for (std::size_t i = 1; i < c.children.size(); ++i) {
              declared.push_back(c.children[i].children[0].text);
            }
          }
          stmt(c, s);
        }
        for (const auto& name : declared) s.erase(name);
        return;
      }
      case NodeKind::var_decl:
        for (std::size_t i = 1; i < n.children.size(); ++i) {
          const AstNode& d = n.children[i];
          if (d.children.size() > 1) {
            expr(d.children[1], s);
            define(d.children[0], s);
          } else {
            s[d.children[0].text].clear();
          }
        }
        return;
      case NodeKind::expr_stmt:
        expr(n.children[0], s);
        return;
      case NodeKind::if_stmt: {
        expr(n.children[0], s);
        State then_state = s;
        stmt(n.children[1], then_state);
        State else_state = s;
        if (n.children.size() > 2) stmt(n.children[2], else_state);
        s = merge(then_state, else_state);
        return;
      }
      case NodeKind::while_stmt:
        loop(&n.children[0], n.children[1], nullptr, s);
        return;
      case NodeKind::for_stmt: {
        std::vector<std::string> declared;
        for (const auto& init : n.children[0].children) {
          if (init.kind == NodeKind::var_decl) {
            for (std::size_t i = 1; i < init.children.size(); ++i) {
              declared.push_back(init.children[i].children[0].text);
            }
          }
          stmt(init, s);
        }
        loop(&n.children[1], n.children[3], &n.children[2], s);
        for (const auto& name : declared) s.erase(name);
        return;
      }
      case NodeKind::return_stmt:
        for (const auto& c : n.children) expr(c, s);
        return;
      default:
        return;
    }
  }
};

}  // namespace

DataflowGraph dataflow(const MiniAst& ast) { return Analyzer().run(ast.root); }

std::vector<std::string> DataflowGraph::normalized_edges() const {
  std::map<std::string, int> rename;
  for (const auto& occ : occurrences) {
    rename.emplace(occ.name, static_cast<int>(rename.size()));
  }
  std::vector<std::string> out;
  out.reserve(edges.size());
  for (const auto& [d, u] : edges) {
    const auto& def = occurrences[static_cast<std::size_t>(d)];
    const auto& use = occurrences[static_cast<std::size_t>(u)];
    out.push_back("var_" + std::to_string(rename.at(def.name)) + ":" + def.context + "->" +
                  use.context);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace infooirt
