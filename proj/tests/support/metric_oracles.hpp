#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "infooirt/metrics.hpp"
#include "infooirt/parser.hpp"

// Brute-force CodeBLEU component oracles over explicit n-gram lists, subtree
// lists and hand-traced def-use edges.
namespace infooirt::testing {

using Tokens = std::vector<std::string>;

inline bool oracle_keyword(const std::string& t) { return t == "int" || t == "return"; }

/// Smoothed 4-gram BLEU from explicit n-gram lists: unigram precision with a
/// 0.1 floor on zero matches, add-one for higher orders, brevity penalty.
inline double oracle_bleu(const Tokens& cand, const Tokens& ref, bool weighted) {
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<Tokens> cg, rg;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) cg.emplace_back(cand.begin() + i, cand.begin() + i + n);
    for (std::size_t i = 0; i + n <= ref.size(); ++i) rg.emplace_back(ref.begin() + i, ref.begin() + i + n);
    std::vector<Tokens> distinct;
    for (const auto& g : cg) {
      if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
    }
    double matches = 0.0, total = 0.0;
    for (const auto& g : distinct) {
      const double c = static_cast<double>(std::count(cg.begin(), cg.end(), g));
      const double r = static_cast<double>(std::count(rg.begin(), rg.end(), g));
      const double w = (weighted && n == 1 && oracle_keyword(g[0])) ? 4.0 : 1.0;
      matches += w * std::min(c, r);
      total += w * c;
    }
    const double p = n == 1 ? (matches > 0 ? matches / total : 0.1 / total) : (matches + 1.0) / (total + 1.0);
    log_sum += 0.25 * std::log(p);
  }
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

inline int oracle_depth(const AstNode& n) {
  int d = 0;
  for (const auto& c : n.children) d = std::max(d, oracle_depth(c));
  return d + 1;
}

inline bool same_shape(const AstNode& a, const AstNode& b) {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!same_shape(a.children[i], b.children[i])) return false;
  }
  return true;
}

inline void oracle_subtrees(const AstNode& n, std::vector<const AstNode*>& out) {
  if (n.kind != NodeKind::unit && oracle_depth(n) >= 2) out.push_back(&n);
  for (const auto& c : n.children) oracle_subtrees(c, out);
}

inline double oracle_ast(const std::string& cand, const std::string& ref) {
  const MiniAst ca = parse_snippet(cand), ra = parse_snippet(ref);
  std::vector<const AstNode*> cs, rs;
  oracle_subtrees(ca.root, cs);
  oracle_subtrees(ra.root, rs);
  if (rs.empty()) return cs.empty() ? 1.0 : 0.0;
  std::vector<bool> used(rs.size(), false);
  int matched = 0;
  for (const AstNode* c : cs) {
    for (std::size_t j = 0; j < rs.size(); ++j) {
      if (!used[j] && same_shape(*c, *rs[j])) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(rs.size());
}

// Straight-line statement menu for the randomized pairs. Each statement
// lists its uses (with context) before its def.
struct Stmt {
  Tokens tokens;
  std::vector<std::pair<std::string, std::string>> uses;  // (var, context)
  std::optional<std::pair<std::string, std::string>> def;
};

inline Stmt random_stmt(std::mt19937& rng) {
  const std::string vars[] = {"a", "b"};
  const std::string nums[] = {"0", "1"};
  auto v = [&] { return vars[rng() % 2]; };
  const std::string x = v(), y = v(), n = nums[rng() % 2];
  switch (rng() % 6) {
    case 0: return {{"int", x, "=", n, ";"}, {}, std::pair{x, std::string("decl")}};
    case 1: return {{"int", x, "=", y, ";"}, {{y, "var_decl"}}, std::pair{x, std::string("decl")}};
    case 2: return {{x, "=", n, ";"}, {}, std::pair{x, std::string("assign")}};
    case 3: return {{x, "=", y, ";"}, {{y, "expr_stmt"}}, std::pair{x, std::string("assign")}};
    case 4: return {{"return", x, ";"}, {{x, "return_stmt"}}, std::nullopt};
    default: return {{x, "++", ";"}, {{x, "expr_stmt"}}, std::pair{x, std::string("update")}};
  }
}

struct Program {
  std::string text;
  Tokens tokens;
  std::vector<std::string> edges;  // normalized labels
};

inline Program random_program(std::mt19937& rng) {
  std::vector<Stmt> stmts;
  std::size_t len = 0;
  while (true) {
    Stmt s = random_stmt(rng);
    if (len + s.tokens.size() > 8) {
      if (!stmts.empty()) break;
      continue;
    }
    len += s.tokens.size();
    stmts.push_back(std::move(s));
    if (rng() % 3 == 0) break;
  }
  Program p;
  for (const auto& s : stmts) {
    for (const auto& t : s.tokens) {
      p.text += (p.text.empty() ? "" : " ") + t;
      p.tokens.push_back(t);
    }
  }
  std::map<std::string, int> rename;
  for (const auto& t : p.tokens) {
    if (t == "a" || t == "b") rename.emplace(t, static_cast<int>(rename.size()));
  }
  std::map<std::string, std::string> reaching;  // var -> def context
  for (const auto& s : stmts) {
    for (const auto& [var, ctx] : s.uses) {
      auto it = reaching.find(var);
      if (it != reaching.end()) p.edges.push_back("var_" + std::to_string(rename[var]) + ":" + it->second + "->" + ctx);
    }
    if (s.def) reaching[s.def->first] = s.def->second;
  }
  return p;
}

inline double oracle_dataflow(const Program& cand, const Program& ref) {
  if (ref.edges.empty()) return cand.edges.empty() ? 1.0 : 0.0;
  std::vector<bool> used(ref.edges.size(), false);
  int matched = 0;
  for (const auto& e : cand.edges) {
    for (std::size_t j = 0; j < ref.edges.size(); ++j) {
      if (!used[j] && ref.edges[j] == e) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref.edges.size());
}

}  // namespace infooirt::testing
