#include "infooirt/parser.hpp"

#include <algorithm>
#include <array>

#include "infooirt/lexer.hpp"

namespace infooirt {

std::string_view node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::unit: return "unit";
    case NodeKind::method: return "method";
    case NodeKind::modifier: return "modifier";
    case NodeKind::type: return "type";
    case NodeKind::name: return "name";
    case NodeKind::params: return "params";
    case NodeKind::param: return "param";
    case NodeKind::block: return "block";
    case NodeKind::var_decl: return "var_decl";
    case NodeKind::declarator: return "declarator";
    case NodeKind::if_stmt: return "if_stmt";
    case NodeKind::for_stmt: return "for_stmt";
    case NodeKind::for_init: return "for_init";
    case NodeKind::for_update: return "for_update";
    case NodeKind::while_stmt: return "while_stmt";
    case NodeKind::return_stmt: return "return_stmt";
    case NodeKind::break_stmt: return "break_stmt";
    case NodeKind::continue_stmt: return "continue_stmt";
    case NodeKind::expr_stmt: return "expr_stmt";
    case NodeKind::empty_stmt: return "empty_stmt";
    case NodeKind::assign: return "assign";
    case NodeKind::ternary: return "ternary";
    case NodeKind::binary: return "binary";
    case NodeKind::unary: return "unary";
    case NodeKind::prefix_incdec: return "prefix_incdec";
    case NodeKind::postfix_incdec: return "postfix_incdec";
    case NodeKind::cast: return "cast";
    case NodeKind::call: return "call";
    case NodeKind::member: return "member";
    case NodeKind::index: return "index";
    case NodeKind::new_array: return "new_array";
    case NodeKind::array_init: return "array_init";
    case NodeKind::identifier: return "identifier";
    case NodeKind::int_literal: return "int_literal";
    case NodeKind::string_literal: return "string_literal";
    case NodeKind::char_literal: return "char_literal";
    case NodeKind::bool_literal: return "bool_literal";
    case NodeKind::null_literal: return "null_literal";
  }
  return "?";
}

int AstNode::depth() const {
  int d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return d + 1;
}

std::size_t AstNode::size() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.size();
  return n;
}

std::string AstNode::sexp() const {
  std::string s = "(";
  s += node_kind_name(kind);
  for (const auto& c : children) {
    s += ' ';
    s += c.sexp();
  }
  s += ')';
  return s;
}

void AstNode::visit(const std::function<void(const AstNode&)>& fn) const {
  fn(*this);
  for (const auto& c : children) c.visit(fn);
}

namespace {

std::string describe_expected(const std::vector<std::string>& expected) {
  std::string s;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) s += i + 1 == expected.size() ? " or " : ", ";
    s += expected[i];
  }
  return s;
}

}  // namespace

SyntaxError::SyntaxError(int line, int column, std::vector<std::string> expected, std::string found)
    : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) +
            ": expected " + describe_expected(expected) + ", found " + found),
      line_(line),
      column_(column),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

namespace {

constexpr std::array<std::string_view, 8> kPrimitiveTypes = {
    "int", "boolean", "char", "double", "long", "float", "short", "byte"};

bool is_primitive(std::string_view s) {
  return std::find(kPrimitiveTypes.begin(), kPrimitiveTypes.end(), s) != kPrimitiveTypes.end();
}

bool is_assign_op(std::string_view s) {
  return s == "=" || s == "+=" || s == "-=" || s == "*=" || s == "/=" || s == "%=";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)), src_size_(src.size()) {}

  AstNode parse_method_unit() {
    AstNode unit = make(NodeKind::unit);
    unit.children.push_back(method());
    expect_end();
    return finish(std::move(unit));
  }

  AstNode parse_snippet_unit() {
    AstNode unit = make(NodeKind::unit);
    if (looks_like_method()) {
      unit.children.push_back(method());
    } else {
      while (!at_end()) unit.children.push_back(statement());
    }
    expect_end();
    return finish(std::move(unit));
  }

 private:
  std::vector<Lexeme> toks_;
  std::size_t src_size_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= toks_.size(); }
  const Lexeme* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }
  bool check(std::string_view text, std::size_t ahead = 0) const {
    const Lexeme* t = peek(ahead);
    return t && t->text == text;
  }
  bool check_kind(LexKind kind, std::size_t ahead = 0) const {
    const Lexeme* t = peek(ahead);
    return t && t->kind == kind;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    if (at_end()) {
      int line = 1, col = 1;
      if (!toks_.empty()) {
        line = toks_.back().line;
        col = toks_.back().column + static_cast<int>(toks_.back().text.size());
      }
      throw SyntaxError(line, col, std::move(expected), "end of input");
    }
    const Lexeme& t = toks_[pos_];
    throw SyntaxError(t.line, t.column, std::move(expected), "'" + t.text + "'");
  }

  const Lexeme& advance() { return toks_[pos_++]; }

  const Lexeme& expect(std::string_view text) {
    if (!check(text)) fail({"'" + std::string(text) + "'"});
    return advance();
  }

  void expect_end() {
    if (!at_end()) fail({"end of input"});
  }

  AstNode make(NodeKind kind, std::string text = {}) const {
    AstNode n;
    n.kind = kind;
    n.text = std::move(text);
    if (const Lexeme* t = peek()) {
      n.span = {t->offset, t->offset, t->line, t->column};
    } else {
      n.span = {src_size_, src_size_, 1, 1};
    }
    return n;
  }

  AstNode leaf(NodeKind kind) {
    AstNode n = make(kind, peek()->text);
    const Lexeme& t = advance();
    n.span.end = t.offset + t.text.size();
    return n;
  }

  AstNode finish(AstNode n) const {
    n.span.end = pos_ > 0 ? toks_[pos_ - 1].offset + toks_[pos_ - 1].text.size() : n.span.begin;
    if (n.span.end < n.span.begin) n.span.end = n.span.begin;
    return n;
  }

  // ---- declarations -------------------------------------------------------

  bool is_modifier(std::size_t ahead = 0) const {
    return check("public", ahead) || check("private", ahead) || check("protected", ahead) ||
           check("static", ahead) || check("final", ahead);
  }

  bool type_starts(std::size_t ahead = 0) const {
    const Lexeme* t = peek(ahead);
    if (!t) return false;
    return is_primitive(t->text) || t->text == "void" || t->kind == LexKind::identifier;
  }

  /// Length of a type (name plus `[]` pairs) starting at `ahead`, or 0.
  std::size_t type_length(std::size_t ahead) const {
    if (!type_starts(ahead)) return 0;
    std::size_t len = 1;
    while (check("[", ahead + len) && check("]", ahead + len + 1)) len += 2;
    return len;
  }

  bool looks_like_method() const {
    std::size_t i = 0;
    while (is_modifier(i)) ++i;
    const std::size_t tl = type_length(i);
    return tl > 0 && check_kind(LexKind::identifier, i + tl) && check("(", i + tl + 1);
  }

  /// A local declaration starts with a type followed by a variable name.
  bool looks_like_declaration() const {
    std::size_t i = 0;
    if (check("final")) i = 1;
    const Lexeme* t = peek(i);
    if (!t || t->text == "void") return false;
    const std::size_t tl = type_length(i);
    if (tl == 0) return false;
    if (!is_primitive(t->text) && t->kind != LexKind::identifier) return false;
    return check_kind(LexKind::identifier, i + tl);
  }

  AstNode type() {
    if (!type_starts()) fail({"type"});
    AstNode n = make(NodeKind::type);
    std::string text = advance().text;
    while (check("[") && check("]", 1)) {
      advance();
      advance();
      text += "[]";
    }
    n.text = std::move(text);
    return finish(std::move(n));
  }

  AstNode method() {
    AstNode m = make(NodeKind::method);
    while (is_modifier()) m.children.push_back(leaf(NodeKind::modifier));
    m.children.push_back(type());
    if (!check_kind(LexKind::identifier)) fail({"method name"});
    m.children.push_back(leaf(NodeKind::name));
    expect("(");
    AstNode ps = make(NodeKind::params);
    if (!check(")")) {
      do {
        AstNode p = make(NodeKind::param);
        if (check("final")) advance();
        if (!type_starts() || check("void")) fail({"parameter type", "')'"});
        p.children.push_back(type());
        if (!check_kind(LexKind::identifier)) fail({"parameter name"});
        p.children.push_back(leaf(NodeKind::identifier));
        ps.children.push_back(finish(std::move(p)));
      } while (check(",") && (advance(), true));
    }
    expect(")");
    m.children.push_back(finish(std::move(ps)));
    if (!check("{")) fail({"'{'"});
    m.children.push_back(block());
    return finish(std::move(m));
  }

  // ---- statements ---------------------------------------------------------

  AstNode block() {
    AstNode b = make(NodeKind::block);
    expect("{");
    while (!check("}")) {
      if (at_end()) fail({"'}'", "statement"});
      b.children.push_back(statement());
    }
    advance();
    return finish(std::move(b));
  }

  AstNode var_decl_body() {
    AstNode d = make(NodeKind::var_decl);
    if (check("final")) advance();
    d.children.push_back(type());
    do {
      AstNode decl = make(NodeKind::declarator);
      if (!check_kind(LexKind::identifier)) fail({"variable name"});
      decl.children.push_back(leaf(NodeKind::identifier));
      if (check("=")) {
        advance();
        decl.children.push_back(check("{") ? array_init() : expression());
      }
      d.children.push_back(finish(std::move(decl)));
    } while (check(",") && (advance(), true));
    return finish(std::move(d));
  }

  AstNode statement() {
    if (check("{")) return block();
    if (check(";")) {
      AstNode n = make(NodeKind::empty_stmt);
      advance();
      return finish(std::move(n));
    }
    if (check("if")) {
      AstNode n = make(NodeKind::if_stmt);
      advance();
      expect("(");
      n.children.push_back(expression());
      expect(")");
      n.children.push_back(statement());
      if (check("else")) {
        advance();
        n.children.push_back(statement());
      }
      return finish(std::move(n));
    }
    if (check("while")) {
      AstNode n = make(NodeKind::while_stmt);
      advance();
      expect("(");
      n.children.push_back(expression());
      expect(")");
      n.children.push_back(statement());
      return finish(std::move(n));
    }
    if (check("for")) return for_statement();
    if (check("return")) {
      AstNode n = make(NodeKind::return_stmt);
      advance();
      if (!check(";")) n.children.push_back(expression());
      expect(";");
      return finish(std::move(n));
    }
    if (check("break") || check("continue")) {
      AstNode n = make(check("break") ? NodeKind::break_stmt : NodeKind::continue_stmt);
      advance();
      expect(";");
      return finish(std::move(n));
    }
    if (looks_like_declaration()) {
      AstNode d = var_decl_body();
      expect(";");
      return finish(std::move(d));
    }
    if (at_end()) fail({"statement"});
    AstNode s = simple_statement();
    expect(";");
    return finish(std::move(s));
  }

  /// Assignment, increment/decrement or call, without the terminator.
  AstNode simple_statement() {
    AstNode n = make(NodeKind::expr_stmt);
    const std::size_t start = pos_;
    AstNode e = expression();
    if (!at_end() && is_assign_op(peek()->text)) {
      if (e.kind != NodeKind::identifier && e.kind != NodeKind::index &&
          e.kind != NodeKind::member) {
        pos_ = start;
        fail({"assignable expression"});
      }
      AstNode a = make(NodeKind::assign, advance().text);
      a.span.begin = e.span.begin;
      a.span.line = e.span.line;
      a.span.column = e.span.column;
      a.children.push_back(std::move(e));
      a.children.push_back(expression());
      n.children.push_back(finish(std::move(a)));
      return finish(std::move(n));
    }
    if (e.kind != NodeKind::call && e.kind != NodeKind::prefix_incdec &&
        e.kind != NodeKind::postfix_incdec) {
      fail({"'='", "statement"});
    }
    n.children.push_back(std::move(e));
    return finish(std::move(n));
  }

  AstNode for_statement() {
    AstNode n = make(NodeKind::for_stmt);
    advance();
    expect("(");
    AstNode init = make(NodeKind::for_init);
    if (!check(";")) {
      if (looks_like_declaration()) {
        init.children.push_back(var_decl_body());
      } else {
        init.children.push_back(simple_statement());
        while (check(",")) {
          advance();
          init.children.push_back(simple_statement());
        }
      }
    }
    expect(";");
    n.children.push_back(finish(std::move(init)));
    if (!check(";")) {
      n.children.push_back(expression());
    } else {
      AstNode t = make(NodeKind::bool_literal, "true");
      n.children.push_back(std::move(t));
    }
    expect(";");
    AstNode update = make(NodeKind::for_update);
    if (!check(")")) {
      update.children.push_back(simple_statement());
      while (check(",")) {
        advance();
        update.children.push_back(simple_statement());
      }
    }
    expect(")");
    n.children.push_back(finish(std::move(update)));
    n.children.push_back(statement());
    return finish(std::move(n));
  }

  // ---- expressions --------------------------------------------------------

  AstNode expression() { return ternary(); }

  AstNode ternary() {
    AstNode cond = binary_level(0);
    if (!check("?")) return cond;
    AstNode n = make(NodeKind::ternary);
    n.span.begin = cond.span.begin;
    n.span.line = cond.span.line;
    n.span.column = cond.span.column;
    advance();
    n.children.push_back(std::move(cond));
    n.children.push_back(expression());
    expect(":");
    n.children.push_back(expression());
    return finish(std::move(n));
  }

  static const std::vector<std::vector<std::string_view>>& levels() {
    static const std::vector<std::vector<std::string_view>> kLevels = {
        {"||"}, {"&&"}, {"==", "!="}, {"<", "<=", ">", ">="}, {"+", "-"}, {"*", "/", "%"}};
    return kLevels;
  }

  AstNode binary_level(std::size_t level) {
    if (level == levels().size()) return unary();
    AstNode lhs = binary_level(level + 1);
    const auto& ops = levels()[level];
    while (!at_end() && peek()->kind == LexKind::punct &&
           std::find(ops.begin(), ops.end(), peek()->text) != ops.end()) {
      AstNode n = make(NodeKind::binary, advance().text);
      n.span.begin = lhs.span.begin;
      n.span.line = lhs.span.line;
      n.span.column = lhs.span.column;
      n.children.push_back(std::move(lhs));
      n.children.push_back(binary_level(level + 1));
      lhs = finish(std::move(n));
    }
    return lhs;
  }

  AstNode unary() {
    if (check("!") || check("-") || check("+")) {
      AstNode n = make(NodeKind::unary, advance().text);
      n.children.push_back(unary());
      return finish(std::move(n));
    }
    if (check("++") || check("--")) {
      AstNode n = make(NodeKind::prefix_incdec, advance().text);
      n.children.push_back(unary());
      return finish(std::move(n));
    }
    if (check("(") && peek(1) && is_primitive(peek(1)->text) && check(")", 2)) {
      AstNode n = make(NodeKind::cast);
      advance();
      AstNode t = make(NodeKind::type, advance().text);
      n.children.push_back(finish(std::move(t)));
      advance();
      n.children.push_back(unary());
      return finish(std::move(n));
    }
    return postfix();
  }

  std::vector<AstNode> arguments() {
    std::vector<AstNode> args;
    expect("(");
    if (!check(")")) {
      args.push_back(expression());
      while (check(",")) {
        advance();
        args.push_back(expression());
      }
    }
    expect(")");
    return args;
  }

  AstNode postfix() {
    AstNode e = primary();
    for (;;) {
      const std::size_t begin = e.span.begin;
      const int line = e.span.line, col = e.span.column;
      auto rebase = [&](AstNode& n) {
        n.span.begin = begin;
        n.span.line = line;
        n.span.column = col;
      };
      if (check(".")) {
        advance();
        if (!check_kind(LexKind::identifier)) fail({"member name"});
        AstNode name = leaf(NodeKind::name);
        if (check("(")) {
          AstNode call = make(NodeKind::call);
          rebase(call);
          AstNode member = make(NodeKind::member);
          rebase(member);
          member.children.push_back(std::move(e));
          member.children.push_back(std::move(name));
          call.children.push_back(finish(std::move(member)));
          for (auto& a : arguments()) call.children.push_back(std::move(a));
          e = finish(std::move(call));
        } else {
          AstNode member = make(NodeKind::member);
          rebase(member);
          member.children.push_back(std::move(e));
          member.children.push_back(std::move(name));
          e = finish(std::move(member));
        }
      } else if (check("[")) {
        advance();
        AstNode idx = make(NodeKind::index);
        rebase(idx);
        idx.children.push_back(std::move(e));
        idx.children.push_back(expression());
        expect("]");
        e = finish(std::move(idx));
      } else if (check("(") && e.kind == NodeKind::identifier) {
        AstNode call = make(NodeKind::call);
        rebase(call);
        e.kind = NodeKind::name;
        call.children.push_back(std::move(e));
        for (auto& a : arguments()) call.children.push_back(std::move(a));
        e = finish(std::move(call));
      } else if (check("++") || check("--")) {
        AstNode n = make(NodeKind::postfix_incdec, advance().text);
        rebase(n);
        n.children.push_back(std::move(e));
        e = finish(std::move(n));
      } else {
        return e;
      }
    }
  }

  AstNode array_init() {
    AstNode n = make(NodeKind::array_init);
    expect("{");
    if (!check("}")) {
      n.children.push_back(expression());
      while (check(",")) {
        advance();
        n.children.push_back(expression());
      }
    }
    expect("}");
    return finish(std::move(n));
  }

  AstNode primary() {
    const Lexeme* t = peek();
    if (!t) fail({"expression"});
    switch (t->kind) {
      case LexKind::number: return leaf(NodeKind::int_literal);
      case LexKind::string_literal: return leaf(NodeKind::string_literal);
      case LexKind::char_literal: return leaf(NodeKind::char_literal);
      case LexKind::identifier: return leaf(NodeKind::identifier);
      case LexKind::keyword:
        if (t->text == "true" || t->text == "false") return leaf(NodeKind::bool_literal);
        if (t->text == "null") return leaf(NodeKind::null_literal);
        if (t->text == "this") return leaf(NodeKind::identifier);
        if (t->text == "new") {
          AstNode n = make(NodeKind::new_array);
          advance();
          n.children.push_back(type());
          if (check("{")) {
            n.children.push_back(array_init());
            return finish(std::move(n));
          }
          expect("[");
          if (check("]")) {
            advance();
            if (!check("{")) fail({"'{'"});
            n.children.push_back(array_init());
            return finish(std::move(n));
          }
          n.children.push_back(expression());
          expect("]");
          return finish(std::move(n));
        }
        break;
      case LexKind::punct:
        if (t->text == "(") {
          advance();
          AstNode inner = expression();
          expect(")");
          return inner;
        }
        break;
    }
    fail({"expression"});
  }
};

}  // namespace

MiniAst parse_mini_java(std::string_view code) { return MiniAst{Parser(code).parse_method_unit()}; }

MiniAst parse_snippet(std::string_view code) { return MiniAst{Parser(code).parse_snippet_unit()}; }

bool parses(std::string_view code) {
  try {
    parse_mini_java(code);
    return true;
  } catch (const SyntaxError&) {
    return false;
  }
}

}  // namespace infooirt
