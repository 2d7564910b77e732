#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/lexer.hpp"
#include "infooirt/parser.hpp"

namespace infooirt {

using nlohmann::json;

std::string to_string(SkillTag v) {
  switch (v) {
    case SkillTag::conditional: return "conditional";
    case SkillTag::loop: return "loop";
    case SkillTag::string: return "string";
    case SkillTag::array: return "array";
  }
  return "?";
}
std::string to_string(IndentationStyle v) { return v == IndentationStyle::knr ? "KnR" : "Allman"; }
std::string to_string(NestingStyle v) { return v == NestingStyle::nested ? "nested" : "flat"; }
std::string to_string(LoopStyle v) { return v == LoopStyle::for_loop ? "for" : "while"; }
std::string to_string(BugKind v) {
  switch (v) {
    case BugKind::off_by_one: return "off_by_one";
    case BugKind::wrong_comparison: return "wrong_comparison";
    case BugKind::missing_else: return "missing_else";
    case BugKind::wrong_constant: return "wrong_constant";
  }
  return "?";
}

namespace {
template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values, const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}
}  // namespace

SkillTag skill_from_string(const std::string& s) { return parse_enum(s, kAllSkills, "skill tag"); }
IndentationStyle indentation_from_string(const std::string& s) {
  return parse_enum(s, std::array{IndentationStyle::knr, IndentationStyle::allman}, "indentation style");
}
NestingStyle nesting_from_string(const std::string& s) {
  return parse_enum(s, std::array{NestingStyle::nested, NestingStyle::flat}, "nesting style");
}
LoopStyle loop_style_from_string(const std::string& s) {
  return parse_enum(s, std::array{LoopStyle::for_loop, LoopStyle::while_loop}, "loop style");
}
BugKind bug_from_string(const std::string& s) { return parse_enum(s, kAllBugs, "bug kind"); }

const Problem& Corpus::problem(const std::string& id) const {
  for (const auto& p : problems) {
    if (p.problem_id == id) return p;
  }
  throw UnknownEntityError("unknown problem '" + id + "'");
}

const StudentProfile* Corpus::profile(const std::string& student_id) const {
  for (const auto& p : profiles) {
    if (p.student_id == student_id) return &p;
  }
  return nullptr;
}

std::vector<std::string> Corpus::student_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& s : submissions) {
    if (seen.insert(s.student_id).second) ids.push_back(s.student_id);
  }
  return ids;
}

// ---- classifiers ------------------------------------------------------------

std::optional<IndentationStyle> classify_indentation(const std::string& code) {
  const auto lexemes = lex(code);
  int own_line = 0, trailing = 0;
  for (std::size_t i = 0; i < lexemes.size(); ++i) {
    if (lexemes[i].text != "{") continue;
    const bool first_on_line = i == 0 || lexemes[i - 1].line != lexemes[i].line;
    (first_on_line ? own_line : trailing)++;
  }
  if (own_line == trailing) return std::nullopt;
  return own_line > trailing ? IndentationStyle::allman : IndentationStyle::knr;
}

namespace {

bool contains_if(const AstNode& n) {
  if (n.kind == NodeKind::if_stmt) return true;
  return std::any_of(n.children.begin(), n.children.end(), contains_if);
}

}  // namespace

std::optional<NestingStyle> classify_nesting(const std::string& code) {
  MiniAst ast;
  try {
    ast = parse_mini_java(code);
  } catch (const SyntaxError&) {
    return std::nullopt;
  }
  bool any_if = false;
  bool nested = false;
  std::function<void(const AstNode&, bool)> walk = [&](const AstNode& n, bool in_loop) {
    if (n.kind == NodeKind::if_stmt) {
      if (!in_loop) any_if = true;
      if (contains_if(n.children[1])) nested = true;
      if (n.children.size() > 2 && n.children[2].kind != NodeKind::if_stmt &&
          contains_if(n.children[2])) {
        nested = true;
      }
    }
    const bool loop = in_loop || n.kind == NodeKind::for_stmt || n.kind == NodeKind::while_stmt;
    for (const auto& c : n.children) walk(c, loop);
  };
  walk(ast.root, false);
  if (!any_if) return std::nullopt;
  return nested ? NestingStyle::nested : NestingStyle::flat;
}

std::optional<LoopStyle> classify_loop_style(const std::string& code) {
  int fors = 0, whiles = 0;
  for (const auto& lx : lex(code)) {
    if (lx.text == "for") ++fors;
    if (lx.text == "while") ++whiles;
  }
  if (fors == whiles) return std::nullopt;
  return fors > whiles ? LoopStyle::for_loop : LoopStyle::while_loop;
}

// ---- files ------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::vector<json> read_jsonl(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::vector<json> rows;
  long line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw IoError(p.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "problems.jsonl");
    for (const auto& p : corpus.problems) {
      json j = {{"problem_id", p.problem_id}, {"statement", p.statement}};
      j["skill_tag"] = p.skill_tag ? json(to_string(*p.skill_tag)) : json(nullptr);
      out << j.dump() << '\n';
    }
  }
  {
    auto out = open_out(dir / "submissions.jsonl");
    for (const auto& s : corpus.submissions) {
      json j = {{"student_id", s.student_id},   {"problem_id", s.problem_id},
                {"code", s.code},               {"is_first_attempt", s.is_first_attempt},
                {"parses", s.parses}};
      j["profile_ref"] = corpus.profile(s.student_id) ? json(s.student_id) : json(nullptr);
      out << j.dump() << '\n';
    }
  }
  if (!corpus.profiles.empty()) {
    auto out = open_out(dir / "profiles.jsonl");
    for (const auto& p : corpus.profiles) {
      json mastery = json::object();
      for (const auto& [skill, v] : p.mastery) mastery[to_string(skill)] = v;
      json bugs = json::array();
      for (BugKind b : p.bug_repertoire) bugs.push_back(to_string(b));
      json j = {{"student_id", p.student_id},
                {"indentation_style", to_string(p.indentation_style)},
                {"nesting_style", to_string(p.nesting_style)},
                {"loop_style", to_string(p.loop_style)},
                {"mastery", mastery},
                {"bug_repertoire", bugs}};
      out << j.dump() << '\n';
    }
  }
}

Corpus read_corpus(const std::filesystem::path& dir) {
  Corpus c;
  try {
    for (const auto& j : read_jsonl(dir / "problems.jsonl")) {
      Problem p;
      p.problem_id = j.at("problem_id").get<std::string>();
      p.statement = j.at("statement").get<std::string>();
      if (j.contains("skill_tag") && !j["skill_tag"].is_null()) {
        p.skill_tag = skill_from_string(j["skill_tag"].get<std::string>());
      }
      c.problems.push_back(std::move(p));
    }
    for (const auto& j : read_jsonl(dir / "submissions.jsonl")) {
      Submission s;
      s.student_id = j.at("student_id").get<std::string>();
      s.problem_id = j.at("problem_id").get<std::string>();
      s.code = j.at("code").get<std::string>();
      s.is_first_attempt = j.value("is_first_attempt", true);
      s.parses = j.value("parses", true);
      c.submissions.push_back(std::move(s));
    }
    if (std::filesystem::exists(dir / "profiles.jsonl")) {
      for (const auto& j : read_jsonl(dir / "profiles.jsonl")) {
        StudentProfile p;
        p.student_id = j.at("student_id").get<std::string>();
        p.indentation_style = indentation_from_string(j.at("indentation_style").get<std::string>());
        p.nesting_style = nesting_from_string(j.at("nesting_style").get<std::string>());
        p.loop_style = loop_style_from_string(j.at("loop_style").get<std::string>());
        for (const auto& [k, v] : j.at("mastery").items()) {
          p.mastery[skill_from_string(k)] = v.get<double>();
        }
        for (const auto& b : j.at("bug_repertoire")) p.bug_repertoire.insert(bug_from_string(b.get<std::string>()));
        c.profiles.push_back(std::move(p));
      }
    }
  } catch (const json::exception& e) {
    throw IoError("malformed corpus in " + dir.string() + ": " + e.what());
  }
  return c;
}

void write_split(const std::filesystem::path& dir, const Corpus& corpus, const CorpusSplit& sp) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, const std::vector<std::size_t>& part) {
    auto out = open_out(dir / name);
    for (std::size_t i : part) {
      const auto& s = corpus.submissions.at(i);
      out << s.student_id << '\t' << s.problem_id << '\n';
    }
  };
  dump("split_train.txt", sp.train);
  dump("split_validation.txt", sp.validation);
  dump("split_test.txt", sp.test);
}

CorpusSplit read_split(const std::filesystem::path& dir, const Corpus& corpus) {
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < corpus.submissions.size(); ++i) {
    index[{corpus.submissions[i].student_id, corpus.submissions[i].problem_id}] = i;
  }
  auto load = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw IoError("cannot open " + (dir / name).string());
    std::vector<std::size_t> part;
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw IoError("malformed split line '" + line + "'");
      const auto it = index.find({line.substr(0, tab), line.substr(tab + 1)});
      if (it == index.end()) throw IoError("split references unknown submission '" + line + "'");
      part.push_back(it->second);
    }
    std::sort(part.begin(), part.end());
    return part;
  };
  CorpusSplit sp;
  sp.train = load("split_train.txt");
  sp.validation = load("split_validation.txt");
  sp.test = load("split_test.txt");
  return sp;
}

}  // namespace infooirt
