#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/lexer.hpp"
#include "infooirt/parser.hpp"
#include "infooirt/rng.hpp"

namespace infooirt {
namespace {

using Tokens = std::vector<std::string>;

Tokens canon(const std::string& text) {
  Tokens out;
  for (auto& lx : lex(text)) out.push_back(std::move(lx.text));
  return out;
}

struct Stmt;
using Body = std::vector<Stmt>;

struct Clause {
  Tokens header;  // "else", "else if ( ... )"
  Body body;
};

struct Stmt {
  Tokens header;
  bool compound = false;
  Body body;
  std::vector<Clause> chain;
};

Stmt simple(const std::string& text) { return Stmt{canon(text), false, {}, {}}; }

Stmt compound(const std::string& header, Body body, std::vector<Clause> chain = {}) {
  return Stmt{canon(header), true, std::move(body), std::move(chain)};
}

Clause clause(const std::string& header, Body body) { return Clause{canon(header), std::move(body)}; }

Body counted_loop(LoopStyle style, const std::string& var, const std::string& init,
                  const std::string& cond, const std::string& update, Body body) {
  if (style == LoopStyle::for_loop) {
    return {compound("for (int " + var + " = " + init + "; " + cond + "; " + update + ")",
                     std::move(body))};
  }
  body.push_back(simple(update + ";"));
  return {simple("int " + var + " = " + init + ";"), compound("while (" + cond + ")", std::move(body))};
}

Body concat(Body a, Body b) {
  for (auto& s : b) a.push_back(std::move(s));
  return a;
}

// ---- rendering ----------------------------------------------------------------

std::string join(const Tokens& toks) {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) s += ' ';
    s += toks[i];
  }
  return s;
}

class Renderer {
 public:
  explicit Renderer(IndentationStyle style) : style_(style) {}

  std::string method(const std::string& signature, const Body& body) {
    block(canon(signature), body, {}, 0);
    std::string out;
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      if (i) out += '\n';
      out += lines_[i];
    }
    return out;
  }

 private:
  IndentationStyle style_;
  std::vector<std::string> lines_;

  void line(int depth, const std::string& text) {
    lines_.push_back(std::string(static_cast<std::size_t>(depth) * 4, ' ') + text);
  }

  void block(const Tokens& header, const Body& body, const std::vector<Clause>& chain, int depth) {
    if (style_ == IndentationStyle::knr) {
      line(depth, join(header) + " {");
    } else {
      line(depth, join(header));
      line(depth, "{");
    }
    statements(body, depth + 1);
    for (const auto& c : chain) {
      if (style_ == IndentationStyle::knr) {
        line(depth, "} " + join(c.header) + " {");
      } else {
        line(depth, "}");
        line(depth, join(c.header));
        line(depth, "{");
      }
      statements(c.body, depth + 1);
    }
    line(depth, "}");
  }

  void statements(const Body& body, int depth) {
    for (const auto& s : body) {
      if (s.compound) {
        block(s.header, s.body, s.chain, depth);
      } else {
        line(depth, join(s.header));
      }
    }
  }
};

// ---- bug injection ------------------------------------------------------------

bool is_comparison(const std::string& t) {
  return t == "<" || t == "<=" || t == ">" || t == ">=" || t == "==" || t == "!=";
}

bool header_starts(const Tokens& h, std::string_view a, std::string_view b = {}) {
  if (h.empty() || h[0] != a) return false;
  return b.empty() || (h.size() > 1 && h[1] == b);
}

bool is_loop_header(const Tokens& h) { return header_starts(h, "for") || header_starts(h, "while"); }
bool is_if_header(const Tokens& h) { return header_starts(h, "if") || header_starts(h, "else", "if"); }

/// Every header token list in preorder.
void headers(Body& body, std::vector<Tokens*>& out) {
  for (auto& s : body) {
    out.push_back(&s.header);
    headers(s.body, out);
    for (auto& c : s.chain) {
      out.push_back(&c.header);
      headers(c.body, out);
    }
  }
}

bool mutate_first_comparison(Body& body, const std::function<bool(const Tokens&)>& site,
                             const std::function<std::string(const std::string&)>& replace) {
  std::vector<Tokens*> hs;
  headers(body, hs);
  for (Tokens* h : hs) {
    if (!site(*h)) continue;
    for (auto& t : *h) {
      if (is_comparison(t)) {
        t = replace(t);
        return true;
      }
    }
  }
  return false;
}

std::string off_by_one(const std::string& op) {
  if (op == "<") return "<=";
  if (op == "<=") return "<";
  if (op == ">") return ">=";
  if (op == ">=") return ">";
  return op == "==" ? ">=" : "<=";
}

std::string flip(const std::string& op) {
  if (op == "<") return ">";
  if (op == "<=") return ">=";
  if (op == ">") return "<";
  if (op == ">=") return "<=";
  return op == "==" ? "!=" : "==";
}

bool body_has_compound(const Body& b) {
  return std::any_of(b.begin(), b.end(), [](const Stmt& s) { return s.compound; });
}

bool remove_last_else(Body& body) {
  Stmt* target = nullptr;
  std::function<void(Body&)> walk = [&](Body& b) {
    for (auto& s : b) {
      if (!s.chain.empty() && s.chain.back().header == Tokens{"else"} &&
          !body_has_compound(s.chain.back().body)) {
        target = &s;
      }
      walk(s.body);
      for (auto& c : s.chain) walk(c.body);
    }
  };
  walk(body);
  if (!target) return false;
  target->chain.pop_back();
  return true;
}

bool bump_constant(Body& body) {
  std::vector<Tokens*> hs;
  headers(body, hs);
  for (Tokens* h : hs) {
    for (auto& t : *h) {
      if (!t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c) != 0; }) && std::stol(t) >= 2) {
        t = std::to_string(std::stol(t) + 1);
        return true;
      }
    }
  }
  return false;
}

bool inject(BugKind bug, Body& body) {
  switch (bug) {
    case BugKind::off_by_one:
      return mutate_first_comparison(body, is_loop_header, off_by_one) ||
             mutate_first_comparison(body, is_if_header, off_by_one);
    case BugKind::wrong_comparison:
      return mutate_first_comparison(body, is_if_header, flip) ||
             mutate_first_comparison(body, is_loop_header, flip);
    case BugKind::missing_else:
      return remove_last_else(body);
    case BugKind::wrong_constant:
      return bump_constant(body);
  }
  return false;
}

// ---- problem templates --------------------------------------------------------

struct Template {
  std::string name;
  SkillTag skill;
  std::string statement;
  std::string signature;
  std::function<Body(const StudentProfile&)> body;
};

Body if_else(const std::string& cond, Body then_body, Body else_body) {
  return {compound("if (" + cond + ")", std::move(then_body), {clause("else", std::move(else_body))})};
}

Body ret(const std::string& e) { return {simple("return " + e + ";")}; }

const std::vector<Template>& templates() {
  static const std::vector<Template> kTemplates = {
      {"caughtSpeeding", SkillTag::conditional,
       "You are driving a little too fast and a police officer stops you. Return 0 for no ticket, "
       "1 for a small ticket and 2 for a big ticket. On your birthday your speed can be 5 higher.",
       "public int caughtSpeeding(int speed, boolean isBirthday)",
       [](const StudentProfile& p) {
         auto tiers = [](int a, int b) {
           return Body{compound("if (speed <= " + std::to_string(a) + ")", ret("0"),
                                {clause("else if (speed <= " + std::to_string(b) + ")", ret("1")),
                                 clause("else", ret("2"))})};
         };
         if (p.nesting_style == NestingStyle::nested) return if_else("isBirthday", tiers(65, 85), tiers(60, 80));
         return concat({compound("if (isBirthday)", {simple("speed -= 5;")})}, tiers(60, 80));
       }},
      {"countEvens", SkillTag::array,
       "Return the number of even ints in the given array.",
       "public int countEvens(int[] nums)",
       [](const StudentProfile& p) {
         Body b{simple("int count = 0;")};
         b = concat(std::move(b),
                    counted_loop(p.loop_style, "i", "0", "i < nums.length", "i++",
                                 {compound("if (nums[i] % 2 == 0)", {simple("count++;")})}));
         return concat(std::move(b), ret("count"));
       }},
      {"cigarParty", SkillTag::conditional,
       "A party with cigars is successful if the number of cigars is between 40 and 60 inclusive. "
       "On the weekend there is no upper bound. Return true if the party is successful.",
       "public boolean cigarParty(int cigars, boolean isWeekend)",
       [](const StudentProfile& p) {
         if (p.nesting_style == NestingStyle::nested) {
           return if_else("isWeekend", if_else("cigars >= 40", ret("true"), ret("false")),
                          if_else("cigars >= 40 && cigars <= 60", ret("true"), ret("false")));
         }
         return concat({compound("if (isWeekend)", ret("cigars >= 40"))},
                       ret("cigars >= 40 && cigars <= 60"));
       }},
      {"countX", SkillTag::string,
       "Return the number of times the lowercase letter x appears in the given string.",
       "public int countX(String str)",
       [](const StudentProfile& p) {
         Body b{simple("int count = 0;")};
         b = concat(std::move(b),
                    counted_loop(p.loop_style, "i", "0", "i < str.length()", "i++",
                                 {compound("if (str.charAt(i) == 'x')", {simple("count++;")})}));
         return concat(std::move(b), ret("count"));
       }},
      {"squirrelPlay", SkillTag::conditional,
       "The squirrels play if the temperature is between 60 and 90 inclusive. In summer the upper "
       "limit is 100. Return true if the squirrels play.",
       "public boolean squirrelPlay(int temp, boolean isSummer)",
       [](const StudentProfile& p) {
         if (p.nesting_style == NestingStyle::nested) {
           return if_else("isSummer", if_else("temp >= 60 && temp <= 100", ret("true"), ret("false")),
                          if_else("temp >= 60 && temp <= 90", ret("true"), ret("false")));
         }
         return concat({simple("int limit = 90;"), compound("if (isSummer)", {simple("limit = 100;")})},
                       ret("temp >= 60 && temp <= limit"));
       }},
      {"sumArray", SkillTag::loop,
       "Return the sum of all the numbers in the given array.",
       "public int sumArray(int[] nums)",
       [](const StudentProfile& p) {
         Body b{simple("int sum = 0;")};
         b = concat(std::move(b), counted_loop(p.loop_style, "i", "0", "i < nums.length", "i++",
                                               {simple("sum += nums[i];")}));
         return concat(std::move(b), ret("sum"));
       }},
      {"dateFashion", SkillTag::conditional,
       "You and your date try to get a table. Return 0 if either of you has style 2 or less, 2 if "
       "either of you has style 8 or more, and 1 otherwise.",
       "public int dateFashion(int you, int date)",
       [](const StudentProfile& p) {
         if (p.nesting_style == NestingStyle::nested) {
           return if_else("you <= 2 || date <= 2", ret("0"),
                          if_else("you >= 8 || date >= 8", ret("2"), ret("1")));
         }
         return concat(concat({compound("if (you <= 2 || date <= 2)", ret("0"))},
                              {compound("if (you >= 8 || date >= 8)", ret("2"))}),
                       ret("1"));
       }},
      {"doubleChar", SkillTag::string,
       "Return a string where every char of the original string is doubled.",
       "public String doubleChar(String str)",
       [](const StudentProfile& p) {
         Body b{simple("String result = \"\";")};
         b = concat(std::move(b),
                    counted_loop(p.loop_style, "i", "0", "i < str.length()", "i++",
                                 {simple("result = result + str.charAt(i) + str.charAt(i);")}));
         return concat(std::move(b), ret("result"));
       }},
      {"teaParty", SkillTag::conditional,
       "A party is bad with 0 if tea or candy is less than 5, great with 2 if one of them is at "
       "least double the other, and good with 1 otherwise.",
       "public int teaParty(int tea, int candy)",
       [](const StudentProfile& p) {
         if (p.nesting_style == NestingStyle::nested) {
           return if_else("tea >= 5 && candy >= 5",
                          if_else("tea >= 2 * candy || candy >= 2 * tea", ret("2"), ret("1")),
                          ret("0"));
         }
         return concat(concat({compound("if (tea < 5 || candy < 5)", ret("0"))},
                              {compound("if (tea >= 2 * candy || candy >= 2 * tea)", ret("2"))}),
                       ret("1"));
       }},
      {"has22", SkillTag::array,
       "Return true if the array contains a 2 next to a 2 somewhere.",
       "public boolean has22(int[] nums)",
       [](const StudentProfile& p) {
         Body b = counted_loop(
             p.loop_style, "i", "0", "i < nums.length - 1", "i++",
             {compound("if (nums[i] == 2 && nums[i + 1] == 2)", ret("true"))});
         return concat(std::move(b), ret("false"));
       }},
      {"sortaSum", SkillTag::conditional,
       "Given two ints, return their sum. Sums in the range 10 to 19 inclusive are forbidden and "
       "return 20 instead.",
       "public int sortaSum(int a, int b)",
       [](const StudentProfile& p) {
         Body b{simple("int sum = a + b;")};
         if (p.nesting_style == NestingStyle::nested) {
           return concat(std::move(b),
                         if_else("sum >= 10", if_else("sum <= 19", ret("20"), ret("sum")), ret("sum")));
         }
         return concat(concat(std::move(b), {compound("if (sum >= 10 && sum <= 19)", ret("20"))}),
                       ret("sum"));
       }},
      {"countHi", SkillTag::loop,
       "Return the number of times the string hi appears anywhere in the given string.",
       "public int countHi(String str)",
       [](const StudentProfile& p) {
         Body b{simple("int count = 0;")};
         b = concat(std::move(b),
                    counted_loop(p.loop_style, "i", "0", "i < str.length() - 1", "i++",
                                 {compound("if (str.charAt(i) == 'h' && str.charAt(i + 1) == 'i')",
                                           {simple("count++;")})}));
         return concat(std::move(b), ret("count"));
       }},
  };
  return kTemplates;
}

template <typename T>
std::vector<T> balanced(int n, T a, T b, Rng& rng) {
  std::vector<T> v(static_cast<std::size_t>(n), b);
  std::fill(v.begin(), v.begin() + n / 2, a);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_students < 2) throw ConfigError("synthetic corpus needs n_students >= 2");
  if (n_problems < 2) throw ConfigError("synthetic corpus needs n_problems >= 2");
  if (!(bug_rate >= 0.0 && bug_rate <= 1.0)) throw ConfigError("bug_rate must lie in [0, 1]");
}

int synth_template_count() { return static_cast<int>(templates().size()); }

Corpus synth_generate(const SynthSpec& spec) {
  spec.validate();
  Corpus corpus;
  const auto& tpls = templates();

  for (int k = 0; k < spec.n_problems; ++k) {
    const Template& t = tpls[static_cast<std::size_t>(k) % tpls.size()];
    Problem p;
    p.problem_id = "P" + std::to_string(k);
    p.skill_tag = t.skill;
    p.statement = t.statement + " " + t.signature;
    corpus.problems.push_back(std::move(p));
  }

  Rng profile_rng = make_rng(spec.seed, "synth.profiles");
  const auto indents =
      balanced(spec.n_students, IndentationStyle::knr, IndentationStyle::allman, profile_rng);
  const auto nestings = balanced(spec.n_students, NestingStyle::nested, NestingStyle::flat, profile_rng);
  const auto loops = balanced(spec.n_students, LoopStyle::for_loop, LoopStyle::while_loop, profile_rng);
  std::uniform_real_distribution<double> mastery_dist(0.4, 1.0);
  for (int s = 0; s < spec.n_students; ++s) {
    StudentProfile prof;
    prof.student_id = "S" + std::to_string(s);
    const auto i = static_cast<std::size_t>(s);
    prof.indentation_style = indents[i];
    prof.nesting_style = nestings[i];
    prof.loop_style = loops[i];
    for (SkillTag skill : kAllSkills) prof.mastery[skill] = mastery_dist(profile_rng);
    std::vector<BugKind> bugs(kAllBugs.begin(), kAllBugs.end());
    std::shuffle(bugs.begin(), bugs.end(), profile_rng);
    const std::size_t n_bugs = 1 + profile_rng() % 2;
    prof.bug_repertoire.insert(bugs.begin(), bugs.begin() + static_cast<long>(n_bugs));
    corpus.profiles.push_back(std::move(prof));
  }

  Rng bug_rng = make_rng(spec.seed, "synth.bugs");
  for (const auto& prof : corpus.profiles) {
    for (int k = 0; k < spec.n_problems; ++k) {
      const Template& t = tpls[static_cast<std::size_t>(k) % tpls.size()];
      Body body = t.body(prof);
      const double p_bug = spec.bug_rate * (1.0 - prof.mastery.at(t.skill));
      if (uniform_open(bug_rng) < p_bug) {
        std::vector<BugKind> order(prof.bug_repertoire.begin(), prof.bug_repertoire.end());
        std::shuffle(order.begin(), order.end(), bug_rng);
        for (BugKind bug : order) {
          if (inject(bug, body)) break;
        }
      }
      Submission sub;
      sub.student_id = prof.student_id;
      sub.problem_id = corpus.problems[static_cast<std::size_t>(k)].problem_id;
      sub.code = Renderer(prof.indentation_style).method(t.signature, body);
      sub.parses = parses(sub.code);
      if (!sub.parses) throw Error("internal: synthetic template produced unparseable code");
      corpus.submissions.push_back(std::move(sub));
    }
  }
  return corpus;
}

}  // namespace infooirt
