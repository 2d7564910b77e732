#include "infooirt/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

#include "infooirt/error.hpp"
#include "infooirt/metrics.hpp"
#include "infooirt/tokenizer.hpp"

namespace infooirt {

using nlohmann::json;

namespace {

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string fmt_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_entities(const Checkpoint& ck, const std::string& student, const std::string& problem) {
  ck.knowledge.index_of(student);
  ck.problem_ids(problem);
}

void finish(SweepResult& r, const Corpus* corpus) {
  std::vector<std::vector<std::string>> toks;
  toks.reserve(r.codes.size());
  for (const auto& c : r.codes) toks.push_back(tokenize(c));
  for (std::size_t i = 0; i + 1 < r.codes.size(); ++i) {
    r.diffs.push_back(token_diff(toks[i], toks[i + 1]));
    r.changed.push_back(toks[i] != toks[i + 1]);
  }
  if (corpus) {
    for (const auto& c : r.codes) r.nearest_problem.push_back(nearest_problem(c, *corpus, r.student_id));
  }
}

void run_setting(const Checkpoint& ck, SweepResult& r, const LatentSample& s, std::string label) {
  bool truncated = false;
  r.codes.push_back(ck.generate_code(r.problem_id, ck.state(r.student_id, s), &truncated));
  r.truncated.push_back(truncated);
  r.settings.push_back(std::move(label));
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '`') out += "'";
    else out += c;
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

}  // namespace

std::vector<DiffOp> token_diff(std::span<const std::string> a, std::span<const std::string> b) {
  const std::size_t n = a.size(), m = b.size();
  // lcs[i][j]: LCS length of a[i..] and b[j..].
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::vector<DiffOp> ops;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      ops.push_back({DiffOp::Kind::keep, a[i]});
      ++i, ++j;
    } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      ops.push_back({DiffOp::Kind::remove, a[i]});
      ++i;
    } else {
      ops.push_back({DiffOp::Kind::insert, b[j]});
      ++j;
    }
  }
  return ops;
}

SweepResult sweep_discrete(const Checkpoint& ck, const std::string& student, const std::string& problem,
                           int factor_index, const Corpus* corpus) {
  const KnowledgeConfig& kc = ck.knowledge_config();
  if (factor_index < 0 || factor_index >= kc.d_disc) {
    throw ConfigError("discrete factor " + std::to_string(factor_index) + " out of range [0, " +
                      std::to_string(kc.d_disc) + ")");
  }
  check_entities(ck, student, problem);
  SweepResult r;
  r.student_id = student;
  r.problem_id = problem;
  const LatentSample base = ck.deterministic_sample(student);
  for (int c = 0; c < kc.k; ++c) {
    LatentSample s = base;
    s.disc.row(factor_index).setZero();
    s.disc(factor_index, c) = 1.0;
    run_setting(ck, r, s, "z" + std::to_string(factor_index) + "=" + std::to_string(c));
  }
  finish(r, corpus);
  return r;
}

SweepResult sweep_continuous(const Checkpoint& ck, const std::string& student, const std::string& problem,
                             std::span<const double> values, int cont_index, const Corpus* corpus) {
  const KnowledgeConfig& kc = ck.knowledge_config();
  if (kc.d_cont < 1) throw ConfigError("model has no continuous factor to sweep");
  if (values.empty()) throw ConfigError("continuous sweep needs at least one value");
  if (cont_index < 0 || cont_index >= kc.d_cont) {
    throw ConfigError("continuous factor " + std::to_string(cont_index) + " out of range [0, " +
                      std::to_string(kc.d_cont) + ")");
  }
  check_entities(ck, student, problem);
  SweepResult r;
  r.student_id = student;
  r.problem_id = problem;
  const LatentSample base = ck.deterministic_sample(student);
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("continuous sweep value is not finite");
    LatentSample s = base;
    s.cont(cont_index) = v;
    run_setting(ck, r, s, "c" + std::to_string(cont_index) + "=" + fmt_value(v));
  }
  finish(r, corpus);
  return r;
}

std::string nearest_problem(const std::string& code, const Corpus& corpus, const std::string& student) {
  std::map<std::string, const Submission*> refs;
  for (const auto& s : corpus.submissions) {
    auto it = refs.find(s.problem_id);
    if (it == refs.end()) refs.emplace(s.problem_id, &s);
    else if (s.student_id == student && it->second->student_id != student) it->second = &s;
  }
  std::string best;
  double best_score = -1.0;
  for (const auto& p : corpus.problems) {
    auto it = refs.find(p.problem_id);
    if (it == refs.end()) continue;
    double score = 0.0;
    try {
      score = codebleu(code, it->second->code).total;
    } catch (const Error&) {
      continue;
    }
    if (score > best_score) {
      best_score = score;
      best = p.problem_id;
    }
  }
  return best;
}

std::string SweepResult::to_json() const {
  json settings_j = json::array();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    json e = {{"setting", settings[i]}, {"code", codes[i]}, {"truncated", static_cast<bool>(truncated[i])}};
    if (i < nearest_problem.size()) e["nearest_problem"] = nearest_problem[i];
    settings_j.push_back(std::move(e));
  }
  json diffs_j = json::array();
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    json ops = json::array();
    for (const auto& op : diffs[i]) {
      if (op.kind == DiffOp::Kind::keep) continue;
      ops.push_back({{"op", op.kind == DiffOp::Kind::insert ? "+" : "-"}, {"token", op.token}});
    }
    diffs_j.push_back({{"from", settings[i]}, {"to", settings[i + 1]}, {"changed", static_cast<bool>(changed[i])},
                       {"edits", std::move(ops)}});
  }
  return json{{"student_id", student_id}, {"problem_id", problem_id}, {"generations", std::move(settings_j)},
              {"diffs", std::move(diffs_j)}}
      .dump(2);
}

std::string SweepResult::to_markdown() const {
  std::ostringstream os;
  os << "### Student " << student_id << ", problem " << problem_id << "\n\n";
  // Panes go side by side two at a time.
  for (std::size_t first = 0; first < codes.size(); first += 2) {
    const std::size_t last = std::min(codes.size(), first + 2);
    os << "|";
    for (std::size_t i = first; i < last; ++i) {
      os << " " << settings[i] << (truncated[i] ? " (truncated)" : "");
      if (i < nearest_problem.size()) os << " [nearest " << nearest_problem[i] << "]";
      os << " |";
    }
    os << "\n|";
    for (std::size_t i = first; i < last; ++i) os << "---|";
    os << "\n";
    std::vector<std::vector<std::string>> panes;
    std::size_t rows = 0;
    for (std::size_t i = first; i < last; ++i) {
      panes.push_back(lines_of(codes[i]));
      rows = std::max(rows, panes.back().size());
    }
    for (std::size_t row = 0; row < rows; ++row) {
      os << "|";
      for (const auto& pane : panes) {
        if (row < pane.size() && !pane[row].empty()) {
          std::string line = pane[row];
          std::size_t lead = 0;
          while (lead < line.size() && line[lead] == ' ') ++lead;
          std::string cell;
          for (std::size_t s = 0; s < lead; ++s) cell += "&nbsp;";
          os << " " << cell << "`" << md_cell(line.substr(lead)) << "` |";
        } else {
          os << "  |";
        }
      }
      os << "\n";
    }
    os << "\n";
  }
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    os << "**" << settings[i] << " -> " << settings[i + 1] << "**: ";
    if (!changed[i]) {
      os << "no change\n\n";
      continue;
    }
    std::vector<std::string> edits;
    for (const auto& op : diffs[i]) {
      if (op.kind == DiffOp::Kind::keep) continue;
      edits.push_back(std::string(op.kind == DiffOp::Kind::insert ? "+" : "-") + "`" + md_cell(op.token) + "`");
    }
    for (std::size_t e = 0; e < edits.size(); ++e) os << (e ? " " : "") << edits[e];
    os << "\n\n";
  }
  return os.str();
}

MiCurve mi_curve(std::span<const TrainLog> logs) {
  if (logs.empty()) throw ConfigError("mi-curve needs at least one training log");
  MiCurve c;
  const std::size_t n = logs.front().epochs.size();
  for (const auto& log : logs) {
    if (log.epochs.size() != n) {
      throw ConfigError("training logs cover different numbers of epochs (" + std::to_string(n) + " vs " +
                        std::to_string(log.epochs.size()) + ")");
    }
  }
  for (const auto& rec : logs.front().epochs) c.epochs.push_back(rec.epoch);
  for (const auto& log : logs) {
    MiSeries s;
    s.label = log.label;
    for (std::size_t i = 0; i < n; ++i) {
      if (log.epochs[i].epoch != c.epochs[i]) throw ConfigError("training logs disagree on epoch numbering");
      s.q_nll.push_back(log.epochs[i].train_q_nll_mean);
    }
    c.series.push_back(std::move(s));
  }
  return c;
}

std::string MiCurve::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(8) << "epoch";
  for (const auto& s : series) os << std::setw(16) << s.label;
  os << "\n";
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    os << std::setw(8) << epochs[i];
    for (const auto& s : series) os << std::setw(16) << fmt(s.q_nll[i]);
    os << "\n";
  }
  return os.str();
}

std::string MiCurve::to_svg() const {
  constexpr double W = 640, H = 400, left = 60, right = 150, top = 20, bottom = 50;
  constexpr std::array<const char*, 6> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    for (double v : s.q_nll) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double x0 = epochs.empty() ? 0 : epochs.front();
  const double x1 = epochs.size() < 2 ? x0 + 1 : epochs.back();
  auto px = [&](double e) { return left + (e - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (H - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    os << "<text x=\"" << left - 5 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << fmt(v, 2) << "</text>\n";
  }
  os << "<text x=\"" << left << "\" y=\"" << H - bottom + 18 << "\">" << x0 << "</text>\n";
  os << "<text x=\"" << W - right << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"end\">" << x1 << "</text>\n";
  os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">epoch</text>\n";
  os << "<text x=\"15\" y=\"" << (top + H - bottom) / 2 << "\" transform=\"rotate(-90 15 " << (top + H - bottom) / 2
     << ")\" text-anchor=\"middle\">Q negative log-likelihood</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = colors[si % colors.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      if (!std::isfinite(series[si].q_nll[i])) continue;
      os << fmt(px(epochs[i]), 1) << "," << fmt(py(series[si].q_nll[i]), 1) << " ";
    }
    os << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(si);
    os << "<line x1=\"" << W - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - right + 35 << "\" y=\"" << ly + 4 << "\">" << series[si].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

RecoveryReport factor_recovery(const std::vector<std::vector<int>>& factor_classes,
                               const std::vector<std::vector<int>>& attribute_values,
                               std::vector<std::string> attribute_names) {
  if (attribute_names.size() != attribute_values.size()) {
    throw ShapeError("attribute names and values differ in count");
  }
  RecoveryReport r;
  r.attributes = std::move(attribute_names);
  r.n_factors = static_cast<int>(factor_classes.size());
  r.n_students = attribute_values.empty() ? (factor_classes.empty() ? 0 : static_cast<long>(factor_classes[0].size()))
                                          : static_cast<long>(attribute_values[0].size());
  for (const auto& v : factor_classes) {
    if (static_cast<long>(v.size()) != r.n_students) throw ShapeError("factor labels cover a different student count");
  }
  for (const auto& v : attribute_values) {
    if (static_cast<long>(v.size()) != r.n_students) throw ShapeError("attribute labels cover a different student count");
  }
  if (r.n_students == 0) throw ConfigError("factor recovery needs at least one student");

  const std::size_t na = attribute_values.size();
  r.accuracy.assign(factor_classes.size(), std::vector<double>(na, 0.0));
  for (std::size_t f = 0; f < factor_classes.size(); ++f) {
    for (std::size_t a = 0; a < na; ++a) {
      std::map<int, std::map<int, long>> counts;  // class -> attribute value -> students
      for (long s = 0; s < r.n_students; ++s) ++counts[factor_classes[f][s]][attribute_values[a][s]];
      long correct = 0;
      for (const auto& [cls, by_value] : counts) {
        long best = 0;
        for (const auto& [value, n] : by_value) best = std::max(best, n);
        correct += best;
      }
      r.accuracy[f][a] = static_cast<double>(correct) / static_cast<double>(r.n_students);
    }
  }

  // Exhaustive search over injective maps; the first maximum in lexicographic
  // order of factor indices wins.
  r.assignment.assign(na, -1);
  const std::size_t matched = std::min<std::size_t>(na, factor_classes.size());
  std::vector<int> current(matched, -1);
  std::vector<bool> used(factor_classes.size(), false);
  double best_sum = -1.0;
  std::function<void(std::size_t, double)> search = [&](std::size_t a, double sum) {
    if (a == matched) {
      if (sum > best_sum + 1e-12) {
        best_sum = sum;
        std::copy(current.begin(), current.end(), r.assignment.begin());
      }
      return;
    }
    for (std::size_t f = 0; f < factor_classes.size(); ++f) {
      if (used[f]) continue;
      used[f] = true;
      current[a] = static_cast<int>(f);
      search(a + 1, sum + r.accuracy[f][a]);
      used[f] = false;
    }
  };
  search(0, 0.0);
  return r;
}

RecoveryReport factor_recovery(const Checkpoint& ck, std::span<const StudentProfile> profiles) {
  const auto& students = ck.knowledge.students();
  const KnowledgeConfig& kc = ck.knowledge_config();
  std::map<std::string, const StudentProfile*> by_id;
  for (const auto& p : profiles) by_id.emplace(p.student_id, &p);
  std::vector<std::vector<int>> factors(kc.d_disc, std::vector<int>(students.size(), 0));
  std::vector<std::vector<int>> attrs(3, std::vector<int>(students.size(), 0));
  for (std::size_t s = 0; s < students.size(); ++s) {
    auto it = by_id.find(students[s]);
    if (it == by_id.end()) throw UnknownEntityError("no ground-truth profile for student '" + students[s] + "'");
    const StudentKnowledgeState st = ck.knowledge.state(static_cast<int>(s));
    for (int f = 0; f < kc.d_disc; ++f) {
      Eigen::Index c = 0;
      st.disc_logits.row(f).maxCoeff(&c);
      factors[f][s] = static_cast<int>(c);
    }
    attrs[0][s] = static_cast<int>(it->second->indentation_style);
    attrs[1][s] = static_cast<int>(it->second->nesting_style);
    attrs[2][s] = static_cast<int>(it->second->loop_style);
  }
  return factor_recovery(factors, attrs, {"indentation", "nesting", "loop"});
}

double RecoveryReport::matched_accuracy(const std::string& attribute) const {
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    if (attributes[a] != attribute) continue;
    return assignment[a] < 0 ? chance : accuracy[assignment[a]][a];
  }
  throw ConfigError("unknown attribute '" + attribute + "'");
}

std::string RecoveryReport::to_json() const {
  json matches = json::array();
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    matches.push_back({{"attribute", attributes[a]},
                       {"factor", assignment[a] < 0 ? json(nullptr) : json(assignment[a])},
                       {"accuracy", matched_accuracy(attributes[a])}});
  }
  return json{{"n_students", n_students}, {"n_factors", n_factors}, {"chance", chance},
              {"attributes", attributes}, {"accuracy", accuracy}, {"matches", std::move(matches)}}
      .dump(2);
}

std::string RecoveryReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(8) << "factor";
  for (const auto& a : attributes) os << std::setw(14) << a;
  os << "\n";
  for (std::size_t f = 0; f < accuracy.size(); ++f) {
    os << std::setw(8) << f;
    for (std::size_t a = 0; a < attributes.size(); ++a) {
      std::string cell = fmt(accuracy[f][a], 3);
      if (assignment[a] == static_cast<int>(f)) cell += " *";
      os << std::setw(14) << cell;
    }
    os << "\n";
  }
  os << "\nbest matching (chance " << fmt(chance, 2) << ", " << n_students << " students):\n";
  for (std::size_t a = 0; a < attributes.size(); ++a) {
    os << "  " << std::setw(12) << attributes[a] << " -> ";
    if (assignment[a] < 0) os << "none\n";
    else os << "factor " << assignment[a] << "  accuracy " << fmt(accuracy[assignment[a]][a], 3) << "\n";
  }
  return os.str();
}

}  // namespace infooirt
