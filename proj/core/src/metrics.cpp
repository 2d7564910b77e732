#include "infooirt/metrics.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "infooirt/dataflow.hpp"
#include "infooirt/error.hpp"
#include "infooirt/lexer.hpp"

namespace infooirt {

void CodeBleuWeights::validate() const {
  const double w[] = {ngram, weighted_ngram, ast_match, dataflow_match};
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw ConfigError("CodeBLEU weights must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("CodeBLEU weights must sum to 1");
}

std::string CodeBleuReport::to_json() const {
  nlohmann::json j = {
      {"ngram", ngram},
      {"weighted_ngram", weighted_ngram},
      {"ast_match", ast_match},
      {"dataflow_match", dataflow_match},
      {"total", total},
      {"weights",
       {weights.ngram, weights.weighted_ngram, weights.ast_match, weights.dataflow_match}},
      {"ngram_raw_zero", ngram_raw_zero},
      {"candidate_unparseable", candidate_unparseable},
  };
  return j.dump();
}

std::vector<std::string> code_tokens(std::string_view code) {
  std::vector<std::string> out;
  for (auto& lx : lex(code)) out.push_back(std::move(lx.text));
  return out;
}

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(std::span<const std::string> toks, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (std::size_t j = 0; j < n; ++j) {
      key += toks[i + j];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

double unigram_weight(const std::string& key, bool keyword_weighted) {
  if (!keyword_weighted) return 1.0;
  const std::string tok = key.substr(0, key.size() - 1);
  return is_java_keyword(tok) ? kKeywordWeight : 1.0;
}

}  // namespace

double sentence_bleu(std::span<const std::string> cand, std::span<const std::string> ref,
                     bool keyword_weighted, bool* raw_zero) {
  bool zero = cand.empty();
  if (cand.empty()) {
    if (raw_zero) *raw_zero = true;
    return 0.0;
  }
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts c = count_ngrams(cand, n);
    const NgramCounts r = count_ngrams(ref, n);
    double matches = 0.0, total = 0.0;
    for (const auto& [key, cnt] : c) {
      const double w = n == 1 ? unigram_weight(key, keyword_weighted) : 1.0;
      total += w * cnt;
      const auto it = r.find(key);
      if (it != r.end()) matches += w * std::min(cnt, it->second);
    }
    double p;
    if (n == 1) {
      if (matches == 0.0) zero = true;
      p = matches > 0.0 ? matches / total : 0.1 / total;
    } else {
      if (total > 0.0 && matches == 0.0) zero = true;
      p = (matches + 1.0) / (total + 1.0);
    }
    log_sum += 0.25 * std::log(p);
  }
  const double c_len = static_cast<double>(cand.size());
  const double r_len = static_cast<double>(ref.size());
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  if (raw_zero) *raw_zero = zero;
  return bp * std::exp(log_sum);
}

std::vector<std::string> subtree_signatures(const AstNode& root) {
  std::vector<std::string> out;
  root.visit([&](const AstNode& n) {
    if (n.kind != NodeKind::unit && n.depth() >= kMinSubtreeDepth) out.push_back(n.sexp());
  });
  return out;
}

double ast_match(const MiniAst& candidate, const MiniAst& reference) {
  const auto ref = subtree_signatures(reference.root);
  if (ref.empty()) return subtree_signatures(candidate.root).empty() ? 1.0 : 0.0;
  std::multiset<std::string> pool(ref.begin(), ref.end());
  std::size_t matched = 0;
  for (const auto& sig : subtree_signatures(candidate.root)) {
    const auto it = pool.find(sig);
    if (it != pool.end()) {
      ++matched;
      pool.erase(it);
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref.size());
}

double dataflow_match(const MiniAst& candidate, const MiniAst& reference) {
  const auto ref = dataflow(reference).normalized_edges();
  const auto cand = dataflow(candidate).normalized_edges();
  if (ref.empty()) return cand.empty() ? 1.0 : 0.0;
  std::multiset<std::string> pool(ref.begin(), ref.end());
  std::size_t matched = 0;
  for (const auto& e : cand) {
    const auto it = pool.find(e);
    if (it != pool.end()) {
      ++matched;
      pool.erase(it);
    }
  }
  return static_cast<double>(matched) / static_cast<double>(ref.size());
}

CodeBleuReport codebleu(std::string_view candidate, std::string_view reference,
                        const CodeBleuWeights& weights) {
  weights.validate();
  const auto ref_toks = code_tokens(reference);
  if (ref_toks.empty()) throw ConfigError("CodeBLEU reference is empty");
  const MiniAst ref_ast = parse_snippet(reference);
  const auto cand_toks = code_tokens(candidate);

  CodeBleuReport r;
  r.weights = weights;
  r.ngram = sentence_bleu(cand_toks, ref_toks, false, &r.ngram_raw_zero);
  r.weighted_ngram = sentence_bleu(cand_toks, ref_toks, true);
  try {
    const MiniAst cand_ast = parse_snippet(candidate);
    r.ast_match = ast_match(cand_ast, ref_ast);
    r.dataflow_match = dataflow_match(cand_ast, ref_ast);
  } catch (const SyntaxError&) {
    r.candidate_unparseable = true;
  }
  r.total = weights.ngram * r.ngram + weights.weighted_ngram * r.weighted_ngram +
            weights.ast_match * r.ast_match + weights.dataflow_match * r.dataflow_match;
  return r;
}

double dist_n(std::span<const std::string> codes, int n) {
  if (n < 1) throw ConfigError("dist-N needs N >= 1");
  std::set<std::vector<std::string>> distinct;
  std::size_t total = 0;
  for (const auto& code : codes) {
    std::istringstream in(code);
    std::vector<std::string> toks;
    for (std::string t; in >> t;) toks.push_back(std::move(t));
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= toks.size(); ++i) {
      distinct.emplace(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + un));
      ++total;
    }
  }
  if (total == 0) {
    throw ConfigError("dist-" + std::to_string(n) + " needs at least one code with " +
                      std::to_string(n) + " tokens");
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

CodeBleuReport mean_report(std::span<const CodeBleuReport> reports) {
  CodeBleuReport m;
  if (reports.empty()) return m;
  m.weights = reports.front().weights;
  for (const auto& r : reports) {
    m.ngram += r.ngram;
    m.weighted_ngram += r.weighted_ngram;
    m.ast_match += r.ast_match;
    m.dataflow_match += r.dataflow_match;
    m.total += r.total;
  }
  const double k = static_cast<double>(reports.size());
  m.ngram /= k;
  m.weighted_ngram /= k;
  m.ast_match /= k;
  m.dataflow_match /= k;
  m.total /= k;
  return m;
}

}  // namespace infooirt
