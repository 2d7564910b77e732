#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infooirt/parser.hpp"

namespace infooirt {

struct CodeBleuWeights {
  double ngram = 0.25;
  double weighted_ngram = 0.25;
  double ast_match = 0.25;
  double dataflow_match = 0.25;

  /// Throws ConfigError unless all weights are nonnegative and sum to 1.
  void validate() const;
};

struct CodeBleuReport {
  double ngram = 0.0;
  double weighted_ngram = 0.0;
  double ast_match = 0.0;
  double dataflow_match = 0.0;
  double total = 0.0;
  CodeBleuWeights weights;
  /// Unsmoothed n-gram BLEU was exactly zero (some order had no match).
  bool ngram_raw_zero = false;
  /// The candidate failed to parse; structural components are zero.
  bool candidate_unparseable = false;

  std::string to_json() const;
};

/// Multiplicative weight of reserved words in the keyword-weighted unigram
/// precision.
inline constexpr double kKeywordWeight = 4.0;
/// Only subtrees at least this deep take part in the syntax match.
inline constexpr int kMinSubtreeDepth = 2;

/// Language tokens of a code text (formatting dropped).
std::vector<std::string> code_tokens(std::string_view code);

/// Smoothed 4-gram BLEU of one candidate against one reference. Unigram
/// precision is unsmoothed except for a 0.1 floor on a zero match count;
/// higher orders use add-one smoothing. `raw_zero` reports whether the
/// unsmoothed score is 0. With `keyword_weighted`, unigram counts of
/// reserved words weigh kKeywordWeight.
double sentence_bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                     bool keyword_weighted, bool* raw_zero = nullptr);

/// Kind-labelled s-expressions of every subtree with depth >= kMinSubtreeDepth.
std::vector<std::string> subtree_signatures(const AstNode& root);

/// Fraction of reference subtrees matched (as a multiset) by candidate subtrees.
double ast_match(const MiniAst& candidate, const MiniAst& reference);

/// Fraction of reference def-use edges matched by candidate edges after
/// identifier normalization. A reference without edges scores 1 against a
/// candidate without edges and 0 otherwise.
double dataflow_match(const MiniAst& candidate, const MiniAst& reference);

/// Throws ConfigError for an empty reference; a reference that does not parse
/// raises SyntaxError.
CodeBleuReport codebleu(std::string_view candidate, std::string_view reference,
                        const CodeBleuWeights& weights = {});

/// Distinct N-grams over total N-grams, pooled across codes (N-grams never
/// span two codes). Tokens are whitespace-separated.
double dist_n(std::span<const std::string> codes, int n);

/// Mean of per-pair reports, reduced in index order.
CodeBleuReport mean_report(std::span<const CodeBleuReport> reports);

}  // namespace infooirt
