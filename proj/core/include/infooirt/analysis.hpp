#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infooirt/corpus.hpp"
#include "infooirt/trainer.hpp"

namespace infooirt {

struct DiffOp {
  enum class Kind { keep, insert, remove };
  Kind kind;
  std::string token;
};

/// Longest-common-subsequence edit script turning `a` into `b`. Among equal
/// length scripts, removals are listed before insertions.
std::vector<DiffOp> token_diff(std::span<const std::string> a, std::span<const std::string> b);

struct SweepResult {
  std::string student_id;
  std::string problem_id;
  std::vector<std::string> settings;  // human-readable latent configuration
  std::vector<std::string> codes;
  std::vector<bool> truncated;
  /// diffs[i] and changed[i] compare codes[i] with codes[i + 1].
  std::vector<std::vector<DiffOp>> diffs;
  std::vector<bool> changed;
  /// Problem whose reference code is most similar to each generation, when a
  /// corpus was supplied.
  std::vector<std::string> nearest_problem;

  std::string to_json() const;
  /// Side-by-side code panes followed by the token changes between panes.
  std::string to_markdown() const;
};

inline const std::vector<double> kDefaultContinuousGrid = {-10.0, -5.0, -3.5, -2.0, 0.0, 2.0, 3.5, 5.0, 10.0};

/// Generates with discrete factor `factor_index` forced to each class while
/// the other latents keep their deterministic values. Throws ConfigError for
/// an out-of-range factor and UnknownEntityError for unknown ids.
SweepResult sweep_discrete(const Checkpoint& ck, const std::string& student, const std::string& problem,
                           int factor_index, const Corpus* corpus = nullptr);

/// One generation per value substituted into continuous factor `cont_index`.
/// Throws ConfigError for an empty value list or a model without continuous
/// factors.
SweepResult sweep_continuous(const Checkpoint& ck, const std::string& student, const std::string& problem,
                             std::span<const double> values, int cont_index = 0, const Corpus* corpus = nullptr);

/// Problem whose reference code (the student's own submission when present,
/// else the first submission to it) has the highest CodeBLEU against `code`.
std::string nearest_problem(const std::string& code, const Corpus& corpus, const std::string& student);

struct MiSeries {
  std::string label;
  std::vector<double> q_nll;
};

struct MiCurve {
  std::vector<int> epochs;
  std::vector<MiSeries> series;

  std::string to_table() const;
  std::string to_svg() const;
};

/// Aligns the per-epoch train q_nll of each log. Throws ConfigError when the
/// logs differ in epoch count or none is given.
MiCurve mi_curve(std::span<const TrainLog> logs);

struct RecoveryReport {
  std::vector<std::string> attributes;
  int n_factors = 0;
  long n_students = 0;
  /// accuracy[f][a]: each factor class predicts its majority attribute value.
  std::vector<std::vector<double>> accuracy;
  /// assignment[a] is the factor matched to attribute a (-1 when there are
  /// fewer factors than attributes).
  std::vector<int> assignment;
  double chance = 0.5;

  double matched_accuracy(const std::string& attribute) const;
  std::string to_json() const;
  std::string to_table() const;
};

/// Core of factor recovery over class labels: factor_classes[f][s] and
/// attribute_values[a][s]. The matching maximizes the summed accuracy over
/// injective attribute -> factor maps.
RecoveryReport factor_recovery(const std::vector<std::vector<int>>& factor_classes,
                               const std::vector<std::vector<int>>& attribute_values,
                               std::vector<std::string> attribute_names);

/// Learned classes (argmax of each student's logits) against the indentation,
/// nesting and loop-style attributes. Throws UnknownEntityError when a
/// student in the model has no profile.
RecoveryReport factor_recovery(const Checkpoint& ck, std::span<const StudentProfile> profiles);

}  // namespace infooirt
