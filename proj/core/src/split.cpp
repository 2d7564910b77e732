#include <algorithm>
#include <cmath>
#include <map>

#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/rng.hpp"

namespace infooirt {

namespace {

constexpr std::size_t kMinSubmissionsToHoldOut = 3;

}  // namespace

CorpusSplit split(std::span<const Submission> submissions, const SplitRatios& ratios,
                  std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0)) {
    throw ConfigError("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }

  std::vector<std::string> students;
  std::map<std::string, std::vector<std::size_t>> by_student;
  for (std::size_t i = 0; i < submissions.size(); ++i) {
    auto& v = by_student[submissions[i].student_id];
    if (v.empty()) students.push_back(submissions[i].student_id);
    v.push_back(i);
  }

  Rng rng = make_rng(seed, "split");
  for (const auto& s : students) std::shuffle(by_student[s].begin(), by_student[s].end(), rng);
  std::vector<std::string> student_order = students;
  std::shuffle(student_order.begin(), student_order.end(), rng);

  // Rank r of a student's shuffled list is offered to the held-out parts in
  // round r; rank 0 always stays in train.
  std::vector<std::size_t> candidates;
  std::size_t max_count = 0;
  for (const auto& s : students) max_count = std::max(max_count, by_student[s].size());
  for (std::size_t rank = 1; rank < max_count; ++rank) {
    for (const auto& s : student_order) {
      const auto& v = by_student[s];
      if (v.size() >= kMinSubmissionsToHoldOut && rank < v.size()) candidates.push_back(v[rank]);
    }
  }

  const double n = static_cast<double>(submissions.size());
  const std::size_t n_test = std::min(candidates.size(), static_cast<std::size_t>(std::lround(ratios.test * n)));
  const std::size_t n_val = std::min(candidates.size() - n_test,
                                     static_cast<std::size_t>(std::lround(ratios.validation * n)));

  CorpusSplit out;
  out.seed = seed;
  std::vector<char> held(submissions.size(), 0);
  for (std::size_t i = 0; i < n_test; ++i) {
    out.test.push_back(candidates[i]);
    held[candidates[i]] = 1;
  }
  for (std::size_t i = n_test; i < n_test + n_val; ++i) {
    out.validation.push_back(candidates[i]);
    held[candidates[i]] = 1;
  }
  for (std::size_t i = 0; i < submissions.size(); ++i) {
    if (!held[i]) out.train.push_back(i);
  }
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

}  // namespace infooirt
