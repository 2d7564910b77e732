#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace infooirt {

enum class SkillTag { conditional, loop, string, array };
enum class IndentationStyle { knr, allman };
enum class NestingStyle { nested, flat };
enum class LoopStyle { for_loop, while_loop };
enum class BugKind { off_by_one, wrong_comparison, missing_else, wrong_constant };

inline constexpr std::array<SkillTag, 4> kAllSkills = {SkillTag::conditional, SkillTag::loop,
                                                       SkillTag::string, SkillTag::array};
inline constexpr std::array<BugKind, 4> kAllBugs = {BugKind::off_by_one, BugKind::wrong_comparison,
                                                    BugKind::missing_else, BugKind::wrong_constant};

std::string to_string(SkillTag v);
std::string to_string(IndentationStyle v);
std::string to_string(NestingStyle v);
std::string to_string(LoopStyle v);
std::string to_string(BugKind v);
SkillTag skill_from_string(const std::string& s);
IndentationStyle indentation_from_string(const std::string& s);
NestingStyle nesting_from_string(const std::string& s);
LoopStyle loop_style_from_string(const std::string& s);
BugKind bug_from_string(const std::string& s);

struct Problem {
  std::string problem_id;
  std::string statement;
  std::optional<SkillTag> skill_tag;  // unknown for ingested problems
};

struct Submission {
  std::string student_id;
  std::string problem_id;
  std::string code;
  bool is_first_attempt = true;
  bool parses = true;
};

/// Ground-truth latent factors of a synthetic student.
struct StudentProfile {
  std::string student_id;
  IndentationStyle indentation_style = IndentationStyle::knr;
  NestingStyle nesting_style = NestingStyle::nested;
  LoopStyle loop_style = LoopStyle::for_loop;
  std::map<SkillTag, double> mastery;
  std::set<BugKind> bug_repertoire;
};

struct Corpus {
  std::vector<Problem> problems;
  std::vector<Submission> submissions;
  std::vector<StudentProfile> profiles;  // empty for ingested data

  const Problem& problem(const std::string& id) const;
  const StudentProfile* profile(const std::string& student_id) const;
  /// Student ids in order of first appearance among submissions.
  std::vector<std::string> student_ids() const;
};

// ---- synthesis --------------------------------------------------------------

struct SynthSpec {
  int n_students = 40;
  int n_problems = 8;
  double bug_rate = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Renders one first-attempt submission per (student, problem) from problem
/// templates under each student's style profile. Style attributes are
/// assigned in balanced proportions (half of the students per class, rounded
/// down). Deterministic in `spec`.
Corpus synth_generate(const SynthSpec& spec);

/// Number of built-in problem templates before ids start cycling.
int synth_template_count();

// ---- ingestion --------------------------------------------------------------

struct CsedmColumns {
  std::string student_id = "SubjectID";
  std::string problem_id = "ProblemID";
  std::string timestamp = "ServerTimestamp";
  std::string code = "Code";
  std::string prompt;  // optional column with problem text
  char delimiter = ',';
};

struct IngestionReport {
  long rows = 0;
  long first_attempts = 0;
  long dropped_later_attempts = 0;
  long dropped_unparseable = 0;
  long retained = 0;
  /// dropped_unparseable / first_attempts
  double drop_fraction = 0.0;
};

struct IngestedCorpus {
  Corpus corpus;
  IngestionReport report;
};

/// Reads a delimiter-separated submission log (RFC 4180 quoting), keeps each
/// student's earliest submission per problem (ties broken by file order) and
/// drops submissions the parser rejects. Throws IngestionError.
IngestedCorpus ingest_csedm(const std::filesystem::path& path, const CsedmColumns& columns = {});

/// Same as above over in-memory text.
IngestedCorpus ingest_csedm_text(const std::string& text, const CsedmColumns& columns = {});

// ---- splitting --------------------------------------------------------------

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

/// Indices into the submission list, each part sorted ascending.
struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Per-student stratified split. Every student keeps at least one training
/// submission; students with fewer than three submissions go entirely to
/// train. Held-out parts get round(ratio * N) items when enough students are
/// eligible. Throws ConfigError for invalid ratios.
CorpusSplit split(std::span<const Submission> submissions, const SplitRatios& ratios,
                  std::uint64_t seed);

// ---- rule-based style classifiers -------------------------------------------

/// Majority vote over opening braces: own line means Allman.
std::optional<IndentationStyle> classify_indentation(const std::string& code);
/// Nested when an if statement sits inside another if's branch (else-if
/// chains do not count). Undetermined when the code has no if statement
/// outside loops or does not parse.
std::optional<NestingStyle> classify_nesting(const std::string& code);
std::optional<LoopStyle> classify_loop_style(const std::string& code);

// ---- files ------------------------------------------------------------------

/// Writes problems.jsonl, submissions.jsonl and (if any) profiles.jsonl.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus read_corpus(const std::filesystem::path& dir);

/// split_{train,validation,test}.txt, one "student<TAB>problem" per line.
void write_split(const std::filesystem::path& dir, const Corpus& corpus, const CorpusSplit& split);
CorpusSplit read_split(const std::filesystem::path& dir, const Corpus& corpus);

}  // namespace infooirt
