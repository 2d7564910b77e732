#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "infooirt/corpus.hpp"
#include "infooirt/metrics.hpp"
#include "infooirt/trainer.hpp"

namespace infooirt {

enum class CorpusSource { synth, csedm };

struct CorpusSection {
  CorpusSource source = CorpusSource::synth;
  int n_students = 40;
  int n_problems = 8;
  double bug_rate = 0.5;
  std::filesystem::path csv;  // required when source is csedm
  CsedmColumns columns;
  SplitRatios ratios;
  /// Drives synthesis and the split. Mandatory for commands that use it.
  std::optional<std::uint64_t> seed;

  SynthSpec synth_spec() const;
};

struct AnalysisSection {
  std::string student;
  std::string problem;
  int factor = 0;
  int cont_index = 0;
  std::vector<double> continuous_values;  // empty means the default grid
};

/// Sections corpus, knowledge, generator, trainer, metrics and analysis of
/// one TOML file. Absent keys keep their defaults; unknown keys and sections
/// are rejected.
struct RunConfig {
  CorpusSection corpus;
  TrainConfig trainer;
  bool trainer_seed_set = false;
  CodeBleuWeights metrics;
  AnalysisSection analysis;

  /// Throws ConfigError naming the missing seed.
  void require_corpus_seed() const;
  void require_trainer_seed() const;
  /// Every field, including defaults, as TOML.
  std::string to_toml() const;
};

/// Throws ConfigError with the offending key or the parse position.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace infooirt
