#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infooirt/corpus.hpp"
#include "infooirt/generator.hpp"
#include "infooirt/knowledge.hpp"
#include "infooirt/metrics.hpp"
#include "infooirt/objective.hpp"
#include "infooirt/tokenizer.hpp"

namespace infooirt {

/// `oirt` has no interpretable factors and no Q network (h = h_bar).
enum class ModelKind { oirt, infooirt };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct TrainConfig {
  ModelKind kind = ModelKind::infooirt;
  int epochs = 50;
  int batch_size = 8;
  double lr_generator = 1e-5;
  double lr_side = 1e-3;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  double grad_clip = 1.0;
  double lambda = 0.1;
  double temperature_start = 1.0;
  double temperature_end = 0.5;
  KnowledgeConfig knowledge;
  GeneratorConfig generator;  // vocab_size is filled in from the vocabulary
  std::uint64_t seed = 0;

  void validate() const;
};

/// Everything needed to run the model: weights, per-student states, the
/// vocabulary and the problem statements it was trained on.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  TrainConfig config;
  Vocabulary vocab = Vocabulary::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "<sep>"});
  std::vector<Problem> problems;
  KnowledgeStore knowledge;
  Generator generator;
  std::optional<QNetwork> q;
  int epoch = 0;
  double validation_loss = 0.0;

  /// Binary archive: magic, version, JSON manifest, raw little-endian doubles.
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  const KnowledgeConfig& knowledge_config() const { return knowledge.config(); }
  std::vector<TokenId> problem_ids(const std::string& problem_id) const;
  /// Deterministic latents (means, argmax one-hots) assembled with h_bar.
  LatentSample deterministic_sample(const std::string& student) const;
  RowVec state(const std::string& student, const LatentSample& sample) const;
  /// Greedy generation decoded back to code text.
  std::string generate_code(const std::string& problem_id, const RowVec& h, bool* truncated = nullptr) const;
  int max_new_tokens(const std::string& problem_id) const;

  std::vector<const Parameter*> parameters() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_oirt_mean = 0.0;   // per token
  double train_q_nll_mean = 0.0;  // per submission
  double train_total_mean = 0.0;  // per submission
  double validation_oirt_mean = 0.0;
  double temperature = 0.0;
  std::vector<double> factor_entropies;  // mean categorical entropy per discrete factor
};

struct TrainLog {
  std::string label;
  std::vector<EpochRecord> epochs;
  /// Summed batch loss of every optimizer step, in order.
  std::vector<double> step_losses;

  void write_jsonl(const std::filesystem::path& path) const;
  static TrainLog read_jsonl(const std::filesystem::path& path);
};

struct TrainResult {
  Checkpoint best;
  TrainLog log;
};

/// Called after every epoch (progress reporting).
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Joint optimization of generator, alignment, knowledge states and Q. The
/// vocabulary is built from training code and all problem statements.
/// Throws DivergenceError on a non-finite loss.
TrainResult train(const TrainConfig& config, const Corpus& corpus, const CorpusSplit& split,
                  const EpochCallback& on_epoch = {});

/// Per-token mean NLL with deterministic latents.
double mean_token_nll(const Checkpoint& ck, const Corpus& corpus, std::span<const std::size_t> part);

struct EvalExample {
  std::string student_id;
  std::string problem_id;
  std::string generated;
  bool truncated = false;
  CodeBleuReport codebleu;
};

struct EvalReport {
  std::string model;
  int d_bar = 0;
  int d_cont = 0;
  int d_disc = 0;
  long n = 0;
  double test_loss = 0.0;
  CodeBleuReport codebleu;
  std::optional<double> dist1, dist2, dist3;
  std::vector<EvalExample> examples;

  std::string to_json() const;
  /// One-row text table: model, state sizes, CodeBLEU, test loss, Dist-1/2/3.
  std::string to_table() const;
};

/// Greedy generation with deterministic latents for every submission in
/// `part`, scored against the submitted code. Throws UnknownEntityError for
/// a student without a knowledge state and ConfigError for an empty part.
EvalReport evaluate(const Checkpoint& ck, const Corpus& corpus, std::span<const std::size_t> part,
                    const CodeBleuWeights& weights = {});

/// Renders several reports under one header.
std::string eval_table(std::span<const EvalReport> reports);

}  // namespace infooirt
