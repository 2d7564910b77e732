#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "infooirt/autograd.hpp"
#include "infooirt/knowledge.hpp"
#include "infooirt/tokenizer.hpp"

namespace infooirt {

struct GeneratorConfig {
  int d_model = 256;
  int n_layers = 4;
  int n_heads = 4;
  int max_len = 512;
  int vocab_size = 0;

  void validate() const;
};

/// Rows of `logits` predict code token 1..N and then EOS (N + 1 rows, from the
/// separator position on). `last_hidden` holds the final-layer states at the
/// N code positions and `r_c` their mean (the separator state for empty code).
struct GeneratorOutput {
  Mat logits;
  Mat last_hidden;
  RowVec r_c;
};

struct GenerationResult {
  std::vector<TokenId> code;
  /// Stopped by max_new_tokens or max_len rather than by EOS.
  bool truncated = false;
};

struct QPrediction {
  RowVec cont_mean;
  RowVec cont_log_sigma;
  Mat disc_logits;  // d_disc x k
};

/// Decoder-only pre-LayerNorm transformer with tied output embedding. Problem
/// tokens enter through the linear alignment f(p, h) = W [p; h] + b; the
/// separator and code tokens use their plain embeddings. Input layout:
/// BOS, aligned problem, SEP, code.
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& config, int state_dim, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  int state_dim() const { return state_dim_; }

  struct TapeOutput {
    Var logits;
    Var last_hidden;
    Var r_c;
  };
  /// Teacher-forced pass. Throws ShapeError when problem + code + 2 exceeds
  /// max_len or h has the wrong width.
  TapeOutput forward(Tape& t, std::span<const TokenId> problem, Var h, std::span<const TokenId> code);
  GeneratorOutput forward(std::span<const TokenId> problem, const RowVec& h, std::span<const TokenId> code) const;

  /// Greedy decoding with a key/value cache; ties go to the lowest id.
  GenerationResult generate(std::span<const TokenId> problem, const RowVec& h, int max_new_tokens) const;

  /// Knowledge-guided embedding of one problem token embedding.
  RowVec align(const RowVec& problem_embedding, const RowVec& h) const;

  std::vector<Parameter*> backbone_parameters();
  std::vector<Parameter*> alignment_parameters();
  std::vector<const Parameter*> parameters() const;

  Parameter tok_emb;  // vocab x d
  Parameter pos_emb;  // max_len x d
  struct Layer {
    Parameter ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
  };
  std::vector<Layer> layers;
  Parameter lnf_g, lnf_b;
  Parameter align_w;  // (d + state_dim) x d, acting on row vectors [p, h]
  Parameter align_b;  // 1 x d

 private:
  GeneratorConfig config_;
  int state_dim_ = 0;
};

/// Auxiliary posterior Q(h_hat | c): tanh hidden layer, then heads for the
/// Gaussian means, clamped log-sigmas and categorical logits.
class QNetwork {
 public:
  static constexpr double kLogSigmaMin = -5.0;
  static constexpr double kLogSigmaMax = 2.0;

  QNetwork() = default;
  QNetwork(int d_model, const KnowledgeConfig& knowledge, std::uint64_t seed);

  struct TapeOutput {
    Var cont_mean;       // 1 x d_cont
    Var cont_log_sigma;  // 1 x d_cont, clamped
    Var disc_logits;     // 1 x (d_disc * k)
  };
  TapeOutput forward(Tape& t, Var r_c);
  /// Throws ConfigError for non-finite input.
  QPrediction predict(const RowVec& r_c) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  Parameter w1, b1, w_mean, b_mean, w_log_sigma, b_log_sigma, w_disc, b_disc;

 private:
  KnowledgeConfig knowledge_;
  int d_model_ = 0;
};

}  // namespace infooirt
