#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "infooirt/autograd.hpp"
#include "infooirt/rng.hpp"

namespace infooirt {

struct KnowledgeConfig {
  int d_bar = 2;
  int d_cont = 1;
  int d_disc = 10;
  int k = 2;

  void validate() const;
  /// Length of the assembled state h.
  int state_dim() const { return d_bar + d_cont + d_disc * k; }
};

/// Learnable parameters of one student. `disc_logits` is d_disc x k.
struct StudentKnowledgeState {
  RowVec h_bar;
  RowVec mu;
  RowVec log_sigma;
  Mat disc_logits;

  RowVec sigma() const { return log_sigma.array().exp(); }
  /// Row-wise softmax of the logits.
  Mat disc_probs() const;
};

enum class SampleMode {
  stochastic,     // reparameterized Gaussian, straight-through hard categorical
  deterministic,  // means and argmax one-hots
  relaxed,        // like stochastic but the categorical is the soft relaxation
};

struct LatentSample {
  RowVec cont;
  Mat disc;  // d_disc x k, one-hot rows (simplex rows in relaxed mode)
  bool differentiable = false;
};

struct AssembledState {
  RowVec h;
};

/// Standard-normal and Gumbel draws that turn a state into a sample.
struct LatentNoise {
  RowVec eps;     // d_cont
  Mat gumbel;     // d_disc x k
};

StudentKnowledgeState init_state(const KnowledgeConfig& config, Rng& rng);
StudentKnowledgeState init_state(const KnowledgeConfig& config, std::uint64_t seed);

/// Draws d_cont normals, then d_disc*k Gumbel variates, in that order.
LatentNoise draw_noise(const KnowledgeConfig& config, Rng& rng);

/// Throws ConfigError for a non-positive temperature.
LatentSample sample_latent(const StudentKnowledgeState& state, SampleMode mode, double temperature,
                           std::uint64_t seed);
LatentSample sample_latent(const StudentKnowledgeState& state, SampleMode mode, double temperature,
                           const LatentNoise& noise);

/// h = (h_bar, cont, flattened disc rows). Throws ShapeError when the sample
/// does not match `config`.
AssembledState assemble(const KnowledgeConfig& config, const RowVec& h_bar, const LatentSample& sample);

/// One-hot of the argmax, ties to the lowest index.
RowVec argmax_one_hot(const Eigen::Ref<const RowVec>& logits);

namespace ad {

/// Straight-through Gumbel-softmax over groups of k consecutive columns of a
/// 1 x (groups*k) row. Forward returns hard one-hots (or the relaxed sample
/// when `hard` is false); backward always differentiates the relaxed sample.
Var gumbel_softmax(Tape& t, Var logits, const Mat& gumbel, int k, double temperature, bool hard);

}  // namespace ad

/// Per-student parameters stored as one matrix per kind (row = student), in
/// the order students were registered.
class KnowledgeStore {
 public:
  KnowledgeStore() = default;
  KnowledgeStore(const KnowledgeConfig& config, std::vector<std::string> students, std::uint64_t seed);

  const KnowledgeConfig& config() const { return config_; }
  const std::vector<std::string>& students() const { return students_; }
  bool contains(const std::string& student) const { return index_.contains(student); }
  /// Throws UnknownEntityError naming the student.
  int index_of(const std::string& student) const;

  StudentKnowledgeState state(int index) const;
  StudentKnowledgeState state(const std::string& student) const { return state(index_of(student)); }
  void set_state(int index, const StudentKnowledgeState& s);

  struct TapeSample {
    Var h;     // 1 x state_dim
    Var cont;  // 1 x d_cont
    Var disc;  // 1 x (d_disc * k)
  };
  /// Samples on the tape; gradients flow to the student's parameter rows.
  TapeSample sample(Tape& t, int index, SampleMode mode, double temperature, const LatentNoise& noise);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  Parameter h_bar;
  Parameter mu;
  Parameter log_sigma;
  Parameter disc_logits;  // students x (d_disc * k)

 private:
  KnowledgeConfig config_;
  std::vector<std::string> students_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace infooirt
