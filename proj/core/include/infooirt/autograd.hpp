#pragma once

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "infooirt/tokenizer.hpp"

namespace infooirt {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// A learnable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter() = default;
  Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index numel() const { return value.size(); }
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Records a computation for one reverse sweep. Parameter nodes read and
/// accumulate into the Parameter directly; intermediate gradients live on the
/// tape. Single use: build, call backward once, discard.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat& grad_out)>;

  /// With `grad_enabled` false nothing requires a gradient and no backward
  /// closures are stored (inference).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Var constant(Mat value);
  Var param(Parameter& p);
  /// Adds a derived node. `backward` runs only when some input needs a
  /// gradient (`requires_grad`).
  Var push(Mat value, bool requires_grad, Backward backward);

  const Mat& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  void accumulate(Var v, const Mat& g);
  double scalar(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable parameter.
  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
  bool grad_enabled_;
};

namespace ad {

Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_nt(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var add_scalar(Tape& t, Var a, double s);
/// Adds a 1xC row to every row of a.
Var add_row(Tape& t, Var a, Var row);
Var exp(Tape& t, Var a);
Var square(Tape& t, Var a);
Var tanh(Tape& t, Var a);
/// tanh-approximated GELU.
Var gelu(Tape& t, Var a);
/// Elementwise clamp; the gradient is zero where the input lies outside.
Var clamp(Tape& t, Var a, double lo, double hi);
Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps = 1e-5);
/// Causal multi-head attention over a fused [Q | K | V] input of shape T x 3d.
Var causal_attention(Tape& t, Var qkv, int n_heads);
Var gather_rows(Tape& t, Var table, std::span<const TokenId> ids);
Var concat_rows(Tape& t, std::span<const Var> parts);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var slice_rows(Tape& t, Var a, Eigen::Index start, Eigen::Index count);
Var reshape(Tape& t, Var a, Eigen::Index rows, Eigen::Index cols);
Var mean_rows(Tape& t, Var a);
Var sum(Tape& t, Var a);
Var log_softmax_rows(Tape& t, Var a);
/// Sum over rows of -log softmax(row)[target]; rows whose target equals
/// `ignore` contribute nothing.
Var cross_entropy_sum(Tape& t, Var logits, std::span<const TokenId> targets, TokenId ignore = -1);

}  // namespace ad

// Value-only kernels shared by the tape ops and the inference path, so both
// produce bit-identical numbers.
namespace kernel {

Mat gelu(const Mat& x);
Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, double eps = 1e-5);
RowVec softmax(const RowVec& z);
double log_sum_exp(const Eigen::Ref<const RowVec>& z);

}  // namespace kernel

}  // namespace infooirt
