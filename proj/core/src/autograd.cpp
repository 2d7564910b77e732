#include "infooirt/autograd.hpp"

#include <cmath>
#include <limits>

#include "infooirt/error.hpp"

namespace infooirt {

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false, {}});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{{}, {}, &p, grad_enabled_, {}});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Mat value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, requires_grad,
                        requires_grad ? std::move(backward) : Backward{}});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

const Mat& Tape::value(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.param ? n.param->value : n.value;
}

void Tape::accumulate(Var v, const Mat& g) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.requires_grad) return;
  if (n.param) {
    n.param->grad += g;
    return;
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

double Tape::scalar(Var v) const {
  const Mat& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("expected a scalar node");
  return m(0, 0);
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) throw ShapeError("backward needs a scalar loss");
  if (!requires_grad(loss)) return;
  accumulate(loss, Mat::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.param || !n.backward || n.grad.size() == 0) continue;
    const Mat g = std::move(n.grad);
    n.grad = Mat();
    n.backward(*this, g);
  }
}

namespace kernel {

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Mat gelu(const Mat& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))); });
}

Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, double eps) {
  Mat y(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / n;
    const RowVec c = x.row(r).array() - mean;
    const double inv = 1.0 / std::sqrt(c.squaredNorm() / n + eps);
    y.row(r) = (c * inv).cwiseProduct(gain.row(0)) + bias.row(0);
  }
  return y;
}

double log_sum_exp(const Eigen::Ref<const RowVec>& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

RowVec softmax(const RowVec& z) {
  const double m = z.maxCoeff();
  RowVec e = (z.array() - m).exp();
  return e / e.sum();
}

}  // namespace kernel

namespace ad {

namespace {

bool any_grad(const Tape& t, std::initializer_list<Var> vs) {
  for (Var v : vs) {
    if (t.requires_grad(v)) return true;
  }
  return false;
}

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Mat& A = t.value(a);
  const Mat& B = t.value(b);
  if (A.cols() != B.rows()) throw ShapeError("matmul: inner dimensions differ");
  return t.push(A * B, any_grad(t, {a, b}), [a, b](Tape& tp, const Mat& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  const Mat& A = t.value(a);
  const Mat& B = t.value(b);
  if (A.cols() != B.cols()) throw ShapeError("matmul_nt: inner dimensions differ");
  return t.push(A * B.transpose(), any_grad(t, {a, b}), [a, b](Tape& tp, const Mat& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b));
    if (tp.requires_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
  });
}

Var add(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "add");
  return t.push(t.value(a) + t.value(b), any_grad(t, {a, b}), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "sub");
  return t.push(t.value(a) - t.value(b), any_grad(t, {a, b}), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) tp.accumulate(b, -g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  check_same_shape(t.value(a), t.value(b), "mul");
  return t.push(t.value(a).cwiseProduct(t.value(b)), any_grad(t, {a, b}), [a, b](Tape& tp, const Mat& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
  });
}

Var scale(Tape& t, Var a, double s) {
  return t.push(t.value(a) * s, t.requires_grad(a), [a, s](Tape& tp, const Mat& g) { tp.accumulate(a, g * s); });
}

Var add_scalar(Tape& t, Var a, double s) {
  return t.push(t.value(a).array() + s, t.requires_grad(a), [a](Tape& tp, const Mat& g) { tp.accumulate(a, g); });
}

Var add_row(Tape& t, Var a, Var row) {
  const Mat& A = t.value(a);
  const Mat& R = t.value(row);
  if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("add_row: row shape mismatch");
  Mat out = A.rowwise() + R.row(0);
  return t.push(std::move(out), any_grad(t, {a, row}), [a, row](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(row)) tp.accumulate(row, g.colwise().sum());
  });
}

Var exp(Tape& t, Var a) {
  Mat out = t.value(a).array().exp();
  const int id = static_cast<int>(t.size());
  return t.push(std::move(out), t.requires_grad(a), [a, id](Tape& tp, const Mat& g) {
    tp.accumulate(a, g.cwiseProduct(tp.value(Var{id})));
  });
}

Var square(Tape& t, Var a) {
  return t.push(t.value(a).array().square(), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    tp.accumulate(a, 2.0 * g.cwiseProduct(tp.value(a)));
  });
}

Var tanh(Tape& t, Var a) {
  Mat out = t.value(a).array().tanh();
  const int id = static_cast<int>(t.size());
  return t.push(std::move(out), t.requires_grad(a), [a, id](Tape& tp, const Mat& g) {
    const Mat& y = tp.value(Var{id});
    tp.accumulate(a, g.array() * (1.0 - y.array().square()));
  });
}

Var gelu(Tape& t, Var a) {
  return t.push(kernel::gelu(t.value(a)), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    constexpr double c = 0.7978845608028654;
    constexpr double k = 0.044715;
    const Mat d = tp.value(a).unaryExpr([](double x) {
      const double th = std::tanh(c * (x + k * x * x * x));
      return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * k * x * x);
    });
    tp.accumulate(a, g.cwiseProduct(d));
  });
}

Var clamp(Tape& t, Var a, double lo, double hi) {
  return t.push(t.value(a).cwiseMax(lo).cwiseMin(hi), t.requires_grad(a), [a, lo, hi](Tape& tp, const Mat& g) {
    const Mat& x = tp.value(a);
    Mat d = g;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (x.data()[i] < lo || x.data()[i] > hi) d.data()[i] = 0.0;
    }
    tp.accumulate(a, d);
  });
}

Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps) {
  const Mat& X = t.value(x);
  const Mat& G = t.value(gain);
  const Mat& B = t.value(bias);
  if (G.rows() != 1 || G.cols() != X.cols() || B.rows() != 1 || B.cols() != X.cols()) {
    throw ShapeError("layer_norm: gain/bias shape mismatch");
  }
  return t.push(kernel::layer_norm(X, G, B, eps), any_grad(t, {x, gain, bias}),
                [x, gain, bias, eps](Tape& tp, const Mat& g) {
                  const Mat& X = tp.value(x);
                  const Mat& G = tp.value(gain);
                  const double n = static_cast<double>(X.cols());
                  Mat dx(X.rows(), X.cols());
                  RowVec dgain = RowVec::Zero(X.cols());
                  for (Eigen::Index r = 0; r < X.rows(); ++r) {
                    const double mean = X.row(r).sum() / n;
                    const RowVec c = X.row(r).array() - mean;
                    const double inv = 1.0 / std::sqrt(c.squaredNorm() / n + eps);
                    const RowVec xhat = c * inv;
                    const RowVec dxhat = g.row(r).cwiseProduct(G.row(0));
                    dgain += g.row(r).cwiseProduct(xhat);
                    dx.row(r) = inv * (dxhat.array() - dxhat.mean() - xhat.array() * dxhat.cwiseProduct(xhat).mean());
                  }
                  tp.accumulate(x, dx);
                  if (tp.requires_grad(gain)) tp.accumulate(gain, dgain);
                  if (tp.requires_grad(bias)) tp.accumulate(bias, g.colwise().sum());
                });
}

Var causal_attention(Tape& t, Var qkv, int n_heads) {
  const Mat& X = t.value(qkv);
  if (X.cols() % (3 * n_heads) != 0) throw ShapeError("causal_attention: width not divisible by 3 * heads");
  const Eigen::Index T = X.rows();
  const Eigen::Index d = X.cols() / 3;
  const Eigen::Index dh = d / n_heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<Mat>>();
  Mat out(T, d);
  for (int h = 0; h < n_heads; ++h) {
    const auto Q = X.block(0, h * dh, T, dh);
    const auto K = X.block(0, d + h * dh, T, dh);
    const auto V = X.block(0, 2 * d + h * dh, T, dh);
    Mat P = (Q * K.transpose()) * sc;
    for (Eigen::Index i = 0; i < T; ++i) {
      const double m = P.row(i).head(i + 1).maxCoeff();
      double s = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j) {
        P(i, j) = std::exp(P(i, j) - m);
        s += P(i, j);
      }
      P.row(i).head(i + 1) /= s;
      P.row(i).tail(T - i - 1).setZero();
    }
    out.block(0, h * dh, T, dh) = P * V;
    probs->push_back(std::move(P));
  }
  return t.push(std::move(out), t.requires_grad(qkv), [qkv, n_heads, probs, d, dh, sc](Tape& tp, const Mat& g) {
    const Mat& X = tp.value(qkv);
    const Eigen::Index T = X.rows();
    Mat dX(T, 3 * d);
    for (int h = 0; h < n_heads; ++h) {
      const Mat& P = (*probs)[static_cast<std::size_t>(h)];
      const auto Q = X.block(0, h * dh, T, dh);
      const auto K = X.block(0, d + h * dh, T, dh);
      const auto V = X.block(0, 2 * d + h * dh, T, dh);
      const auto dO = g.block(0, h * dh, T, dh);
      const Mat dP = dO * V.transpose();
      Mat dS = P.cwiseProduct(dP);
      const Eigen::VectorXd rows = dS.rowwise().sum();
      dS -= P.cwiseProduct(rows.replicate(1, T));
      dS *= sc;
      dX.block(0, h * dh, T, dh) = dS * K;
      dX.block(0, d + h * dh, T, dh) = dS.transpose() * Q;
      dX.block(0, 2 * d + h * dh, T, dh) = P.transpose() * dO;
    }
    tp.accumulate(qkv, dX);
  });
}

Var gather_rows(Tape& t, Var table, std::span<const TokenId> ids) {
  const Mat& W = t.value(table);
  std::vector<TokenId> idx(ids.begin(), ids.end());
  Mat out(static_cast<Eigen::Index>(idx.size()), W.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= W.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = W.row(idx[i]);
  }
  return t.push(std::move(out), t.requires_grad(table), [table, idx](Tape& tp, const Mat& g) {
    const Mat& W = tp.value(table);
    Mat d = Mat::Zero(W.rows(), W.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(table, d);
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  std::vector<Var> ps(parts.begin(), parts.end());
  Eigen::Index rows = 0;
  const Eigen::Index cols = t.value(ps.at(0)).cols();
  bool grad = false;
  for (Var p : ps) {
    if (t.value(p).cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += t.value(p).rows();
    grad = grad || t.requires_grad(p);
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : ps) {
    out.middleRows(r, t.value(p).rows()) = t.value(p);
    r += t.value(p).rows();
  }
  return t.push(std::move(out), grad, [ps](Tape& tp, const Mat& g) {
    Eigen::Index r = 0;
    for (Var p : ps) {
      const Eigen::Index n = tp.value(p).rows();
      if (tp.requires_grad(p)) tp.accumulate(p, g.middleRows(r, n));
      r += n;
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  std::vector<Var> ps(parts.begin(), parts.end());
  Eigen::Index cols = 0;
  const Eigen::Index rows = t.value(ps.at(0)).rows();
  bool grad = false;
  for (Var p : ps) {
    if (t.value(p).rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += t.value(p).cols();
    grad = grad || t.requires_grad(p);
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : ps) {
    out.middleCols(c, t.value(p).cols()) = t.value(p);
    c += t.value(p).cols();
  }
  return t.push(std::move(out), grad, [ps](Tape& tp, const Mat& g) {
    Eigen::Index c = 0;
    for (Var p : ps) {
      const Eigen::Index n = tp.value(p).cols();
      if (tp.requires_grad(p)) tp.accumulate(p, g.middleCols(c, n));
      c += n;
    }
  });
}

Var slice_rows(Tape& t, Var a, Eigen::Index start, Eigen::Index count) {
  const Mat& A = t.value(a);
  if (start < 0 || count < 0 || start + count > A.rows()) throw ShapeError("slice_rows: out of range");
  return t.push(A.middleRows(start, count), t.requires_grad(a), [a, start, count](Tape& tp, const Mat& g) {
    const Mat& A = tp.value(a);
    Mat d = Mat::Zero(A.rows(), A.cols());
    d.middleRows(start, count) = g;
    tp.accumulate(a, d);
  });
}

Var reshape(Tape& t, Var a, Eigen::Index rows, Eigen::Index cols) {
  const Mat& A = t.value(a);
  if (rows * cols != A.size()) throw ShapeError("reshape: element count differs");
  Mat out = Eigen::Map<const Mat>(A.data(), rows, cols);
  return t.push(std::move(out), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    const Mat& A = tp.value(a);
    tp.accumulate(a, Eigen::Map<const Mat>(g.data(), A.rows(), A.cols()));
  });
}

Var mean_rows(Tape& t, Var a) {
  const Mat& A = t.value(a);
  if (A.rows() == 0) throw ShapeError("mean_rows: no rows");
  const double n = static_cast<double>(A.rows());
  return t.push(A.colwise().sum() / n, t.requires_grad(a), [a, n](Tape& tp, const Mat& g) {
    tp.accumulate(a, g.replicate(tp.value(a).rows(), 1) / n);
  });
}

Var sum(Tape& t, Var a) {
  Mat out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.push(std::move(out), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    const Mat& A = tp.value(a);
    tp.accumulate(a, Mat::Constant(A.rows(), A.cols(), g(0, 0)));
  });
}

Var log_softmax_rows(Tape& t, Var a) {
  const Mat& A = t.value(a);
  Mat out(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) out.row(r) = A.row(r).array() - kernel::log_sum_exp(A.row(r));
  const int id = static_cast<int>(t.size());
  return t.push(std::move(out), t.requires_grad(a), [a, id](Tape& tp, const Mat& g) {
    const Mat p = tp.value(Var{id}).array().exp();
    const Eigen::VectorXd gs = g.rowwise().sum();
    tp.accumulate(a, g - p.cwiseProduct(gs.replicate(1, p.cols())));
  });
}

Var cross_entropy_sum(Tape& t, Var logits, std::span<const TokenId> targets, TokenId ignore) {
  const Mat& L = t.value(logits);
  if (static_cast<std::size_t>(L.rows()) != targets.size()) {
    throw ShapeError("cross_entropy: " + std::to_string(L.rows()) + " logit rows for " +
                     std::to_string(targets.size()) + " targets");
  }
  std::vector<TokenId> tg(targets.begin(), targets.end());
  double total = 0.0;
  for (Eigen::Index r = 0; r < L.rows(); ++r) {
    const TokenId y = tg[static_cast<std::size_t>(r)];
    if (y == ignore) continue;
    if (y < 0 || y >= L.cols()) throw ShapeError("cross_entropy: target id out of range");
    total += kernel::log_sum_exp(L.row(r)) - L(r, y);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  return t.push(std::move(out), t.requires_grad(logits), [logits, tg, ignore](Tape& tp, const Mat& g) {
    const Mat& L = tp.value(logits);
    Mat d = Mat::Zero(L.rows(), L.cols());
    for (Eigen::Index r = 0; r < L.rows(); ++r) {
      if (tg[static_cast<std::size_t>(r)] == ignore) continue;
      d.row(r) = kernel::softmax(L.row(r));
      d(r, tg[static_cast<std::size_t>(r)]) -= 1.0;
    }
    tp.accumulate(logits, d * g(0, 0));
  });
}

}  // namespace ad

}  // namespace infooirt
