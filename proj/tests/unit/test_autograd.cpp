#include "doctest.h"

#include <vector>

#include "gradcheck.hpp"
#include "infooirt/autograd.hpp"

using namespace infooirt;
using infooirt::testing::grad_check;
using infooirt::testing::random_mat;

namespace {

/// Reduces an op output to a scalar with fixed random weights so every
/// output entry contributes a distinct gradient.
double weighted_sum(Tape& t, Var out, bool backward) {
  std::mt19937 rng(99);
  const Mat& v = t.value(out);
  const Var w = t.constant(random_mat(rng, v.rows(), v.cols()));
  const Var loss = ad::sum(t, ad::mul(t, out, w));
  if (backward) t.backward(loss);
  return t.scalar(loss);
}

using Op = std::function<Var(Tape&, Var, Var)>;

double check_binary(const Op& op, Mat a0, Mat b0) {
  Parameter a("a", std::move(a0)), b("b", std::move(b0));
  auto loss = [&](bool bw) {
    Tape t;
    return weighted_sum(t, op(t, t.param(a), t.param(b)), bw);
  };
  return grad_check({&a, &b}, loss).max_rel_error;
}

}  // namespace

TEST_CASE("elementwise and matrix ops match finite differences") {
  std::mt19937 rng(1);
  const double tol = 1e-6;
  CHECK(check_binary([](Tape& t, Var a, Var b) { return ad::matmul(t, a, b); }, random_mat(rng, 3, 4),
                     random_mat(rng, 4, 2)) < tol);
  CHECK(check_binary([](Tape& t, Var a, Var b) { return ad::matmul_nt(t, a, b); }, random_mat(rng, 3, 4),
                     random_mat(rng, 5, 4)) < tol);
  CHECK(check_binary([](Tape& t, Var a, Var b) { return ad::add(t, a, b); }, random_mat(rng, 2, 3),
                     random_mat(rng, 2, 3)) < tol);
  CHECK(check_binary([](Tape& t, Var a, Var b) { return ad::sub(t, a, b); }, random_mat(rng, 2, 3),
                     random_mat(rng, 2, 3)) < tol);
  CHECK(check_binary([](Tape& t, Var a, Var b) { return ad::mul(t, a, b); }, random_mat(rng, 2, 3),
                     random_mat(rng, 2, 3)) < tol);
  CHECK(check_binary([](Tape& t, Var a, Var b) { return ad::add_row(t, a, b); }, random_mat(rng, 4, 3),
                     random_mat(rng, 1, 3)) < tol);
  CHECK(check_binary(
            [](Tape& t, Var a, Var b) {
              const Var parts[] = {a, b};
              return ad::concat_rows(t, parts);
            },
            random_mat(rng, 2, 3), random_mat(rng, 1, 3)) < tol);
  CHECK(check_binary(
            [](Tape& t, Var a, Var b) {
              const Var parts[] = {a, b};
              return ad::concat_cols(t, parts);
            },
            random_mat(rng, 2, 3), random_mat(rng, 2, 2)) < tol);
}

TEST_CASE("unary ops match finite differences") {
  std::mt19937 rng(2);
  const std::vector<std::pair<const char*, std::function<Var(Tape&, Var)>>> ops = {
      {"scale", [](Tape& t, Var a) { return ad::scale(t, a, -1.7); }},
      {"add_scalar", [](Tape& t, Var a) { return ad::add_scalar(t, a, 0.3); }},
      {"exp", [](Tape& t, Var a) { return ad::exp(t, a); }},
      {"square", [](Tape& t, Var a) { return ad::square(t, a); }},
      {"tanh", [](Tape& t, Var a) { return ad::tanh(t, a); }},
      {"gelu", [](Tape& t, Var a) { return ad::gelu(t, a); }},
      {"clamp", [](Tape& t, Var a) { return ad::clamp(t, a, -0.5, 0.5); }},
      {"slice_rows", [](Tape& t, Var a) { return ad::slice_rows(t, a, 1, 2); }},
      {"reshape", [](Tape& t, Var a) { return ad::reshape(t, a, 2, 6); }},
      {"mean_rows", [](Tape& t, Var a) { return ad::mean_rows(t, a); }},
      {"sum", [](Tape& t, Var a) { return ad::sum(t, a); }},
      {"log_softmax_rows", [](Tape& t, Var a) { return ad::log_softmax_rows(t, a); }},
  };
  for (const auto& [name, op] : ops) {
    CAPTURE(name);
    Parameter a("a", random_mat(rng, 4, 3));
    auto loss = [&](bool bw) {
      Tape t;
      return weighted_sum(t, op(t, t.param(a)), bw);
    };
    CHECK(grad_check({&a}, loss).max_rel_error < 1e-6);
  }
}

TEST_CASE("clamp passes no gradient outside its range") {
  Parameter a("a", (Mat(1, 3) << -2.0, 0.1, 3.0).finished());
  Tape t;
  const Var c = ad::clamp(t, t.param(a), -1.0, 1.0);
  t.backward(ad::sum(t, c));
  CHECK(a.grad(0, 0) == 0.0);
  CHECK(a.grad(0, 1) == 1.0);
  CHECK(a.grad(0, 2) == 0.0);
  CHECK(t.value(c)(0, 0) == -1.0);
}

TEST_CASE("layer norm matches finite differences in input, gain and bias") {
  std::mt19937 rng(3);
  Parameter x("x", random_mat(rng, 3, 5)), g("g", random_mat(rng, 1, 5)), b("b", random_mat(rng, 1, 5));
  auto loss = [&](bool bw) {
    Tape t;
    return weighted_sum(t, ad::layer_norm(t, t.param(x), t.param(g), t.param(b)), bw);
  };
  CHECK(grad_check({&x, &g, &b}, loss).max_rel_error < 1e-5);
}

TEST_CASE("causal attention matches finite differences") {
  std::mt19937 rng(4);
  Parameter qkv("qkv", random_mat(rng, 5, 12));
  auto loss = [&](bool bw) {
    Tape t;
    return weighted_sum(t, ad::causal_attention(t, t.param(qkv), 2), bw);
  };
  CHECK(grad_check({&qkv}, loss, 1e-6, 60).max_rel_error < 1e-5);
}

TEST_CASE("causal attention ignores later positions") {
  std::mt19937 rng(5);
  Mat x = random_mat(rng, 4, 12);
  Tape t1(false), t2(false);
  const Mat a = t1.value(ad::causal_attention(t1, t1.constant(x), 2));
  x.row(3).setRandom();
  const Mat b = t2.value(ad::causal_attention(t2, t2.constant(x), 2));
  CHECK((a.topRows(3) - b.topRows(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gather rows scatters gradients into the table") {
  std::mt19937 rng(6);
  Parameter table("table", random_mat(rng, 5, 3));
  const std::vector<TokenId> ids = {1, 4, 1, 0};
  auto loss = [&](bool bw) {
    Tape t;
    return weighted_sum(t, ad::gather_rows(t, t.param(table), ids), bw);
  };
  CHECK(grad_check({&table}, loss).max_rel_error < 1e-6);
  CHECK(table.grad.row(2).cwiseAbs().sum() == 0.0);
}

TEST_CASE("cross entropy matches finite differences and honours the ignore id") {
  std::mt19937 rng(7);
  Parameter logits("logits", random_mat(rng, 4, 6));
  const std::vector<TokenId> targets = {2, 0, 5, 0};
  auto loss = [&](bool bw) {
    Tape t;
    const Var l = ad::cross_entropy_sum(t, t.param(logits), targets, 0);
    if (bw) t.backward(l);
    return t.scalar(l);
  };
  CHECK(grad_check({&logits}, loss).max_rel_error < 1e-6);
  CHECK(logits.grad.row(1).cwiseAbs().sum() == 0.0);
  CHECK(logits.grad.row(3).cwiseAbs().sum() == 0.0);
}

TEST_CASE("parameter gradients accumulate across uses") {
  Parameter a("a", Mat::Constant(1, 1, 2.0));
  Tape t;
  const Var x = t.param(a);
  t.backward(ad::sum(t, ad::mul(t, x, x)));
  CHECK(a.grad(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("value kernels") {
  RowVec z(3);
  z << 1000.0, 1000.0, 1000.0;
  CHECK(kernel::log_sum_exp(z) == doctest::Approx(1000.0 + std::log(3.0)));
  const RowVec p = kernel::softmax(z);
  CHECK(p.sum() == doctest::Approx(1.0));
  const Mat x = (Mat(2, 3) << 1, 2, 3, -1, 0, 4).finished();
  const Mat y = kernel::layer_norm(x, Mat::Ones(1, 3), Mat::Zero(1, 3));
  for (int r = 0; r < 2; ++r) CHECK(std::abs(y.row(r).mean()) < 1e-12);
}

TEST_CASE("inference tapes keep no gradient state") {
  Parameter a("a", Mat::Ones(2, 2));
  Tape t(false);
  const Var v = ad::exp(t, t.param(a));
  CHECK_FALSE(t.requires_grad(v));
  CHECK(t.value(v)(0, 0) == doctest::Approx(std::exp(1.0)));
}
