#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "infooirt/error.hpp"
#include "infooirt/generator.hpp"

using namespace infooirt;
using infooirt::testing::grad_check;
using infooirt::testing::random_mat;

namespace {

GeneratorConfig small_config() {
  return GeneratorConfig{.d_model = 8, .n_layers = 2, .n_heads = 2, .max_len = 32, .vocab_size = 12};
}

const std::vector<TokenId> kProblem = {5, 6, 7};
const std::vector<TokenId> kCode = {8, 9, 10, 11};

TokenId argmax(const Eigen::Ref<const RowVec>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return static_cast<TokenId>(best);
}

}  // namespace

TEST_CASE("alignment starts as the identity on problem embeddings and is linear in h") {
  Generator g(small_config(), 3, 1);
  std::mt19937 rng(2);
  const RowVec p = random_mat(rng, 1, 8);
  g.align_w.value.bottomRows(3).setZero();
  CHECK((g.align(p, RowVec::Random(3)) - p).cwiseAbs().maxCoeff() == 0.0);

  Generator lin(small_config(), 3, 1);
  lin.align_b.value = random_mat(rng, 1, 8);
  const RowVec h1 = random_mat(rng, 1, 3), h2 = random_mat(rng, 1, 3);
  const RowVec lhs = lin.align(p, 0.3 * h1 + 0.7 * h2);
  const RowVec rhs = 0.3 * lin.align(p, h1) + 0.7 * lin.align(p, h2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(lin.align(RowVec::Zero(7), h1), ShapeError);
}

TEST_CASE("output shapes and r_c is the mean of the code states") {
  const Generator g(small_config(), 3, 1);
  const GeneratorOutput o = g.forward(kProblem, RowVec::Ones(3), kCode);
  CHECK(o.logits.rows() == 5);
  CHECK(o.logits.cols() == 12);
  CHECK(o.last_hidden.rows() == 4);
  CHECK((o.r_c - o.last_hidden.colwise().mean()).cwiseAbs().maxCoeff() < 1e-6);

  const std::vector<TokenId> one = {8};
  const GeneratorOutput o1 = g.forward(kProblem, RowVec::Ones(3), one);
  CHECK((o1.r_c - o1.last_hidden.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the decoder is causal") {
  const Generator g(small_config(), 3, 4);
  const GeneratorOutput a = g.forward(kProblem, RowVec::Ones(3), kCode);
  std::vector<TokenId> changed = kCode;
  changed.back() = 5;
  const GeneratorOutput b = g.forward(kProblem, RowVec::Ones(3), changed);
  // row n predicts code token n and sees only the code before it
  CHECK((a.logits.topRows(4) - b.logits.topRows(4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.logits.row(4) - b.logits.row(4)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("the state only reaches the model through problem tokens") {
  const Generator g(small_config(), 3, 4);
  const std::vector<TokenId> none;
  const GeneratorOutput a = g.forward(none, RowVec::Zero(3), kCode);
  const GeneratorOutput b = g.forward(none, RowVec::Ones(3), kCode);
  CHECK((a.logits - b.logits).cwiseAbs().maxCoeff() == 0.0);
  const GeneratorOutput c = g.forward(kProblem, RowVec::Zero(3), kCode);
  const GeneratorOutput d = g.forward(kProblem, RowVec::Ones(3), kCode);
  CHECK((c.logits - d.logits).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("cached greedy decoding agrees with the teacher-forced pass") {
  std::size_t longest = 0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Generator g(small_config(), 3, seed);
    const RowVec h = RowVec::LinSpaced(3, -1.0, 1.0);
    const GenerationResult r = g.generate(kProblem, h, 8);
    longest = std::max(longest, r.code.size());
    const GeneratorOutput o = g.forward(kProblem, h, r.code);
    for (std::size_t n = 0; n < r.code.size(); ++n) CHECK(argmax(o.logits.row(static_cast<Eigen::Index>(n))) == r.code[n]);
    if (!r.truncated) CHECK(argmax(o.logits.row(static_cast<Eigen::Index>(r.code.size()))) == Vocabulary::kEos);
    CHECK(g.generate(kProblem, h, 8).code == r.code);
  }
  CHECK(longest >= 3);
}

TEST_CASE("generation stops at EOS and respects max_len") {
  Generator g(small_config(), 3, 1);
  g.lnf_g.value.setZero();
  g.tok_emb.value.row(Vocabulary::kEos).setConstant(10.0);
  g.lnf_b.value.setConstant(10.0);
  const GenerationResult r = g.generate(kProblem, RowVec::Zero(3), 10);
  CHECK(r.code.empty());
  CHECK_FALSE(r.truncated);

  const std::vector<TokenId> long_problem(31, 5);
  CHECK_THROWS_AS(g.generate(long_problem, RowVec::Zero(3), 4), ShapeError);
  const std::vector<TokenId> long_code(28, 8);
  CHECK_THROWS_AS(g.forward(kProblem, RowVec::Zero(3), long_code), ShapeError);
  CHECK_THROWS_AS(g.forward(kProblem, RowVec::Zero(4), kCode), ShapeError);
}

TEST_CASE("invalid generator configs") {
  auto cfg = small_config();
  cfg.n_heads = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.vocab_size = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(Generator(small_config(), 0, 1), ConfigError);
}

TEST_CASE("generator gradients match finite differences") {
  auto cfg = small_config();
  cfg.n_layers = 1;
  Generator g(cfg, 3, 5);
  std::mt19937 rng(5);
  // perturb the zero-initialized entries so every parameter path is exercised
  for (Parameter* p : g.backbone_parameters()) p->value += random_mat(rng, p->value.rows(), p->value.cols(), 0.1);
  for (Parameter* p : g.alignment_parameters()) p->value += random_mat(rng, p->value.rows(), p->value.cols(), 0.1);
  Parameter h("h", random_mat(rng, 1, 3));
  std::vector<TokenId> targets = kCode;
  targets.push_back(Vocabulary::kEos);
  auto loss = [&](bool bw) {
    Tape t;
    const auto o = g.forward(t, kProblem, t.param(h), kCode);
    const Var l = ad::add(t, ad::cross_entropy_sum(t, o.logits, targets, Vocabulary::kPad), ad::sum(t, o.r_c));
    if (bw) t.backward(l);
    return t.scalar(l);
  };
  std::vector<Parameter*> ps = g.backbone_parameters();
  for (Parameter* p : g.alignment_parameters()) ps.push_back(p);
  ps.push_back(&h);
  const auto r = grad_check(ps, loss, 1e-6, 6);
  CAPTURE(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("Q network heads") {
  const KnowledgeConfig kc{.d_bar = 2, .d_cont = 2, .d_disc = 3, .k = 2};
  QNetwork q(4, kc, 1);
  const QPrediction p = q.predict(RowVec::Ones(4));
  CHECK(p.cont_mean.size() == 2);
  CHECK(p.cont_log_sigma.size() == 2);
  CHECK(p.disc_logits.rows() == 3);
  CHECK(p.disc_logits.cols() == 2);

  for (Parameter* w : {&q.w_disc, &q.b_disc}) w->value.setZero();
  const QPrediction z = q.predict(RowVec::Ones(4));
  for (Eigen::Index r = 0; r < 3; ++r) {
    const RowVec probs = kernel::softmax(z.disc_logits.row(r));
    CHECK(probs[0] == 0.5);
    CHECK(probs[1] == 0.5);
  }

  q.b_log_sigma.value << 100.0, -100.0;
  const QPrediction c = q.predict(RowVec::Zero(4));
  CHECK(c.cont_log_sigma[0] == QNetwork::kLogSigmaMax);
  CHECK(c.cont_log_sigma[1] == QNetwork::kLogSigmaMin);

  RowVec bad = RowVec::Zero(4);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(q.predict(bad), ConfigError);
  CHECK_THROWS_AS(q.predict(RowVec::Zero(5)), ShapeError);
}

TEST_CASE("Q network gradients match finite differences") {
  const KnowledgeConfig kc{.d_bar = 0, .d_cont = 2, .d_disc = 2, .k = 3};
  QNetwork q(4, kc, 2);
  std::mt19937 rng(9);
  for (Parameter* p : q.parameters()) p->value += random_mat(rng, p->value.rows(), p->value.cols(), 0.3);
  Parameter r("r_c", random_mat(rng, 1, 4));
  const Mat w1 = random_mat(rng, 1, 2), w2 = random_mat(rng, 1, 2), w3 = random_mat(rng, 1, 6);
  auto loss = [&](bool bw) {
    Tape t;
    const auto o = q.forward(t, t.param(r));
    Var l = ad::sum(t, ad::mul(t, o.cont_mean, t.constant(w1)));
    l = ad::add(t, l, ad::sum(t, ad::mul(t, o.cont_log_sigma, t.constant(w2))));
    l = ad::add(t, l, ad::sum(t, ad::mul(t, o.disc_logits, t.constant(w3))));
    if (bw) t.backward(l);
    return t.scalar(l);
  };
  std::vector<Parameter*> ps = q.parameters();
  ps.push_back(&r);
  CHECK(grad_check(ps, loss).max_rel_error < 1e-4);
}
