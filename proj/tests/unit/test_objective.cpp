#include "doctest.h"

#include <cmath>
#include <numbers>

#include "gradcheck.hpp"
#include "infooirt/error.hpp"
#include "infooirt/objective.hpp"

using namespace infooirt;
using infooirt::testing::grad_check;
using infooirt::testing::random_mat;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

TEST_CASE("uniform logits cost log V per token") {
  const Mat logits = Mat::Zero(2, 4);
  const std::vector<TokenId> targets = {1, 3};
  const TokenNll l = oirt_loss(logits, targets);
  CHECK(l.sum == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
  CHECK(l.count == 2);
  Tape t;
  CHECK(t.scalar(oirt_loss(t, t.constant(logits), targets)) == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("token loss against a hand-computed oracle") {
  std::mt19937 rng(17);
  const Mat logits = random_mat(rng, 3, 5);
  const std::vector<TokenId> targets = {4, Vocabulary::kPad, 2};
  double expected = 0.0;
  for (int r : {0, 2}) {
    double z = 0.0;
    for (int j = 0; j < 5; ++j) z += std::exp(logits(r, j));
    expected += std::log(z) - logits(r, targets[static_cast<std::size_t>(r)]);
  }
  const TokenNll l = oirt_loss(logits, targets);
  CHECK(std::abs(l.sum - expected) < 1e-9);
  CHECK(l.count == 2);
  Tape t;
  CHECK(std::abs(t.scalar(oirt_loss(t, t.constant(logits), targets)) - expected) < 1e-9);
  const std::vector<TokenId> short_targets = {1};
  CHECK_THROWS_AS(oirt_loss(logits, short_targets), ShapeError);
}

TEST_CASE("info loss analytic values") {
  SUBCASE("uniform categorical costs log k per factor") {
    QPrediction q{RowVec::Zero(0), RowVec::Zero(0), Mat::Zero(10, 2)};
    LatentSample x{RowVec::Zero(0), Mat::Zero(10, 2)};
    x.disc.col(1).setOnes();
    CHECK(std::abs(info_nll(q, x) - 10.0 * std::log(2.0)) < 1e-9);
  }
  SUBCASE("standard normal at its mean") {
    QPrediction q{RowVec::Zero(1), RowVec::Zero(1), Mat::Zero(0, 2)};
    LatentSample x{RowVec::Zero(1), Mat::Zero(0, 2)};
    CHECK(std::abs(info_nll(q, x) - 0.5 * kLog2Pi) < 1e-9);
  }
  SUBCASE("mixed case") {
    QPrediction q;
    q.cont_mean = (RowVec(2) << 0.5, -1.0).finished();
    q.cont_log_sigma = (RowVec(2) << std::log(2.0), 7.0).finished();  // second one clamps to 2
    q.disc_logits = (Mat(2, 3) << 1.0, 0.0, -1.0, 0.0, 0.0, std::log(2.0)).finished();
    LatentSample x;
    x.cont = (RowVec(2) << 1.5, 1.0).finished();
    x.disc = (Mat(2, 3) << 1, 0, 0, 0, 0, 1).finished();
    const double g1 = 0.5 * kLog2Pi + std::log(2.0) + 0.5 * 0.25;
    const double z2 = 2.0 / std::exp(2.0);
    const double g2 = 0.5 * kLog2Pi + 2.0 + 0.5 * z2 * z2;
    const double c1 = std::log(std::exp(1.0) + 1.0 + std::exp(-1.0)) - 1.0;
    const double c2 = std::log(4.0) - std::log(2.0);
    CHECK(std::abs(info_nll(q, x) - (g1 + g2 + c1 + c2)) < 1e-9);

    Tape t;
    QNetwork::TapeOutput qt{t.constant(q.cont_mean), t.constant((RowVec(2) << std::log(2.0), 2.0).finished()),
                            t.constant((RowVec(6) << 1.0, 0.0, -1.0, 0.0, 0.0, std::log(2.0)).finished())};
    const Var v = info_nll(t, qt, t.constant(x.cont), t.constant((RowVec(6) << 1, 0, 0, 0, 0, 1).finished()), 3);
    CHECK(std::abs(t.scalar(v) - (g1 + g2 + c1 + c2)) < 1e-9);
  }
  SUBCASE("shape mismatch") {
    QPrediction q{RowVec::Zero(1), RowVec::Zero(1), Mat::Zero(2, 2)};
    LatentSample x{RowVec::Zero(2), Mat::Zero(2, 2)};
    CHECK_THROWS_AS(info_nll(q, x), ShapeError);
  }
}

TEST_CASE("total loss") {
  CHECK(total_loss(1.0, 2.0, 0.1) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(total_loss(1.0, 2.0, 0.0) == 1.0);
  CHECK_THROWS_AS(total_loss(1.0, 2.0, -0.1), ConfigError);
  // the loss grows with q_nll for positive lambda
  CHECK(total_loss(1.0, 3.0, 0.1) > total_loss(1.0, 2.0, 0.1));
  Tape t;
  CHECK(t.scalar(total_loss(t, t.constant(Mat::Constant(1, 1, 1.0)), t.constant(Mat::Constant(1, 1, 2.0)), 0.1)) ==
        doctest::Approx(1.2).epsilon(1e-12));
}

namespace {

/// Knowledge, generator and Q wired together the way training does.
struct Pipeline {
  KnowledgeConfig kc{.d_bar = 2, .d_cont = 1, .d_disc = 2, .k = 2};
  KnowledgeStore store{kc, {"a", "b"}, 3};
  Generator gen{GeneratorConfig{.d_model = 8, .n_layers = 1, .n_heads = 2, .max_len = 16, .vocab_size = 8}, 7, 3};
  QNetwork q{8, kc, 3};
  std::vector<LatentNoise> noise;
  std::vector<TokenId> problem = {5, 6};
  std::vector<std::vector<TokenId>> codes = {{7, 5}, {6, 6, 7}};

  Pipeline() {
    std::mt19937 rng(11);
    for (auto group : {store.parameters(), gen.backbone_parameters(), gen.alignment_parameters(), q.parameters()}) {
      for (Parameter* p : group) p->value += random_mat(rng, p->value.rows(), p->value.cols(), 0.1);
    }
    Rng nr = make_rng(4, "test");
    noise = {draw_noise(kc, nr), draw_noise(kc, nr)};
  }

  Var example(Tape& t, int i, double lambda) {
    const auto s = store.sample(t, i, SampleMode::relaxed, 0.8, noise[static_cast<std::size_t>(i)]);
    const auto& code = codes[static_cast<std::size_t>(i)];
    const auto o = gen.forward(t, problem, s.h, code);
    std::vector<TokenId> targets = code;
    targets.push_back(Vocabulary::kEos);
    const Var oirt = oirt_loss(t, o.logits, targets);
    const Var info = info_nll(t, q.forward(t, o.r_c), s.cont, s.disc, kc.k);
    return total_loss(t, oirt, info, lambda);
  }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> ps;
    for (auto group : {store.parameters(), gen.backbone_parameters(), gen.alignment_parameters(), q.parameters()}) {
      ps.insert(ps.end(), group.begin(), group.end());
    }
    return ps;
  }
};

}  // namespace

TEST_CASE("full objective gradients match finite differences in relaxed mode") {
  Pipeline p;
  auto loss = [&](bool bw) {
    Tape t;
    const Var l = ad::add(t, p.example(t, 0, 0.1), p.example(t, 1, 0.1));
    if (bw) t.backward(l);
    return t.scalar(l);
  };
  const auto r = grad_check(p.all(), loss, 1e-6, 6);
  CAPTURE(r.worst);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("batched loss equals the sum of per-example losses") {
  Pipeline p;
  Tape t(false);
  const double batched = t.scalar(ad::add(t, p.example(t, 0, 0.1), p.example(t, 1, 0.1)));
  Tape a(false), b(false);
  const double looped = a.scalar(p.example(a, 0, 0.1)) + b.scalar(p.example(b, 1, 0.1));
  CHECK(std::abs(batched - looped) < 1e-12);
}

TEST_CASE("the info term reaches the knowledge parameters only when lambda is positive") {
  Pipeline p;
  for (double lambda : {0.0, 0.5}) {
    for (Parameter* x : p.all()) x->zero_grad();
    Tape t;
    t.backward(p.example(t, 0, lambda));
    CHECK((p.q.w_disc.grad.cwiseAbs().sum() > 0.0) == (lambda > 0.0));
    CHECK(p.store.disc_logits.grad.row(0).cwiseAbs().sum() > 0.0);
    CHECK(p.store.disc_logits.grad.row(1).cwiseAbs().sum() == 0.0);
  }
}
