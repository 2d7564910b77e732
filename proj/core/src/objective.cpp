#include "infooirt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "infooirt/error.hpp"

namespace infooirt {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
}

}  // namespace

TokenNll oirt_loss(const Mat& logits, std::span<const TokenId> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw ShapeError("oirt_loss: " + std::to_string(logits.rows()) + " logit rows for " +
                     std::to_string(targets.size()) + " targets");
  }
  TokenNll out;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const TokenId y = targets[static_cast<std::size_t>(r)];
    if (y == Vocabulary::kPad) continue;
    if (y < 0 || y >= logits.cols()) throw ShapeError("oirt_loss: target id out of range");
    out.sum += kernel::log_sum_exp(logits.row(r)) - logits(r, y);
    ++out.count;
  }
  return out;
}

Var oirt_loss(Tape& t, Var logits, std::span<const TokenId> targets) {
  return ad::cross_entropy_sum(t, logits, targets, Vocabulary::kPad);
}

double info_nll(const QPrediction& q, const LatentSample& sample) {
  if (q.cont_mean.size() != sample.cont.size() || q.cont_log_sigma.size() != sample.cont.size() ||
      q.disc_logits.rows() != sample.disc.rows() ||
      (sample.disc.rows() > 0 && q.disc_logits.cols() != sample.disc.cols())) {
    throw ShapeError("info_nll: prediction and sample shapes differ");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < sample.cont.size(); ++i) {
    const double ls = std::clamp(q.cont_log_sigma[i], QNetwork::kLogSigmaMin, QNetwork::kLogSigmaMax);
    const double z = (sample.cont[i] - q.cont_mean[i]) / std::exp(ls);
    total += kHalfLog2Pi + ls + 0.5 * z * z;
  }
  for (Eigen::Index r = 0; r < sample.disc.rows(); ++r) {
    const double lse = kernel::log_sum_exp(q.disc_logits.row(r));
    for (Eigen::Index j = 0; j < sample.disc.cols(); ++j) {
      total -= sample.disc(r, j) * (q.disc_logits(r, j) - lse);
    }
  }
  return total;
}

Var info_nll(Tape& t, const QNetwork::TapeOutput& q, Var cont, Var disc, int k) {
  const Mat& D = t.value(disc);
  if (t.value(q.cont_mean).cols() != t.value(cont).cols() || t.value(q.disc_logits).cols() != D.cols() ||
      D.cols() % k != 0) {
    throw ShapeError("info_nll: prediction and sample shapes differ");
  }
  const Var z = ad::mul(t, ad::sub(t, cont, q.cont_mean), ad::exp(t, ad::scale(t, q.cont_log_sigma, -1.0)));
  const Var gauss = ad::add_scalar(
      t, ad::sum(t, ad::add(t, q.cont_log_sigma, ad::scale(t, ad::square(t, z), 0.5))),
      kHalfLog2Pi * static_cast<double>(t.value(cont).cols()));
  const Eigen::Index groups = D.cols() / k;
  const Var logp = ad::reshape(t, ad::log_softmax_rows(t, ad::reshape(t, q.disc_logits, groups, k)), 1, groups * k);
  const Var cat = ad::scale(t, ad::sum(t, ad::mul(t, disc, logp)), -1.0);
  return ad::add(t, gauss, cat);
}

double total_loss(double oirt, double q_nll, double lambda) {
  check_lambda(lambda);
  return oirt + lambda * q_nll;
}

Var total_loss(Tape& t, Var oirt, Var q_nll, double lambda) {
  check_lambda(lambda);
  if (lambda == 0.0) return oirt;
  return ad::add(t, oirt, ad::scale(t, q_nll, lambda));
}

}  // namespace infooirt
