#pragma once

#include <span>

#include "infooirt/autograd.hpp"
#include "infooirt/generator.hpp"
#include "infooirt/knowledge.hpp"

namespace infooirt {

struct LossBreakdown {
  double oirt = 0.0;   // summed token NLL
  double q_nll = 0.0;  // -log Q(h_hat | c), entropy term omitted
  double total = 0.0;  // oirt + lambda * q_nll
  double lambda = 0.0;
  long token_count = 0;
};

struct TokenNll {
  double sum = 0.0;
  long count = 0;
};

/// Sum of -log softmax(logits[n])[target[n]] over positions whose target is
/// not PAD. Throws ShapeError when rows and targets differ in length.
TokenNll oirt_loss(const Mat& logits, std::span<const TokenId> targets);
Var oirt_loss(Tape& t, Var logits, std::span<const TokenId> targets);

/// Gaussian NLL of the continuous values under (mean, exp(log_sigma)) plus
/// categorical cross-entropy of the discrete rows under softmax(logits).
/// Q's log-sigmas are clamped to [-5, 2] first. Throws ShapeError.
double info_nll(const QPrediction& q, const LatentSample& sample);
/// Tape version over a 1 x (d_disc * k) flattened discrete sample. The sample
/// is not detached: its gradient reaches the knowledge parameters.
Var info_nll(Tape& t, const QNetwork::TapeOutput& q, Var cont, Var disc, int k);

/// Throws ConfigError for negative lambda.
double total_loss(double oirt, double q_nll, double lambda);
Var total_loss(Tape& t, Var oirt, Var q_nll, double lambda);

}  // namespace infooirt
