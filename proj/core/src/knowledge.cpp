#include "infooirt/knowledge.hpp"

#include <cmath>

#include "infooirt/error.hpp"

namespace infooirt {

namespace {

constexpr double kInitStd = 0.1;  // N(0, 0.01) as a variance

void check_temperature(double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("sampling temperature must be positive");
}

RowVec relaxed(const Eigen::Ref<const RowVec>& logits, const Eigen::Ref<const RowVec>& gumbel, double tau) {
  return kernel::softmax((logits + gumbel) / tau);
}

}  // namespace

void KnowledgeConfig::validate() const {
  if (d_bar < 0 || d_cont < 0 || d_disc < 0) throw ConfigError("knowledge dimensions must be nonnegative");
  if (k < 2) throw ConfigError("discrete factors need k >= 2 classes");
  if (d_bar + d_cont + d_disc < 1) throw ConfigError("knowledge state must have at least one dimension");
}

Mat StudentKnowledgeState::disc_probs() const {
  Mat p(disc_logits.rows(), disc_logits.cols());
  for (Eigen::Index r = 0; r < p.rows(); ++r) p.row(r) = kernel::softmax(disc_logits.row(r));
  return p;
}

StudentKnowledgeState init_state(const KnowledgeConfig& config, Rng& rng) {
  config.validate();
  StudentKnowledgeState s;
  s.h_bar.resize(config.d_bar);
  for (auto& v : s.h_bar) v = kInitStd * standard_normal(rng);
  s.mu.resize(config.d_cont);
  for (auto& v : s.mu) v = kInitStd * standard_normal(rng);
  s.log_sigma = RowVec::Zero(config.d_cont);
  s.disc_logits = Mat::Zero(config.d_disc, config.k);
  return s;
}

StudentKnowledgeState init_state(const KnowledgeConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed, "knowledge.init");
  return init_state(config, rng);
}

LatentNoise draw_noise(const KnowledgeConfig& config, Rng& rng) {
  LatentNoise n;
  n.eps.resize(config.d_cont);
  for (auto& v : n.eps) v = standard_normal(rng);
  n.gumbel.resize(config.d_disc, config.k);
  for (Eigen::Index i = 0; i < n.gumbel.size(); ++i) n.gumbel.data()[i] = -std::log(-std::log(uniform_open(rng)));
  return n;
}

RowVec argmax_one_hot(const Eigen::Ref<const RowVec>& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  RowVec out = RowVec::Zero(logits.size());
  out[best] = 1.0;
  return out;
}

LatentSample sample_latent(const StudentKnowledgeState& state, SampleMode mode, double temperature,
                           const LatentNoise& noise) {
  check_temperature(temperature);
  LatentSample s;
  s.disc.resize(state.disc_logits.rows(), state.disc_logits.cols());
  if (mode == SampleMode::deterministic) {
    s.cont = state.mu;
    for (Eigen::Index r = 0; r < s.disc.rows(); ++r) s.disc.row(r) = argmax_one_hot(state.disc_logits.row(r));
    return s;
  }
  if (noise.eps.size() != state.mu.size() || noise.gumbel.rows() != state.disc_logits.rows() ||
      noise.gumbel.cols() != state.disc_logits.cols()) {
    throw ShapeError("latent noise does not match the state");
  }
  s.differentiable = true;
  s.cont = state.mu.array() + state.sigma().array() * noise.eps.array();
  for (Eigen::Index r = 0; r < s.disc.rows(); ++r) {
    const RowVec y = relaxed(state.disc_logits.row(r), noise.gumbel.row(r), temperature);
    s.disc.row(r) = mode == SampleMode::relaxed ? y : argmax_one_hot(y);
  }
  return s;
}

LatentSample sample_latent(const StudentKnowledgeState& state, SampleMode mode, double temperature,
                           std::uint64_t seed) {
  check_temperature(temperature);
  KnowledgeConfig shape;
  shape.d_bar = static_cast<int>(state.h_bar.size());
  shape.d_cont = static_cast<int>(state.mu.size());
  shape.d_disc = static_cast<int>(state.disc_logits.rows());
  shape.k = static_cast<int>(state.disc_logits.cols());
  Rng rng = make_rng(seed, "knowledge.sample");
  return sample_latent(state, mode, temperature, draw_noise(shape, rng));
}

AssembledState assemble(const KnowledgeConfig& config, const RowVec& h_bar, const LatentSample& sample) {
  if (h_bar.size() != config.d_bar || sample.cont.size() != config.d_cont ||
      sample.disc.rows() != config.d_disc || (config.d_disc > 0 && sample.disc.cols() != config.k)) {
    throw ShapeError("latent sample does not match the knowledge config");
  }
  AssembledState a;
  a.h.resize(config.state_dim());
  a.h.head(config.d_bar) = h_bar;
  a.h.segment(config.d_bar, config.d_cont) = sample.cont;
  a.h.tail(config.d_disc * config.k) = Eigen::Map<const RowVec>(sample.disc.data(), config.d_disc * config.k);
  return a;
}

namespace ad {

Var gumbel_softmax(Tape& t, Var logits, const Mat& gumbel, int k, double temperature, bool hard) {
  check_temperature(temperature);
  const Mat& L = t.value(logits);
  const Eigen::Index groups = L.cols() / k;
  if (L.rows() != 1 || L.cols() % k != 0 || gumbel.size() != L.cols()) {
    throw ShapeError("gumbel_softmax: logits/noise shape mismatch");
  }
  const Eigen::Map<const RowVec> g(gumbel.data(), gumbel.size());
  auto soft = std::make_shared<Mat>(1, L.cols());
  Mat out(1, L.cols());
  for (Eigen::Index i = 0; i < groups; ++i) {
    const RowVec y = relaxed(L.row(0).segment(i * k, k), g.segment(i * k, k), temperature);
    soft->row(0).segment(i * k, k) = y;
    out.row(0).segment(i * k, k) = hard ? argmax_one_hot(y) : y;
  }
  return t.push(std::move(out), t.requires_grad(logits), [logits, soft, k, groups, temperature](Tape& tp, const Mat& gr) {
    Mat d(1, soft->cols());
    for (Eigen::Index i = 0; i < groups; ++i) {
      const RowVec y = soft->row(0).segment(i * k, k);
      const RowVec go = gr.row(0).segment(i * k, k);
      d.row(0).segment(i * k, k) = y.cwiseProduct((go.array() - go.dot(y)).matrix()) / temperature;
    }
    tp.accumulate(logits, d);
  });
}

}  // namespace ad

KnowledgeStore::KnowledgeStore(const KnowledgeConfig& config, std::vector<std::string> students, std::uint64_t seed)
    : config_(config), students_(std::move(students)) {
  config_.validate();
  const auto n = static_cast<Eigen::Index>(students_.size());
  h_bar = Parameter("knowledge.h_bar", Mat::Zero(n, config_.d_bar));
  mu = Parameter("knowledge.mu", Mat::Zero(n, config_.d_cont));
  log_sigma = Parameter("knowledge.log_sigma", Mat::Zero(n, config_.d_cont));
  disc_logits = Parameter("knowledge.disc_logits", Mat::Zero(n, config_.d_disc * config_.k));
  for (int i = 0; i < static_cast<int>(n); ++i) {
    if (!index_.emplace(students_[static_cast<std::size_t>(i)], i).second) {
      throw ConfigError("duplicate student id '" + students_[static_cast<std::size_t>(i)] + "'");
    }
    Rng rng = make_rng(seed, "knowledge.init/" + students_[static_cast<std::size_t>(i)]);
    set_state(i, init_state(config_, rng));
  }
}

int KnowledgeStore::index_of(const std::string& student) const {
  const auto it = index_.find(student);
  if (it == index_.end()) throw UnknownEntityError("no knowledge state for student '" + student + "'");
  return it->second;
}

StudentKnowledgeState KnowledgeStore::state(int i) const {
  StudentKnowledgeState s;
  s.h_bar = h_bar.value.row(i);
  s.mu = mu.value.row(i);
  s.log_sigma = log_sigma.value.row(i);
  const RowVec flat = disc_logits.value.row(i);
  s.disc_logits = Eigen::Map<const Mat>(flat.data(), config_.d_disc, config_.k);
  return s;
}

void KnowledgeStore::set_state(int i, const StudentKnowledgeState& s) {
  h_bar.value.row(i) = s.h_bar;
  mu.value.row(i) = s.mu;
  log_sigma.value.row(i) = s.log_sigma;
  disc_logits.value.row(i) = Eigen::Map<const RowVec>(s.disc_logits.data(), s.disc_logits.size());
}

KnowledgeStore::TapeSample KnowledgeStore::sample(Tape& t, int index, SampleMode mode, double temperature,
                                                  const LatentNoise& noise) {
  const TokenId row[] = {index};
  TapeSample out;
  const Var hb = ad::gather_rows(t, t.param(h_bar), row);
  const Var m = ad::gather_rows(t, t.param(mu), row);
  const Var logits = ad::gather_rows(t, t.param(disc_logits), row);
  if (mode == SampleMode::deterministic) {
    out.cont = m;
    Mat hot(1, config_.d_disc * config_.k);
    const Mat& L = t.value(logits);
    for (int i = 0; i < config_.d_disc; ++i) {
      hot.row(0).segment(i * config_.k, config_.k) = argmax_one_hot(L.row(0).segment(i * config_.k, config_.k));
    }
    out.disc = t.constant(std::move(hot));
  } else {
    check_temperature(temperature);
    const Var ls = ad::gather_rows(t, t.param(log_sigma), row);
    out.cont = ad::add(t, m, ad::mul(t, ad::exp(t, ls), t.constant(noise.eps)));
    out.disc = ad::gumbel_softmax(t, logits, noise.gumbel, config_.k, temperature, mode == SampleMode::stochastic);
  }
  const Var parts[] = {hb, out.cont, out.disc};
  out.h = ad::concat_cols(t, parts);
  return out;
}

std::vector<Parameter*> KnowledgeStore::parameters() { return {&h_bar, &mu, &log_sigma, &disc_logits}; }
std::vector<const Parameter*> KnowledgeStore::parameters() const { return {&h_bar, &mu, &log_sigma, &disc_logits}; }

}  // namespace infooirt
