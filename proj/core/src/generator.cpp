#include "infooirt/generator.hpp"

#include <cmath>

#include "infooirt/error.hpp"
#include "infooirt/rng.hpp"

namespace infooirt {

namespace {

constexpr double kInitStd = 0.02;

Mat normal(Eigen::Index rows, Eigen::Index cols, double std, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * standard_normal(rng);
  return m;
}

Parameter zeros(std::string name, Eigen::Index rows, Eigen::Index cols) {
  return Parameter(std::move(name), Mat::Zero(rows, cols));
}

Parameter ones(std::string name, Eigen::Index cols) { return Parameter(std::move(name), Mat::Ones(1, cols)); }

void check_finite(const RowVec& v, const char* what) {
  if (!v.allFinite()) throw ConfigError(std::string(what) + " contains non-finite values");
}

}  // namespace

void GeneratorConfig::validate() const {
  if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || max_len <= 2) {
    throw ConfigError("generator sizes must be positive (max_len > 2)");
  }
  if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
  if (vocab_size <= Vocabulary::kNumSpecial) throw ConfigError("generator vocab_size must exceed the special tokens");
}

Generator::Generator(const GeneratorConfig& config, int state_dim, std::uint64_t seed)
    : config_(config), state_dim_(state_dim) {
  config_.validate();
  if (state_dim < 1) throw ConfigError("generator needs a state dimension >= 1");
  const Eigen::Index d = config_.d_model;
  const double proj_std = kInitStd / std::sqrt(2.0 * config_.n_layers);
  Rng rng = make_rng(seed, "init.generator");
  tok_emb = Parameter("gen.tok_emb", normal(config_.vocab_size, d, kInitStd, rng));
  pos_emb = Parameter("gen.pos_emb", normal(config_.max_len, d, kInitStd, rng));
  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "gen.l" + std::to_string(l) + ".";
    Layer L;
    L.ln1_g = ones(p + "ln1_g", d);
    L.ln1_b = zeros(p + "ln1_b", 1, d);
    L.w_qkv = Parameter(p + "w_qkv", normal(d, 3 * d, kInitStd, rng));
    L.b_qkv = zeros(p + "b_qkv", 1, 3 * d);
    L.w_o = Parameter(p + "w_o", normal(d, d, proj_std, rng));
    L.b_o = zeros(p + "b_o", 1, d);
    L.ln2_g = ones(p + "ln2_g", d);
    L.ln2_b = zeros(p + "ln2_b", 1, d);
    L.w_fc = Parameter(p + "w_fc", normal(d, 4 * d, kInitStd, rng));
    L.b_fc = zeros(p + "b_fc", 1, 4 * d);
    L.w_proj = Parameter(p + "w_proj", normal(4 * d, d, proj_std, rng));
    L.b_proj = zeros(p + "b_proj", 1, d);
    layers.push_back(std::move(L));
  }
  lnf_g = ones("gen.lnf_g", d);
  lnf_b = zeros("gen.lnf_b", 1, d);

  Rng arng = make_rng(seed, "init.alignment");
  Mat w(d + state_dim, d);
  w.topRows(d).setIdentity();
  w.bottomRows(state_dim) = normal(state_dim, d, kInitStd, arng);
  align_w = Parameter("align.w", std::move(w));
  align_b = zeros("align.b", 1, d);
}

Generator::TapeOutput Generator::forward(Tape& t, std::span<const TokenId> problem, Var h,
                                         std::span<const TokenId> code) {
  const auto M = static_cast<Eigen::Index>(problem.size());
  const auto N = static_cast<Eigen::Index>(code.size());
  const Eigen::Index T = M + N + 2;
  if (T > config_.max_len) {
    throw ShapeError("sequence of " + std::to_string(T) + " tokens exceeds max_len " + std::to_string(config_.max_len));
  }
  if (t.value(h).rows() != 1 || t.value(h).cols() != state_dim_) throw ShapeError("state h has the wrong width");
  const Eigen::Index d = config_.d_model;

  const Var emb = t.param(tok_emb);
  std::vector<Var> parts;
  const TokenId bos[] = {Vocabulary::kBos};
  parts.push_back(ad::gather_rows(t, emb, bos));
  if (M > 0) {
    const Var w = t.param(align_w);
    const Var p = ad::gather_rows(t, emb, problem);
    const Var pw = ad::matmul(t, p, ad::slice_rows(t, w, 0, d));
    const Var hw = ad::add(t, ad::matmul(t, h, ad::slice_rows(t, w, d, state_dim_)), t.param(align_b));
    parts.push_back(ad::add_row(t, pw, hw));
  }
  std::vector<TokenId> tail{Vocabulary::kSep};
  tail.insert(tail.end(), code.begin(), code.end());
  parts.push_back(ad::gather_rows(t, emb, tail));
  Var x = ad::concat_rows(t, parts);
  x = ad::add(t, x, ad::slice_rows(t, t.param(pos_emb), 0, T));

  for (auto& L : layers) {
    const Var a = ad::layer_norm(t, x, t.param(L.ln1_g), t.param(L.ln1_b));
    const Var qkv = ad::add_row(t, ad::matmul(t, a, t.param(L.w_qkv)), t.param(L.b_qkv));
    const Var att = ad::causal_attention(t, qkv, config_.n_heads);
    x = ad::add(t, x, ad::add_row(t, ad::matmul(t, att, t.param(L.w_o)), t.param(L.b_o)));
    const Var m = ad::layer_norm(t, x, t.param(L.ln2_g), t.param(L.ln2_b));
    const Var f = ad::gelu(t, ad::add_row(t, ad::matmul(t, m, t.param(L.w_fc)), t.param(L.b_fc)));
    x = ad::add(t, x, ad::add_row(t, ad::matmul(t, f, t.param(L.w_proj)), t.param(L.b_proj)));
  }
  const Var hidden = ad::layer_norm(t, x, t.param(lnf_g), t.param(lnf_b));

  TapeOutput out;
  out.logits = ad::matmul_nt(t, ad::slice_rows(t, hidden, M + 1, N + 1), emb);
  if (N > 0) {
    out.last_hidden = ad::slice_rows(t, hidden, M + 2, N);
    out.r_c = ad::mean_rows(t, out.last_hidden);
  } else {
    out.last_hidden = ad::slice_rows(t, hidden, M + 2, 0);
    out.r_c = ad::slice_rows(t, hidden, M + 1, 1);
  }
  return out;
}

GeneratorOutput Generator::forward(std::span<const TokenId> problem, const RowVec& h,
                                   std::span<const TokenId> code) const {
  Tape t(false);
  // The no-grad tape never writes through the parameter pointers.
  auto& self = const_cast<Generator&>(*this);
  const TapeOutput o = self.forward(t, problem, t.constant(h), code);
  return GeneratorOutput{t.value(o.logits), t.value(o.last_hidden), t.value(o.r_c)};
}

RowVec Generator::align(const RowVec& p, const RowVec& h) const {
  const Eigen::Index d = config_.d_model;
  if (p.size() != d || h.size() != state_dim_) throw ShapeError("align: input widths do not match the model");
  return p * align_w.value.topRows(d) + (h * align_w.value.bottomRows(state_dim_) + align_b.value);
}

GenerationResult Generator::generate(std::span<const TokenId> problem, const RowVec& h, int max_new_tokens) const {
  if (h.size() != state_dim_) throw ShapeError("state h has the wrong width");
  const Eigen::Index d = config_.d_model;
  const int H = config_.n_heads;
  const Eigen::Index dh = d / H;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const int n_layers = static_cast<int>(layers.size());
  std::vector<Mat> K(static_cast<std::size_t>(n_layers), Mat(config_.max_len, d));
  std::vector<Mat> V(static_cast<std::size_t>(n_layers), Mat(config_.max_len, d));
  Eigen::Index pos = 0;

  // Advances the cache by one input row and returns the final hidden state.
  auto step = [&](const RowVec& input) {
    Mat x = input + pos_emb.value.row(pos);
    for (int l = 0; l < n_layers; ++l) {
      const Layer& L = layers[static_cast<std::size_t>(l)];
      auto& Kl = K[static_cast<std::size_t>(l)];
      auto& Vl = V[static_cast<std::size_t>(l)];
      const Mat a = kernel::layer_norm(x, L.ln1_g.value, L.ln1_b.value);
      const Mat qkv = a * L.w_qkv.value + L.b_qkv.value;
      Kl.row(pos) = qkv.block(0, d, 1, d);
      Vl.row(pos) = qkv.block(0, 2 * d, 1, d);
      Mat att(1, d);
      for (int hh = 0; hh < H; ++hh) {
        const RowVec q = qkv.block(0, hh * dh, 1, dh);
        RowVec s = (Kl.block(0, hh * dh, pos + 1, dh) * q.transpose()).transpose() * sc;
        const double m = s.maxCoeff();
        s = (s.array() - m).exp();
        s /= s.sum();
        att.block(0, hh * dh, 1, dh) = s * Vl.block(0, hh * dh, pos + 1, dh);
      }
      x += att * L.w_o.value + L.b_o.value;
      const Mat mm = kernel::layer_norm(x, L.ln2_g.value, L.ln2_b.value);
      x += kernel::gelu(mm * L.w_fc.value + L.b_fc.value) * L.w_proj.value + L.b_proj.value;
    }
    ++pos;
    return RowVec(kernel::layer_norm(x, lnf_g.value, lnf_b.value));
  };

  GenerationResult out;
  const auto M = static_cast<Eigen::Index>(problem.size());
  if (M + 2 > config_.max_len) throw ShapeError("problem does not fit in max_len");
  step(tok_emb.value.row(Vocabulary::kBos));
  for (TokenId id : problem) {
    if (id < 0 || id >= tok_emb.value.rows()) throw ShapeError("problem token id out of range");
    step(align(tok_emb.value.row(id), h));
  }
  RowVec hidden = step(tok_emb.value.row(Vocabulary::kSep));
  for (int n = 0;; ++n) {
    const RowVec logits = hidden * tok_emb.value.transpose();
    TokenId best = 0;
    for (Eigen::Index j = 1; j < logits.size(); ++j) {
      if (logits[j] > logits[best]) best = static_cast<TokenId>(j);
    }
    if (best == Vocabulary::kEos) break;
    if (n >= max_new_tokens || pos >= config_.max_len) {
      out.truncated = true;
      break;
    }
    out.code.push_back(best);
    hidden = step(tok_emb.value.row(best));
  }
  return out;
}

std::vector<Parameter*> Generator::backbone_parameters() {
  std::vector<Parameter*> ps{&tok_emb, &pos_emb};
  for (auto& L : layers) {
    for (Parameter* p : {&L.ln1_g, &L.ln1_b, &L.w_qkv, &L.b_qkv, &L.w_o, &L.b_o, &L.ln2_g, &L.ln2_b, &L.w_fc,
                         &L.b_fc, &L.w_proj, &L.b_proj}) {
      ps.push_back(p);
    }
  }
  ps.push_back(&lnf_g);
  ps.push_back(&lnf_b);
  return ps;
}

std::vector<Parameter*> Generator::alignment_parameters() { return {&align_w, &align_b}; }

std::vector<const Parameter*> Generator::parameters() const {
  auto& self = const_cast<Generator&>(*this);
  std::vector<const Parameter*> out;
  for (Parameter* p : self.backbone_parameters()) out.push_back(p);
  for (Parameter* p : self.alignment_parameters()) out.push_back(p);
  return out;
}

QNetwork::QNetwork(int d_model, const KnowledgeConfig& knowledge, std::uint64_t seed)
    : knowledge_(knowledge), d_model_(d_model) {
  knowledge_.validate();
  Rng rng = make_rng(seed, "init.q");
  const Eigen::Index d = d_model;
  const Eigen::Index nd = knowledge_.d_disc * knowledge_.k;
  w1 = Parameter("q.w1", normal(d, d, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  b1 = zeros("q.b1", 1, d);
  w_mean = Parameter("q.w_mean", normal(d, knowledge_.d_cont, kInitStd, rng));
  b_mean = zeros("q.b_mean", 1, knowledge_.d_cont);
  w_log_sigma = Parameter("q.w_log_sigma", normal(d, knowledge_.d_cont, kInitStd, rng));
  b_log_sigma = zeros("q.b_log_sigma", 1, knowledge_.d_cont);
  w_disc = Parameter("q.w_disc", normal(d, nd, kInitStd, rng));
  b_disc = zeros("q.b_disc", 1, nd);
}

QNetwork::TapeOutput QNetwork::forward(Tape& t, Var r_c) {
  if (t.value(r_c).rows() != 1 || t.value(r_c).cols() != d_model_) throw ShapeError("q: r_c has the wrong width");
  const Var hdn = ad::tanh(t, ad::add(t, ad::matmul(t, r_c, t.param(w1)), t.param(b1)));
  TapeOutput out;
  out.cont_mean = ad::add(t, ad::matmul(t, hdn, t.param(w_mean)), t.param(b_mean));
  out.cont_log_sigma = ad::clamp(t, ad::add(t, ad::matmul(t, hdn, t.param(w_log_sigma)), t.param(b_log_sigma)),
                                 kLogSigmaMin, kLogSigmaMax);
  out.disc_logits = ad::add(t, ad::matmul(t, hdn, t.param(w_disc)), t.param(b_disc));
  return out;
}

QPrediction QNetwork::predict(const RowVec& r_c) const {
  check_finite(r_c, "q input");
  if (r_c.size() != d_model_) throw ShapeError("q: r_c has the wrong width");
  Tape t(false);
  auto& self = const_cast<QNetwork&>(*this);
  const TapeOutput o = self.forward(t, t.constant(r_c));
  QPrediction q;
  q.cont_mean = t.value(o.cont_mean);
  q.cont_log_sigma = t.value(o.cont_log_sigma);
  const Mat& flat = t.value(o.disc_logits);
  q.disc_logits = Eigen::Map<const Mat>(flat.data(), knowledge_.d_disc, knowledge_.k);
  return q;
}

std::vector<Parameter*> QNetwork::parameters() {
  return {&w1, &b1, &w_mean, &b_mean, &w_log_sigma, &b_log_sigma, &w_disc, &b_disc};
}

std::vector<const Parameter*> QNetwork::parameters() const {
  return {&w1, &b1, &w_mean, &b_mean, &w_log_sigma, &b_log_sigma, &w_disc, &b_disc};
}

}  // namespace infooirt
