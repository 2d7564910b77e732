#include "infooirt/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

#include "infooirt/error.hpp"
#include "infooirt/rng.hpp"

namespace infooirt {

using nlohmann::json;

std::string to_string(ModelKind kind) { return kind == ModelKind::oirt ? "oirt" : "infooirt"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "oirt") return ModelKind::oirt;
  if (s == "infooirt") return ModelKind::infooirt;
  throw ConfigError("unknown model kind '" + s + "' (expected oirt or infooirt)");
}

void TrainConfig::validate() const {
  if (epochs <= 0 || batch_size <= 0) throw ConfigError("epochs and batch_size must be positive");
  if (!(lr_generator > 0.0) || !(lr_side > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw ConfigError("warmup_fraction must be in [0, 1]");
  if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(temperature_start > 0.0) || !(temperature_end > 0.0)) throw ConfigError("temperatures must be positive");
  knowledge.validate();
  if (kind == ModelKind::oirt && (knowledge.d_cont != 0 || knowledge.d_disc != 0)) {
    throw ConfigError("the oirt model has no interpretable factors (set d_cont = d_disc = 0)");
  }
}

namespace {

// ---- serialization helpers --------------------------------------------------

json config_to_json(const TrainConfig& c) {
  return json{
      {"kind", to_string(c.kind)},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr_generator", c.lr_generator},
      {"lr_side", c.lr_side},
      {"weight_decay", c.weight_decay},
      {"warmup_fraction", c.warmup_fraction},
      {"grad_clip", c.grad_clip},
      {"lambda", c.lambda},
      {"temperature_start", c.temperature_start},
      {"temperature_end", c.temperature_end},
      {"seed", c.seed},
      {"knowledge", {{"d_bar", c.knowledge.d_bar}, {"d_cont", c.knowledge.d_cont},
                     {"d_disc", c.knowledge.d_disc}, {"k", c.knowledge.k}}},
      {"generator", {{"d_model", c.generator.d_model}, {"n_layers", c.generator.n_layers},
                     {"n_heads", c.generator.n_heads}, {"max_len", c.generator.max_len},
                     {"vocab_size", c.generator.vocab_size}}},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.kind = model_kind_from_string(j.at("kind").get<std::string>());
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr_generator = j.at("lr_generator").get<double>();
  c.lr_side = j.at("lr_side").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.warmup_fraction = j.at("warmup_fraction").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.temperature_start = j.at("temperature_start").get<double>();
  c.temperature_end = j.at("temperature_end").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& k = j.at("knowledge");
  c.knowledge = {k.at("d_bar").get<int>(), k.at("d_cont").get<int>(), k.at("d_disc").get<int>(), k.at("k").get<int>()};
  const auto& g = j.at("generator");
  c.generator = {g.at("d_model").get<int>(), g.at("n_layers").get<int>(), g.at("n_heads").get<int>(),
                 g.at("max_len").get<int>(), g.at("vocab_size").get<int>()};
  return c;
}

// ---- optimization -----------------------------------------------------------

/// Adam with optional decoupled weight decay (AdamW when weight_decay > 0).
class Adam {
 public:
  Adam(std::vector<Parameter*> params, double weight_decay) : params_(std::move(params)), wd_(weight_decay) {
    for (Parameter* p : params_) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter& p = *params_[i];
      if (wd_ > 0.0) p.value *= 1.0 - lr * wd_;
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * p.grad;
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * p.grad.cwiseAbs2();
      p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<Parameter*> params_;
  std::vector<Mat> m_, v_;
  double wd_;
  long t_ = 0;
};

double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

std::vector<Parameter*> all_parameters(Checkpoint& ck) {
  std::vector<Parameter*> ps = ck.generator.backbone_parameters();
  for (Parameter* p : ck.generator.alignment_parameters()) ps.push_back(p);
  for (Parameter* p : ck.knowledge.parameters()) ps.push_back(p);
  if (ck.q) {
    for (Parameter* p : ck.q->parameters()) ps.push_back(p);
  }
  return ps;
}

// ---- per-example computation -------------------------------------------------

struct Encoded {
  int student = 0;
  const std::vector<TokenId>* problem = nullptr;
  std::vector<TokenId> code;
  std::vector<TokenId> target;  // code followed by EOS
};

struct ExampleLoss {
  Var total;
  double oirt = 0.0;
  double q_nll = 0.0;
  long tokens = 0;
};

ExampleLoss example_loss(Tape& t, Checkpoint& ck, const Encoded& ex, SampleMode mode, double temperature,
                         const LatentNoise& noise) {
  const KnowledgeStore::TapeSample s = ck.knowledge.sample(t, ex.student, mode, temperature, noise);
  const Generator::TapeOutput g = ck.generator.forward(t, *ex.problem, s.h, ex.code);
  ExampleLoss out;
  const Var oirt = oirt_loss(t, g.logits, ex.target);
  out.oirt = t.scalar(oirt);
  out.tokens = static_cast<long>(ex.target.size());
  out.total = oirt;
  if (ck.q) {
    const QNetwork::TapeOutput q = ck.q->forward(t, g.r_c);
    const Var qn = info_nll(t, q, s.cont, s.disc, ck.knowledge.config().k);
    out.q_nll = t.scalar(qn);
    out.total = total_loss(t, oirt, qn, ck.config.lambda);
  }
  return out;
}

class Encoder {
 public:
  explicit Encoder(const Checkpoint& ck) : ck_(ck) {}

  Encoded operator()(const Submission& s) {
    Encoded e;
    e.student = ck_.knowledge.index_of(s.student_id);
    auto it = problems_.find(s.problem_id);
    if (it == problems_.end()) it = problems_.emplace(s.problem_id, ck_.problem_ids(s.problem_id)).first;
    e.problem = &it->second;
    e.code = ck_.vocab.encode(s.code);
    e.target = e.code;
    e.target.push_back(Vocabulary::kEos);
    const std::size_t len = e.problem->size() + e.code.size() + 2;
    if (len > static_cast<std::size_t>(ck_.config.generator.max_len)) {
      throw ConfigError("submission " + s.student_id + "/" + s.problem_id + " needs " + std::to_string(len) +
                        " positions but max_len is " + std::to_string(ck_.config.generator.max_len));
    }
    return e;
  }

 private:
  const Checkpoint& ck_;
  std::map<std::string, std::vector<TokenId>> problems_;
};

double categorical_entropy(const Eigen::Ref<const RowVec>& logits) {
  const RowVec p = kernel::softmax(logits);
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

std::vector<double> factor_entropies(const KnowledgeStore& store) {
  const auto& cfg = store.config();
  std::vector<double> out(static_cast<std::size_t>(cfg.d_disc), 0.0);
  const auto n = store.disc_logits.value.rows();
  if (n == 0) return out;
  for (Eigen::Index s = 0; s < n; ++s) {
    for (int f = 0; f < cfg.d_disc; ++f) {
      out[static_cast<std::size_t>(f)] += categorical_entropy(store.disc_logits.value.row(s).segment(f * cfg.k, cfg.k));
    }
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

double token_nll(Checkpoint& ck, std::span<const Encoded> examples) {
  double sum = 0.0;
  long count = 0;
  const LatentNoise none;
  for (const auto& ex : examples) {
    Tape t(false);
    const ExampleLoss l = example_loss(t, ck, ex, SampleMode::deterministic, 1.0, none);
    sum += l.oirt;
    count += l.tokens;
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

// ---- training -----------------------------------------------------------------

TrainResult train(const TrainConfig& config_in, const Corpus& corpus, const CorpusSplit& split,
                  const EpochCallback& on_epoch) {
  config_in.validate();
  if (split.train.empty()) throw ConfigError("training split is empty");
  if (split.validation.empty()) throw ConfigError("validation split is empty (needed for model selection)");

  Checkpoint ck;
  ck.config = config_in;
  std::vector<std::string> texts;
  for (std::size_t i : split.train) texts.push_back(corpus.submissions.at(i).code);
  for (const auto& p : corpus.problems) texts.push_back(p.statement);
  ck.vocab = Vocabulary::build(texts);
  ck.config.generator.vocab_size = ck.vocab.size();
  ck.problems = corpus.problems;
  const TrainConfig& cfg = ck.config;
  ck.knowledge = KnowledgeStore(cfg.knowledge, corpus.student_ids(), cfg.seed);
  ck.generator = Generator(cfg.generator, cfg.knowledge.state_dim(), cfg.seed);
  if (cfg.kind == ModelKind::infooirt) ck.q = QNetwork(cfg.generator.d_model, cfg.knowledge, cfg.seed);

  Encoder encode(ck);
  std::vector<Encoded> train_set, val_set;
  for (std::size_t i : split.train) train_set.push_back(encode(corpus.submissions.at(i)));
  for (std::size_t i : split.validation) val_set.push_back(encode(corpus.submissions.at(i)));

  std::vector<Parameter*> side = ck.generator.alignment_parameters();
  for (Parameter* p : ck.knowledge.parameters()) side.push_back(p);
  if (ck.q) {
    for (Parameter* p : ck.q->parameters()) side.push_back(p);
  }
  const std::vector<Parameter*> params = all_parameters(ck);
  Adam gen_opt(ck.generator.backbone_parameters(), cfg.weight_decay);
  Adam side_opt(side, 0.0);

  const long n = static_cast<long>(train_set.size());
  const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;
  const long warmup = static_cast<long>(std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps)));
  auto lr_at = [&](long step) {
    if (step < warmup) return cfg.lr_generator * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const long rest = total_steps - warmup;
    return cfg.lr_generator * static_cast<double>(total_steps - step) / static_cast<double>(rest);
  };
  auto temperature_at = [&](long step) {
    const double frac = total_steps > 1 ? static_cast<double>(step) / static_cast<double>(total_steps - 1) : 1.0;
    return cfg.temperature_start + (cfg.temperature_end - cfg.temperature_start) * frac;
  };

  Rng order_rng = make_rng(cfg.seed, "train.order");
  Rng latent_rng = make_rng(cfg.seed, "train.latent");
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.log.label = to_string(cfg.kind) + " lambda=" + [&] {
    std::ostringstream o;
    o << cfg.lambda;
    return o.str();
  }();
  double best = std::numeric_limits<double>::infinity();
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double sum_oirt = 0.0, sum_q = 0.0, sum_total = 0.0;
    long tokens = 0;
    double temperature = cfg.temperature_start;
    for (long b = 0; b < steps_per_epoch; ++b, ++step) {
      for (Parameter* p : params) p->zero_grad();
      temperature = temperature_at(step);
      double batch_loss = 0.0;
      const long end = std::min(n, (b + 1) * cfg.batch_size);
      for (long i = b * cfg.batch_size; i < end; ++i) {
        const Encoded& ex = train_set[order[static_cast<std::size_t>(i)]];
        const LatentNoise noise = draw_noise(cfg.knowledge, latent_rng);
        Tape t;
        const ExampleLoss l = example_loss(t, ck, ex, SampleMode::stochastic, temperature, noise);
        const double total = t.scalar(l.total);
        if (!std::isfinite(total)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                                " (student " + ck.knowledge.students()[static_cast<std::size_t>(ex.student)] + ")");
        }
        t.backward(l.total);
        batch_loss += total;
        sum_oirt += l.oirt;
        sum_q += l.q_nll;
        sum_total += total;
        tokens += l.tokens;
      }
      const double norm = clip_global_norm(params, cfg.grad_clip);
      if (!std::isfinite(norm)) {
        throw DivergenceError("non-finite gradient norm at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step));
      }
      gen_opt.step(lr_at(step));
      side_opt.step(cfg.lr_side);
      result.log.step_losses.push_back(batch_loss);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_oirt_mean = sum_oirt / static_cast<double>(tokens);
    rec.train_q_nll_mean = sum_q / static_cast<double>(n);
    rec.train_total_mean = sum_total / static_cast<double>(n);
    rec.validation_oirt_mean = token_nll(ck, val_set);
    rec.temperature = temperature;
    rec.factor_entropies = factor_entropies(ck.knowledge);
    if (!std::isfinite(rec.validation_oirt_mean)) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.log.epochs.push_back(rec);
    if (rec.validation_oirt_mean < best) {
      best = rec.validation_oirt_mean;
      ck.epoch = epoch;
      ck.validation_loss = best;
      result.best = ck;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

// ---- checkpoint -----------------------------------------------------------------

std::vector<TokenId> Checkpoint::problem_ids(const std::string& problem_id) const {
  for (const auto& p : problems) {
    if (p.problem_id == problem_id) return vocab.encode(p.statement);
  }
  throw UnknownEntityError("unknown problem '" + problem_id + "'");
}

LatentSample Checkpoint::deterministic_sample(const std::string& student) const {
  return sample_latent(knowledge.state(student), SampleMode::deterministic, 1.0, LatentNoise{});
}

RowVec Checkpoint::state(const std::string& student, const LatentSample& sample) const {
  return assemble(knowledge.config(), knowledge.state(student).h_bar, sample).h;
}

int Checkpoint::max_new_tokens(const std::string& problem_id) const {
  return std::max(0, config.generator.max_len - static_cast<int>(problem_ids(problem_id).size()) - 2);
}

std::string Checkpoint::generate_code(const std::string& problem_id, const RowVec& h, bool* truncated) const {
  const auto ids = problem_ids(problem_id);
  const GenerationResult r = generator.generate(ids, h, max_new_tokens(problem_id));
  if (truncated) *truncated = r.truncated;
  return vocab.decode(r.code);
}

std::vector<const Parameter*> Checkpoint::parameters() const {
  std::vector<const Parameter*> ps = generator.parameters();
  for (const Parameter* p : knowledge.parameters()) ps.push_back(p);
  if (q) {
    for (const Parameter* p : q->parameters()) ps.push_back(p);
  }
  return ps;
}

namespace {

constexpr char kMagic[8] = {'I', 'O', 'I', 'R', 'T', 'C', 'K', 'P'};

template <typename T>
void write_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint");
  return v;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["config"] = config_to_json(config);
  manifest["model_kind"] = to_string(config.kind);
  manifest["epoch"] = epoch;
  manifest["validation_loss"] = validation_loss;
  manifest["vocab"] = vocab.tokens();
  manifest["students"] = knowledge.students();
  json probs = json::array();
  for (const auto& p : problems) {
    probs.push_back({{"problem_id", p.problem_id},
                     {"statement", p.statement},
                     {"skill_tag", p.skill_tag ? json(to_string(*p.skill_tag)) : json(nullptr)}});
  }
  manifest["problems"] = probs;
  json tensors = json::array();
  std::uint64_t offset = 0;
  const auto params = parameters();
  for (const Parameter* p : params) {
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(p->value.size());
  }
  manifest["tensors"] = tensors;
  const std::string text = manifest.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()), static_cast<std::streamsize>(p->value.size() * 8));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path.string() + " is not a checkpoint");
  const auto version = read_le<std::uint32_t>(in);
  if (version != kFormatVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto len = read_le<std::uint64_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint manifest");

  Checkpoint ck;
  try {
    const json m = json::parse(text);
    ck.config = config_from_json(m.at("config"));
    ck.epoch = m.at("epoch").get<int>();
    ck.validation_loss = m.at("validation_loss").get<double>();
    ck.vocab = Vocabulary::from_tokens(m.at("vocab").get<std::vector<std::string>>());
    for (const auto& p : m.at("problems")) {
      Problem pr;
      pr.problem_id = p.at("problem_id").get<std::string>();
      pr.statement = p.at("statement").get<std::string>();
      if (!p.at("skill_tag").is_null()) pr.skill_tag = skill_from_string(p.at("skill_tag").get<std::string>());
      ck.problems.push_back(std::move(pr));
    }
    ck.knowledge = KnowledgeStore(ck.config.knowledge, m.at("students").get<std::vector<std::string>>(), 0);
    ck.generator = Generator(ck.config.generator, ck.config.knowledge.state_dim(), 0);
    if (ck.config.kind == ModelKind::infooirt) ck.q = QNetwork(ck.config.generator.d_model, ck.config.knowledge, 0);

    std::map<std::string, Parameter*> by_name;
    for (Parameter* p : all_parameters(ck)) by_name[p->name] = p;
    const auto& tensors = m.at("tensors");
    if (tensors.size() != by_name.size()) throw IoError("checkpoint tensor count does not match the model");
    for (const auto& tj : tensors) {
      const auto it = by_name.find(tj.at("name").get<std::string>());
      if (it == by_name.end()) throw IoError("unexpected tensor '" + tj.at("name").get<std::string>() + "'");
      Parameter& p = *it->second;
      if (tj.at("rows").get<Eigen::Index>() != p.value.rows() || tj.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw IoError("tensor '" + p.name + "' has the wrong shape");
      }
      in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * 8));
      if (!in) throw IoError("truncated tensor data for '" + p.name + "'");
      p.zero_grad();
    }
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  return ck;
}

// ---- train log ------------------------------------------------------------------

void TrainLog::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : epochs) {
    json j = {{"label", label},
              {"epoch", e.epoch},
              {"train_oirt_mean", e.train_oirt_mean},
              {"train_q_nll_mean", e.train_q_nll_mean},
              {"train_total_mean", e.train_total_mean},
              {"validation_oirt_mean", e.validation_oirt_mean},
              {"temperature", e.temperature},
              {"factor_entropies", e.factor_entropies}};
    out << j.dump() << '\n';
  }
}

TrainLog TrainLog::read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  TrainLog log;
  try {
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      log.label = j.value("label", path.stem().string());
      EpochRecord e;
      e.epoch = j.at("epoch").get<int>();
      e.train_oirt_mean = j.at("train_oirt_mean").get<double>();
      e.train_q_nll_mean = j.at("train_q_nll_mean").get<double>();
      e.train_total_mean = j.value("train_total_mean", 0.0);
      e.validation_oirt_mean = j.at("validation_oirt_mean").get<double>();
      e.temperature = j.value("temperature", 0.0);
      e.factor_entropies = j.value("factor_entropies", std::vector<double>{});
      log.epochs.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed training log " + path.string() + ": " + e.what());
  }
  return log;
}

// ---- evaluation ------------------------------------------------------------------

double mean_token_nll(const Checkpoint& ck_in, const Corpus& corpus, std::span<const std::size_t> part) {
  auto& ck = const_cast<Checkpoint&>(ck_in);  // no-grad tapes only read parameters
  Encoder encode(ck);
  std::vector<Encoded> set;
  for (std::size_t i : part) set.push_back(encode(corpus.submissions.at(i)));
  return token_nll(ck, set);
}

EvalReport evaluate(const Checkpoint& ck, const Corpus& corpus, std::span<const std::size_t> part,
                    const CodeBleuWeights& weights) {
  if (part.empty()) throw ConfigError("cannot evaluate an empty split part");
  EvalReport r;
  r.model = to_string(ck.config.kind);
  r.d_bar = ck.config.knowledge.d_bar;
  r.d_cont = ck.config.knowledge.d_cont;
  r.d_disc = ck.config.knowledge.d_disc;
  r.n = static_cast<long>(part.size());
  for (std::size_t i : part) ck.knowledge.index_of(corpus.submissions.at(i).student_id);
  r.test_loss = mean_token_nll(ck, corpus, part);

  std::vector<CodeBleuReport> scores;
  std::vector<std::string> generated;
  for (std::size_t i : part) {
    const Submission& s = corpus.submissions.at(i);
    EvalExample ex;
    ex.student_id = s.student_id;
    ex.problem_id = s.problem_id;
    ex.generated = ck.generate_code(s.problem_id, ck.state(s.student_id, ck.deterministic_sample(s.student_id)),
                                    &ex.truncated);
    ex.codebleu = codebleu(ex.generated, s.code, weights);
    scores.push_back(ex.codebleu);
    generated.push_back(ex.generated);
    r.examples.push_back(std::move(ex));
  }
  r.codebleu = mean_report(scores);
  auto dist = [&](int k) -> std::optional<double> {
    try {
      return dist_n(generated, k);
    } catch (const ConfigError&) {
      return std::nullopt;
    }
  };
  r.dist1 = dist(1);
  r.dist2 = dist(2);
  r.dist3 = dist(3);
  return r;
}

std::string EvalReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json ex = json::array();
  for (const auto& e : examples) {
    ex.push_back({{"student_id", e.student_id},
                  {"problem_id", e.problem_id},
                  {"generated", e.generated},
                  {"truncated", e.truncated},
                  {"codebleu", json::parse(e.codebleu.to_json())}});
  }
  json j = {{"model", model},
            {"d_bar", d_bar},
            {"d_cont", d_cont},
            {"d_disc", d_disc},
            {"n", n},
            {"test_loss", test_loss},
            {"codebleu", json::parse(codebleu.to_json())},
            {"dist_1", opt(dist1)},
            {"dist_2", opt(dist2)},
            {"dist_3", opt(dist3)},
            {"examples", ex}};
  return j.dump(2);
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << *v;
  return o.str();
}

constexpr const char* kTableHeader =
    "| Model    | |h_bar| | |h_cont| | |h_disc| | CodeBLEU | Test Loss | Dist-1 | Dist-2 | Dist-3 |\n"
    "|----------|---------|----------|----------|----------|-----------|--------|--------|--------|\n";

std::string table_row(const EvalReport& r) {
  std::ostringstream o;
  o << "| " << std::left << std::setw(8) << (r.model == "oirt" ? "OIRT" : "InfoOIRT") << " | " << std::right
    << std::setw(7) << r.d_bar << " | " << std::setw(8) << r.d_cont << " | " << std::setw(8) << r.d_disc << " | "
    << std::setw(8) << fmt(r.codebleu.total) << " | " << std::setw(9) << fmt(r.test_loss) << " | " << std::setw(6)
    << fmt(r.dist1) << " | " << std::setw(6) << fmt(r.dist2) << " | " << std::setw(6) << fmt(r.dist3) << " |\n";
  return o.str();
}

}  // namespace

std::string EvalReport::to_table() const { return std::string(kTableHeader) + table_row(*this); }

std::string eval_table(std::span<const EvalReport> reports) {
  std::string out = kTableHeader;
  for (const auto& r : reports) out += table_row(r);
  return out;
}

}  // namespace infooirt
