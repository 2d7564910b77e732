#include "infooirt/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

#include "infooirt/error.hpp"

namespace infooirt {

namespace {

/// Typed reads from one section that remember which keys were consumed.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  void read(const char* key, int& out) {
    if (const auto* node = find(key)) {
      const auto v = node->value<std::int64_t>();
      if (!node->is_integer() || !v || *v < INT32_MIN || *v > INT32_MAX) fail(key, "an integer");
      out = static_cast<int>(*v);
    }
  }

  void read(const char* key, double& out) {
    if (const auto* node = find(key)) {
      if (!node->is_number()) fail(key, "a number");
      out = *node->value<double>();
    }
  }

  void read(const char* key, std::string& out) {
    if (const auto* node = find(key)) {
      if (!node->is_string()) fail(key, "a string");
      out = *node->value<std::string>();
    }
  }

  void read_seed(const char* key, std::optional<std::uint64_t>& out) {
    if (const auto* node = find(key)) {
      const auto v = node->value<std::int64_t>();
      if (!node->is_integer() || !v || *v < 0) fail(key, "a nonnegative integer");
      out = static_cast<std::uint64_t>(*v);
    }
  }

  void read(const char* key, std::vector<double>& out) {
    if (const auto* node = find(key)) {
      const toml::array* arr = node->as_array();
      if (!arr) fail(key, "an array of numbers");
      out.clear();
      for (const auto& e : *arr) {
        if (!e.is_number()) fail(key, "an array of numbers");
        out.push_back(*e.value<double>());
      }
    }
  }

  /// Rejects keys that no read() asked for.
  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.contains(std::string(k.str()))) {
        throw ConfigError("unknown key '" + name_ + "." + std::string(k.str()) + "'");
      }
    }
  }

 private:
  const toml::node* find(const char* key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("'" + name_ + "." + key + "' must be " + what);
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

CorpusSource source_from_string(const std::string& s) {
  if (s == "synth") return CorpusSource::synth;
  if (s == "csedm") return CorpusSource::csedm;
  throw ConfigError("unknown corpus source '" + s + "' (expected synth or csedm)");
}

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("ni") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::ostringstream os;
  os << toml::value<std::string>(s);
  return os.str();
}

}  // namespace

SynthSpec CorpusSection::synth_spec() const {
  return SynthSpec{.n_students = n_students, .n_problems = n_problems, .bug_rate = bug_rate, .seed = seed.value_or(0)};
}

void RunConfig::require_corpus_seed() const {
  if (!corpus.seed) throw ConfigError("missing seed: set corpus.seed or pass --seed");
}

void RunConfig::require_trainer_seed() const {
  if (!trainer_seed_set) throw ConfigError("missing seed: set trainer.seed or pass --seed");
}

RunConfig parse_run_config(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error at line " << e.source().begin.line << ", column " << e.source().begin.column << ": "
       << e.description();
    throw ConfigError(os.str());
  }
  static const std::set<std::string> sections = {"corpus", "knowledge", "generator", "trainer", "metrics", "analysis"};
  for (const auto& [k, v] : root) {
    const std::string name(k.str());
    if (!sections.contains(name)) throw ConfigError("unknown section '" + name + "'");
    if (!v.is_table()) throw ConfigError("'" + name + "' must be a section");
  }

  RunConfig c;
  {
    Section s(root["corpus"].as_table(), "corpus");
    std::string source = "synth", delimiter(1, c.corpus.columns.delimiter), csv;
    s.read("source", source);
    c.corpus.source = source_from_string(source);
    s.read("n_students", c.corpus.n_students);
    s.read("n_problems", c.corpus.n_problems);
    s.read("bug_rate", c.corpus.bug_rate);
    s.read("csv", csv);
    c.corpus.csv = csv;
    s.read("student_column", c.corpus.columns.student_id);
    s.read("problem_column", c.corpus.columns.problem_id);
    s.read("timestamp_column", c.corpus.columns.timestamp);
    s.read("code_column", c.corpus.columns.code);
    s.read("prompt_column", c.corpus.columns.prompt);
    s.read("delimiter", delimiter);
    if (delimiter.size() != 1) throw ConfigError("'corpus.delimiter' must be a single character");
    c.corpus.columns.delimiter = delimiter[0];
    s.read("train_ratio", c.corpus.ratios.train);
    s.read("validation_ratio", c.corpus.ratios.validation);
    s.read("test_ratio", c.corpus.ratios.test);
    s.read_seed("seed", c.corpus.seed);
    s.finish();
    if (c.corpus.source == CorpusSource::csedm && c.corpus.csv.empty()) {
      throw ConfigError("'corpus.csv' is required when corpus.source is csedm");
    }
  }
  {
    Section s(root["knowledge"].as_table(), "knowledge");
    s.read("d_bar", c.trainer.knowledge.d_bar);
    s.read("d_cont", c.trainer.knowledge.d_cont);
    s.read("d_disc", c.trainer.knowledge.d_disc);
    s.read("k", c.trainer.knowledge.k);
    s.finish();
  }
  {
    Section s(root["generator"].as_table(), "generator");
    s.read("d_model", c.trainer.generator.d_model);
    s.read("n_layers", c.trainer.generator.n_layers);
    s.read("n_heads", c.trainer.generator.n_heads);
    s.read("max_len", c.trainer.generator.max_len);
    s.finish();
  }
  {
    Section s(root["trainer"].as_table(), "trainer");
    std::string kind = to_string(c.trainer.kind);
    s.read("model", kind);
    c.trainer.kind = model_kind_from_string(kind);
    s.read("epochs", c.trainer.epochs);
    s.read("batch_size", c.trainer.batch_size);
    s.read("lr_generator", c.trainer.lr_generator);
    s.read("lr_side", c.trainer.lr_side);
    s.read("weight_decay", c.trainer.weight_decay);
    s.read("warmup_fraction", c.trainer.warmup_fraction);
    s.read("grad_clip", c.trainer.grad_clip);
    s.read("lambda", c.trainer.lambda);
    s.read("temperature_start", c.trainer.temperature_start);
    s.read("temperature_end", c.trainer.temperature_end);
    std::optional<std::uint64_t> seed;
    s.read_seed("seed", seed);
    c.trainer_seed_set = seed.has_value();
    c.trainer.seed = seed.value_or(0);
    s.finish();
  }
  {
    Section s(root["metrics"].as_table(), "metrics");
    s.read("weight_ngram", c.metrics.ngram);
    s.read("weight_weighted_ngram", c.metrics.weighted_ngram);
    s.read("weight_ast", c.metrics.ast_match);
    s.read("weight_dataflow", c.metrics.dataflow_match);
    s.finish();
    c.metrics.validate();
  }
  {
    Section s(root["analysis"].as_table(), "analysis");
    s.read("student", c.analysis.student);
    s.read("problem", c.analysis.problem);
    s.read("factor", c.analysis.factor);
    s.read("cont_index", c.analysis.cont_index);
    s.read("continuous_values", c.analysis.continuous_values);
    s.finish();
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string RunConfig::to_toml() const {
  std::ostringstream os;
  os << "[corpus]\n"
     << "source = " << quoted(corpus.source == CorpusSource::synth ? "synth" : "csedm") << "\n"
     << "n_students = " << corpus.n_students << "\n"
     << "n_problems = " << corpus.n_problems << "\n"
     << "bug_rate = " << number(corpus.bug_rate) << "\n"
     << "csv = " << quoted(corpus.csv.string()) << "\n"
     << "student_column = " << quoted(corpus.columns.student_id) << "\n"
     << "problem_column = " << quoted(corpus.columns.problem_id) << "\n"
     << "timestamp_column = " << quoted(corpus.columns.timestamp) << "\n"
     << "code_column = " << quoted(corpus.columns.code) << "\n"
     << "prompt_column = " << quoted(corpus.columns.prompt) << "\n"
     << "delimiter = " << quoted(std::string(1, corpus.columns.delimiter)) << "\n"
     << "train_ratio = " << number(corpus.ratios.train) << "\n"
     << "validation_ratio = " << number(corpus.ratios.validation) << "\n"
     << "test_ratio = " << number(corpus.ratios.test) << "\n";
  if (corpus.seed) os << "seed = " << *corpus.seed << "\n";
  const auto& kc = trainer.knowledge;
  os << "\n[knowledge]\n"
     << "d_bar = " << kc.d_bar << "\nd_cont = " << kc.d_cont << "\nd_disc = " << kc.d_disc << "\nk = " << kc.k << "\n";
  const auto& gc = trainer.generator;
  os << "\n[generator]\n"
     << "d_model = " << gc.d_model << "\nn_layers = " << gc.n_layers << "\nn_heads = " << gc.n_heads
     << "\nmax_len = " << gc.max_len << "\n";
  os << "\n[trainer]\n"
     << "model = " << quoted(to_string(trainer.kind)) << "\n"
     << "epochs = " << trainer.epochs << "\n"
     << "batch_size = " << trainer.batch_size << "\n"
     << "lr_generator = " << number(trainer.lr_generator) << "\n"
     << "lr_side = " << number(trainer.lr_side) << "\n"
     << "weight_decay = " << number(trainer.weight_decay) << "\n"
     << "warmup_fraction = " << number(trainer.warmup_fraction) << "\n"
     << "grad_clip = " << number(trainer.grad_clip) << "\n"
     << "lambda = " << number(trainer.lambda) << "\n"
     << "temperature_start = " << number(trainer.temperature_start) << "\n"
     << "temperature_end = " << number(trainer.temperature_end) << "\n";
  if (trainer_seed_set) os << "seed = " << trainer.seed << "\n";
  os << "\n[metrics]\n"
     << "weight_ngram = " << number(metrics.ngram) << "\n"
     << "weight_weighted_ngram = " << number(metrics.weighted_ngram) << "\n"
     << "weight_ast = " << number(metrics.ast_match) << "\n"
     << "weight_dataflow = " << number(metrics.dataflow_match) << "\n";
  os << "\n[analysis]\n"
     << "student = " << quoted(analysis.student) << "\n"
     << "problem = " << quoted(analysis.problem) << "\n"
     << "factor = " << analysis.factor << "\n"
     << "cont_index = " << analysis.cont_index << "\n"
     << "continuous_values = [";
  for (std::size_t i = 0; i < analysis.continuous_values.size(); ++i) {
    os << (i ? ", " : "") << number(analysis.continuous_values[i]);
  }
  os << "]\n";
  return os.str();
}

}  // namespace infooirt
