#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "infooirt/analysis.hpp"
#include "infooirt/config.hpp"
#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/trainer.hpp"

namespace infooirt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kTrainLogFile = "train_log.jsonl";
constexpr const char* kConfigFile = "config.toml";
constexpr const char* kCorpusDir = "corpus";

struct Options {
  std::string config;
  std::string run_dir;
  std::string runs_root = "runs";
  std::optional<std::uint64_t> seed;

  std::string csv;
  std::string corpus;
  std::string checkpoint;
  std::string split = "test";
  std::string student;
  std::string problem;
  std::optional<int> factor;
  bool continuous = false;
  std::vector<double> values;
  int cont_index = 0;
  std::vector<std::string> logs;
  std::string out;
  std::string label;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) {
    c.corpus.seed = *o.seed;
    c.trainer.seed = *o.seed;
    c.trainer_seed_set = true;
  }
  return c;
}

/// runs/<YYYYmmdd-HHMMSS>-s<seed>, or the explicit --run-dir.
fs::path make_run_dir(const Options& o, std::uint64_t seed) {
  fs::path dir;
  if (!o.run_dir.empty()) {
    dir = o.run_dir;
  } else {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream name;
    name << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-s" << seed;
    dir = fs::path(o.runs_root) / name.str();
    for (int n = 2; fs::exists(dir); ++n) dir = fs::path(o.runs_root) / (name.str() + "-" + std::to_string(n));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir;
}

json ingestion_json(const IngestionReport& r) {
  return json{{"rows", r.rows},
              {"first_attempts", r.first_attempts},
              {"dropped_later_attempts", r.dropped_later_attempts},
              {"dropped_unparseable", r.dropped_unparseable},
              {"retained", r.retained},
              {"drop_fraction", r.drop_fraction}};
}

/// Builds the corpus named by the config, writing it and its split to `dir`.
std::pair<Corpus, CorpusSplit> materialize_corpus(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  c.require_corpus_seed();
  Corpus corpus;
  if (c.corpus.source == CorpusSource::synth) {
    corpus = synth_generate(c.corpus.synth_spec());
  } else {
    IngestedCorpus ing = ingest_csedm(c.corpus.csv, c.corpus.columns);
    corpus = std::move(ing.corpus);
    write_text(dir / "ingestion_report.json", ingestion_json(ing.report).dump(2) + "\n");
    out << "ingested " << ing.report.retained << " of " << ing.report.first_attempts << " first attempts ("
        << ing.report.dropped_unparseable << " unparseable)\n";
  }
  const CorpusSplit sp = split(corpus.submissions, c.corpus.ratios, *c.corpus.seed);
  write_corpus(dir / kCorpusDir, corpus);
  write_split(dir / kCorpusDir, corpus, sp);
  return {std::move(corpus), sp};
}

std::span<const std::size_t> part_of(const CorpusSplit& sp, const std::string& name) {
  if (name == "train") return sp.train;
  if (name == "validation") return sp.validation;
  if (name == "test") return sp.test;
  throw ConfigError("unknown split '" + name + "' (expected train, validation or test)");
}

fs::path corpus_dir_for(const Options& o) {
  if (!o.corpus.empty()) return o.corpus;
  return fs::path(o.checkpoint).parent_path() / kCorpusDir;
}

fs::path output_dir_for(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (!o.run_dir.empty()) return o.run_dir;
  const fs::path p = fs::path(o.checkpoint).parent_path();
  return p.empty() ? fs::path(".") : p;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

// ---- subcommands ------------------------------------------------------------

int cmd_synth(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  c.corpus.source = CorpusSource::synth;
  c.require_corpus_seed();
  const fs::path dir = make_run_dir(o, *c.corpus.seed);
  const auto [corpus, sp] = materialize_corpus(c, dir, out);
  write_text(dir / kConfigFile, c.to_toml());
  out << "wrote " << corpus.submissions.size() << " submissions from " << corpus.student_ids().size()
      << " students to " << (dir / kCorpusDir).string() << "\n";
  return kExitOk;
}

int cmd_ingest(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  c.corpus.source = CorpusSource::csedm;
  if (!o.csv.empty()) c.corpus.csv = o.csv;
  if (c.corpus.csv.empty()) throw ConfigError("missing required option --csv (or corpus.csv)");
  c.require_corpus_seed();
  const fs::path dir = make_run_dir(o, *c.corpus.seed);
  const auto [corpus, sp] = materialize_corpus(c, dir, out);
  write_text(dir / kConfigFile, c.to_toml());
  out << "wrote " << corpus.submissions.size() << " submissions to " << (dir / kCorpusDir).string() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig c = resolve_config(o);
  c.require_trainer_seed();
  const fs::path dir = make_run_dir(o, c.trainer.seed);
  Corpus corpus;
  CorpusSplit sp;
  if (!o.corpus.empty()) {
    corpus = read_corpus(o.corpus);
    sp = read_split(o.corpus, corpus);
    write_corpus(dir / kCorpusDir, corpus);
    write_split(dir / kCorpusDir, corpus, sp);
  } else {
    std::tie(corpus, sp) = materialize_corpus(c, dir, out);
  }
  write_text(dir / kConfigFile, c.to_toml());
  TrainResult r = train(c.trainer, corpus, sp, [&](const EpochRecord& e) {
    err << "epoch " << e.epoch << "  oirt " << std::fixed << std::setprecision(4) << e.train_oirt_mean << "  q_nll "
        << e.train_q_nll_mean << "  validation " << e.validation_oirt_mean << std::defaultfloat << "\n";
  });
  r.log.label = o.label.empty() ? to_string(c.trainer.kind) + " lambda=" + std::to_string(c.trainer.lambda) : o.label;
  r.best.save(dir / kCheckpointFile);
  r.log.write_jsonl(dir / kTrainLogFile);
  out << "best epoch " << r.best.epoch << " (validation " << r.best.validation_loss << "); run directory "
      << dir.string() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  const RunConfig c = resolve_config(o);
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const fs::path cdir = corpus_dir_for(o);
  const Corpus corpus = read_corpus(cdir);
  const CorpusSplit sp = read_split(cdir, corpus);
  const EvalReport rep = evaluate(ck, corpus, part_of(sp, o.split), c.metrics);
  const fs::path dir = output_dir_for(o);
  fs::create_directories(dir);
  write_text(dir / ("eval_" + o.split + ".json"), rep.to_json() + "\n");
  out << rep.to_table();
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  const RunConfig c = resolve_config(o);
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const std::string student = o.student.empty() ? c.analysis.student : o.student;
  const std::string problem = o.problem.empty() ? c.analysis.problem : o.problem;
  require(student, "--student");
  require(problem, "--problem");
  std::optional<Corpus> corpus;
  const fs::path cdir = corpus_dir_for(o);
  if (fs::exists(cdir / "problems.jsonl")) corpus = read_corpus(cdir);
  const Corpus* cp = corpus ? &*corpus : nullptr;

  SweepResult r;
  std::string stem;
  if (o.continuous) {
    std::vector<double> values = o.values.empty() ? c.analysis.continuous_values : o.values;
    if (values.empty()) values = kDefaultContinuousGrid;
    const int index = o.cont_index;
    r = sweep_continuous(ck, student, problem, values, index, cp);
    stem = "sweep_c" + std::to_string(index) + "_" + student + "_" + problem;
  } else {
    const int factor = o.factor.value_or(c.analysis.factor);
    r = sweep_discrete(ck, student, problem, factor, cp);
    stem = "sweep_z" + std::to_string(factor) + "_" + student + "_" + problem;
  }
  const fs::path dir = output_dir_for(o);
  fs::create_directories(dir);
  write_text(dir / (stem + ".json"), r.to_json() + "\n");
  write_text(dir / (stem + ".md"), r.to_markdown());
  out << r.to_markdown();
  return kExitOk;
}

int cmd_mi_curve(const Options& o, std::ostream& out) {
  if (o.logs.empty()) throw ConfigError("missing required option --log");
  std::vector<TrainLog> logs;
  for (const auto& p : o.logs) logs.push_back(TrainLog::read_jsonl(p));
  const MiCurve curve = mi_curve(logs);
  const fs::path dir = o.out.empty() ? (o.run_dir.empty() ? fs::path(o.logs.front()).parent_path() : fs::path(o.run_dir))
                                     : fs::path(o.out);
  if (!dir.empty()) fs::create_directories(dir);
  write_text(dir / "mi_curve.txt", curve.to_table());
  write_text(dir / "mi_curve.svg", curve.to_svg());
  out << curve.to_table();
  return kExitOk;
}

int cmd_recover(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint");
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const Corpus corpus = read_corpus(corpus_dir_for(o));
  if (corpus.profiles.empty()) throw ConfigError("corpus has no ground-truth profiles (synthetic corpora only)");
  const RecoveryReport r = factor_recovery(ck, corpus.profiles);
  const fs::path dir = output_dir_for(o);
  fs::create_directories(dir);
  write_text(dir / "recovery.json", r.to_json() + "\n");
  out << r.to_table();
  return kExitOk;
}

/// Markdown summary of one training run: evaluation, recovery (synthetic
/// corpora), one discrete and one continuous sweep, and the MI curve.
int cmd_report(const Options& o, std::ostream& out) {
  require(o.run_dir, "--run-dir");
  const fs::path dir = o.run_dir;
  Options eo = o;
  eo.checkpoint = (dir / kCheckpointFile).string();
  const RunConfig c = fs::exists(dir / kConfigFile) && o.config.empty() ? load_run_config(dir / kConfigFile)
                                                                        : resolve_config(o);
  const Checkpoint ck = Checkpoint::load(eo.checkpoint);
  const Corpus corpus = read_corpus(dir / kCorpusDir);
  const CorpusSplit sp = read_split(dir / kCorpusDir, corpus);

  std::ostringstream md;
  md << "# Run report: " << dir.filename().string() << "\n\n";
  md << "Model " << to_string(ck.config.kind) << ", best epoch " << ck.epoch << ", validation loss "
     << ck.validation_loss << ".\n\n";
  const EvalReport ev = evaluate(ck, corpus, part_of(sp, o.split), c.metrics);
  write_text(dir / ("eval_" + o.split + ".json"), ev.to_json() + "\n");
  md << "## Evaluation (" << o.split << " split)\n\n" << ev.to_table() << "\n";

  int factor = o.factor.value_or(c.analysis.factor);
  if (!corpus.profiles.empty() && ck.knowledge_config().d_disc > 0) {
    const RecoveryReport rec = factor_recovery(ck, corpus.profiles);
    write_text(dir / "recovery.json", rec.to_json() + "\n");
    md << "## Factor recovery\n\n```\n" << rec.to_table() << "```\n\n";
    if (!o.factor && rec.assignment[0] >= 0) factor = rec.assignment[0];
  }

  std::string student = o.student.empty() ? c.analysis.student : o.student;
  std::string problem = o.problem.empty() ? c.analysis.problem : o.problem;
  if (student.empty()) student = ck.knowledge.students().front();
  if (problem.empty()) problem = ck.problems.front().problem_id;
  if (ck.knowledge_config().d_disc > 0) {
    md << "## Discrete sweep\n\n" << sweep_discrete(ck, student, problem, factor, &corpus).to_markdown();
  }
  if (ck.knowledge_config().d_cont > 0) {
    const std::vector<double>& values =
        c.analysis.continuous_values.empty() ? kDefaultContinuousGrid : c.analysis.continuous_values;
    md << "## Continuous sweep\n\n" << sweep_continuous(ck, student, problem, values, 0, &corpus).to_markdown();
  }

  std::vector<TrainLog> logs;
  if (fs::exists(dir / kTrainLogFile)) logs.push_back(TrainLog::read_jsonl(dir / kTrainLogFile));
  for (const auto& p : o.logs) logs.push_back(TrainLog::read_jsonl(p));
  if (!logs.empty()) {
    const MiCurve curve = mi_curve(logs);
    write_text(dir / "mi_curve.svg", curve.to_svg());
    md << "## Q negative log-likelihood\n\n![MI curve](mi_curve.svg)\n\n```\n" << curve.to_table() << "```\n";
  }
  write_text(dir / "report.md", md.str());
  out << "wrote " << (dir / "report.md").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Student code generation with interpretable knowledge states", "infooirt"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML run configuration");
    sub->add_option("--run-dir", o.run_dir, "Output directory (default runs/<timestamp>-s<seed>)");
    sub->add_option("--runs-root", o.runs_root, "Parent of generated run directories");
    sub->add_option("--seed", o.seed, "Overrides corpus.seed and trainer.seed");
  };
  auto with_checkpoint = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    sub->add_option("--corpus", o.corpus, "Corpus directory (default: next to the checkpoint)");
    sub->add_option("--out", o.out, "Output directory (default: the checkpoint's directory)");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus and its split");
  common(synth);
  CLI::App* ingest = app.add_subcommand("ingest", "Ingest a CSEDM-style submission log");
  common(ingest);
  ingest->add_option("--csv", o.csv, "Submission table");
  CLI::App* trn = app.add_subcommand("train", "Train a model");
  common(trn);
  trn->add_option("--corpus", o.corpus, "Existing corpus directory with split files");
  trn->add_option("--label", o.label, "Series label stored in the training log");
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  common(ev);
  with_checkpoint(ev);
  ev->add_option("--split", o.split, "train, validation or test")->check(CLI::IsMember({"train", "validation", "test"}));
  CLI::App* sw = app.add_subcommand("sweep", "Vary one latent factor and diff the generations");
  common(sw);
  with_checkpoint(sw);
  sw->add_option("--student", o.student, "Student id");
  sw->add_option("--problem", o.problem, "Problem id");
  auto* factor_opt = sw->add_option("--factor", o.factor, "Discrete factor index");
  auto* cont_opt = sw->add_flag("--continuous", o.continuous, "Sweep the continuous factor instead");
  factor_opt->excludes(cont_opt);
  sw->add_option("--values", o.values, "Continuous values (default grid when omitted)")->delimiter(',');
  sw->add_option("--cont-index", o.cont_index, "Continuous factor index");
  CLI::App* mi = app.add_subcommand("mi-curve", "Plot Q negative log-likelihood per epoch");
  common(mi);
  mi->add_option("--log", o.logs, "Training log (repeatable)");
  mi->add_option("--out", o.out, "Output directory");
  CLI::App* rec = app.add_subcommand("recover", "Match learned factors to ground-truth style attributes");
  common(rec);
  with_checkpoint(rec);
  CLI::App* rep = app.add_subcommand("report", "Write a markdown report for a training run");
  common(rep);
  rep->add_option("--split", o.split, "Split to evaluate")->check(CLI::IsMember({"train", "validation", "test"}));
  rep->add_option("--student", o.student, "Student for the sweeps");
  rep->add_option("--problem", o.problem, "Problem for the sweeps");
  rep->add_option("--factor", o.factor, "Discrete factor to sweep (default: matched to indentation)");
  rep->add_option("--log", o.logs, "Additional training logs for the MI curve");

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("infooirt");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    for (const CLI::App* sub : app.get_subcommands()) {
      err << sub->help();
      return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (trn->parsed()) return cmd_train(o, out, err);
    if (ev->parsed()) return cmd_eval(o, out);
    if (sw->parsed()) return cmd_sweep(o, out);
    if (mi->parsed()) return cmd_mi_curve(o, out);
    if (rec->parsed()) return cmd_recover(o, out);
    if (rep->parsed()) return cmd_report(o, out);
  } catch (const IngestionError& e) {
    err << "ingestion error: " << e.what() << "\n";
    return kExitModuleError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitModuleError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitModuleError;
  }
  return kExitUsage;
}

}  // namespace infooirt::cli
