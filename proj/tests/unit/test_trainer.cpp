#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/trainer.hpp"

using namespace infooirt;
namespace fs = std::filesystem;

namespace {

const Corpus& fixture_corpus() {
  static const Corpus c = synth_generate(SynthSpec{.n_students = 5, .n_problems = 4, .bug_rate = 0.5, .seed = 3});
  return c;
}

const CorpusSplit& fixture_split() {
  static const CorpusSplit s = split(fixture_corpus().submissions, {}, 3);
  return s;
}

TrainConfig tiny(ModelKind kind = ModelKind::infooirt) {
  TrainConfig c;
  c.kind = kind;
  c.epochs = 2;
  c.batch_size = 4;
  c.lr_generator = 1e-3;
  c.lr_side = 1e-2;
  c.knowledge = kind == ModelKind::oirt ? KnowledgeConfig{.d_bar = 3, .d_cont = 0, .d_disc = 0, .k = 2}
                                        : KnowledgeConfig{.d_bar = 2, .d_cont = 1, .d_disc = 2, .k = 2};
  c.generator = GeneratorConfig{.d_model = 16, .n_layers = 1, .n_heads = 2, .max_len = 256};
  c.seed = 5;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("infooirt_trainer_" + name); }

}  // namespace

TEST_CASE("two epochs on a small corpus produce a finite log") {
  REQUIRE(fixture_corpus().submissions.size() == 20);
  int calls = 0;
  const TrainResult r = train(tiny(), fixture_corpus(), fixture_split(), [&](const EpochRecord&) { ++calls; });
  CHECK(calls == 2);
  REQUIRE(r.log.epochs.size() == 2);
  for (const auto& e : r.log.epochs) {
    CHECK(std::isfinite(e.train_oirt_mean));
    CHECK(std::isfinite(e.train_q_nll_mean));
    CHECK(std::isfinite(e.validation_oirt_mean));
    CHECK(e.factor_entropies.size() == 2);
  }
  // the recorded temperature is the one used by the epoch's last step
  CHECK(r.log.epochs.back().temperature == doctest::Approx(0.5));
  // 16 training submissions in batches of 4
  CHECK(r.log.step_losses.size() == 8);
  CHECK(r.best.q.has_value());
}

TEST_CASE("the checkpoint kept has the lowest validation loss") {
  TrainConfig c = tiny();
  c.epochs = 4;
  const TrainResult r = train(c, fixture_corpus(), fixture_split());
  double best = INFINITY;
  int best_epoch = 0;
  for (const auto& e : r.log.epochs) {
    if (e.validation_oirt_mean < best) {
      best = e.validation_oirt_mean;
      best_epoch = e.epoch;
    }
  }
  CHECK(r.best.epoch == best_epoch);
  CHECK(r.best.validation_loss == best);
  CHECK(std::abs(mean_token_nll(r.best, fixture_corpus(), fixture_split().validation) - best) < 1e-9);
}

TEST_CASE("without factors and with lambda zero the objective reduces to the plain model") {
  TrainConfig info = tiny();
  info.knowledge = KnowledgeConfig{.d_bar = 3, .d_cont = 0, .d_disc = 0, .k = 2};
  info.lambda = 0.0;
  const TrainResult a = train(info, fixture_corpus(), fixture_split());
  const TrainResult b = train(tiny(ModelKind::oirt), fixture_corpus(), fixture_split());
  REQUIRE(a.log.step_losses.size() == b.log.step_losses.size());
  for (std::size_t i = 0; i < a.log.step_losses.size(); ++i) {
    CHECK(std::abs(a.log.step_losses[i] - b.log.step_losses[i]) < 1e-6);
  }
  CHECK_FALSE(b.best.q.has_value());
  TrainConfig bad = tiny(ModelKind::oirt);
  bad.knowledge.d_disc = 2;
  CHECK_THROWS_AS(train(bad, fixture_corpus(), fixture_split()), ConfigError);
}

TEST_CASE("checkpoints round-trip bit for bit") {
  const TrainResult r = train(tiny(), fixture_corpus(), fixture_split());
  const fs::path p1 = temp_path("a.bin"), p2 = temp_path("b.bin");
  r.best.save(p1);
  const Checkpoint back = Checkpoint::load(p1);
  back.save(p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(back.vocab == r.best.vocab);
  CHECK(back.epoch == r.best.epoch);
  const auto pa = r.best.parameters(), pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);

  std::ofstream(p2, std::ios::binary) << "not a checkpoint";
  CHECK_THROWS_AS(Checkpoint::load(p2), IoError);
  const std::string bytes = slurp(p1);
  std::ofstream(p2, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(Checkpoint::load(p2), IoError);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("training is deterministic in the seed") {
  const TrainResult a = train(tiny(), fixture_corpus(), fixture_split());
  const TrainResult b = train(tiny(), fixture_corpus(), fixture_split());
  CHECK(a.log.step_losses == b.log.step_losses);
  const fs::path p1 = temp_path("d1.bin"), p2 = temp_path("d2.bin");
  a.best.save(p1);
  b.best.save(p2);
  CHECK(slurp(p1) == slurp(p2));
  TrainConfig other = tiny();
  other.seed = 6;
  CHECK(train(other, fixture_corpus(), fixture_split()).log.step_losses != a.log.step_losses);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("training log round trip") {
  const TrainResult r = train(tiny(), fixture_corpus(), fixture_split());
  const fs::path p = temp_path("log.jsonl");
  r.log.write_jsonl(p);
  const TrainLog back = TrainLog::read_jsonl(p);
  CHECK(back.label == r.log.label);
  REQUIRE(back.epochs.size() == r.log.epochs.size());
  CHECK(back.epochs[1].train_q_nll_mean == r.log.epochs[1].train_q_nll_mean);
  CHECK(back.epochs[1].factor_entropies == r.log.epochs[1].factor_entropies);
  fs::remove(p);
}

TEST_CASE("a small split can be memorized") {
  const Corpus& c = fixture_corpus();
  CorpusSplit s;
  s.train = {0, 1, 2, 3, 4};
  s.validation = s.train;
  s.test = s.train;
  TrainConfig cfg = tiny(ModelKind::oirt);
  cfg.epochs = 400;
  cfg.batch_size = 5;
  cfg.lr_generator = 5e-3;
  cfg.generator.d_model = 32;
  cfg.generator.n_layers = 2;
  cfg.weight_decay = 0.0;
  const TrainResult r = train(cfg, c, s);
  const EvalReport rep = evaluate(r.best, c, s.test);
  CHECK(rep.n == static_cast<long>(s.test.size()));
  CHECK(rep.codebleu.total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("evaluation errors") {
  const TrainResult r = train(tiny(), fixture_corpus(), fixture_split());
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(evaluate(r.best, fixture_corpus(), none), ConfigError);
  Corpus stranger = fixture_corpus();
  stranger.submissions[0].student_id = "nobody";
  const std::vector<std::size_t> first = {0};
  CHECK_THROWS_AS(evaluate(r.best, stranger, first), UnknownEntityError);
  CorpusSplit empty = fixture_split();
  empty.train.clear();
  CHECK_THROWS_AS(train(tiny(), fixture_corpus(), empty), ConfigError);
  empty = fixture_split();
  empty.validation.clear();
  CHECK_THROWS_AS(train(tiny(), fixture_corpus(), empty), ConfigError);
}

TEST_CASE("evaluation report rendering") {
  const TrainResult r = train(tiny(), fixture_corpus(), fixture_split());
  const EvalReport rep = evaluate(r.best, fixture_corpus(), fixture_split().test);
  CHECK(rep.model == "infooirt");
  CHECK(rep.d_disc == 2);
  CHECK(rep.examples.size() == fixture_split().test.size());
  CHECK(rep.codebleu.total >= 0.0);
  CHECK(rep.codebleu.total <= 1.0);
  const std::string table = rep.to_table();
  CHECK(table.find("CodeBLEU") != std::string::npos);
  CHECK(table.find("InfoOIRT") != std::string::npos);
  CHECK(rep.to_json().find("\"codebleu\"") != std::string::npos);
}

TEST_CASE("model kind names") {
  CHECK(to_string(ModelKind::oirt) == "oirt");
  CHECK(model_kind_from_string("infooirt") == ModelKind::infooirt);
  CHECK_THROWS_AS(model_kind_from_string("gpt"), ConfigError);
  TrainConfig c = tiny();
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
