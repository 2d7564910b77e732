#include "doctest.h"

#include <string>

#include "infooirt/config.hpp"
#include "infooirt/error.hpp"

using namespace infooirt;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("absent keys keep their defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.corpus.source == CorpusSource::synth);
  CHECK(c.corpus.n_students == 40);
  CHECK_FALSE(c.corpus.seed.has_value());
  CHECK_FALSE(c.trainer_seed_set);
  CHECK(c.trainer.kind == ModelKind::infooirt);
  CHECK(c.trainer.knowledge.d_disc == 10);
  CHECK(c.trainer.lambda == 0.1);
  CHECK(c.metrics.ngram == 0.25);
}

TEST_CASE("every section is read") {
  const RunConfig c = parse_run_config(R"(
[corpus]
source = "synth"
n_students = 12
n_problems = 6
bug_rate = 0.25
train_ratio = 0.6
validation_ratio = 0.2
test_ratio = 0.2
seed = 4

[knowledge]
d_bar = 64
d_cont = 0
d_disc = 3
k = 4

[generator]
d_model = 32
n_layers = 2
n_heads = 4
max_len = 128

[trainer]
model = "infooirt"
epochs = 7
batch_size = 2
lr_generator = 0.002
lr_side = 0.01
lambda = 0.5
temperature_start = 2.0
temperature_end = 0.25
seed = 9

[metrics]
weight_ngram = 0.4
weight_weighted_ngram = 0.2
weight_ast = 0.2
weight_dataflow = 0.2

[analysis]
student = "S1"
problem = "P2"
factor = 2
continuous_values = [-1.0, 0, 1.5]
)");
  CHECK(c.corpus.n_students == 12);
  CHECK(c.corpus.ratios.train == 0.6);
  CHECK(*c.corpus.seed == 4);
  CHECK(c.trainer.knowledge.d_bar == 64);
  CHECK(c.trainer.knowledge.k == 4);
  CHECK(c.trainer.generator.max_len == 128);
  CHECK(c.trainer.epochs == 7);
  CHECK(c.trainer.lambda == 0.5);
  CHECK(c.trainer.seed == 9);
  CHECK(c.trainer_seed_set);
  CHECK(c.metrics.ngram == 0.4);
  CHECK(c.analysis.student == "S1");
  CHECK(c.analysis.factor == 2);
  CHECK(c.analysis.continuous_values == std::vector<double>{-1.0, 0.0, 1.5});
  const SynthSpec s = c.corpus.synth_spec();
  CHECK(s.n_students == 12);
  CHECK(s.seed == 4);
}

TEST_CASE("unknown keys and sections are rejected by name") {
  CHECK(error_of("[trainer]\nlearning_rate = 0.1\n").find("trainer.learning_rate") != std::string::npos);
  CHECK(error_of("[optimizer]\nlr = 1\n").find("optimizer") != std::string::npos);
  CHECK(error_of("[trainer]\nepochs = \"ten\"\n").find("trainer.epochs") != std::string::npos);
  CHECK(error_of("[trainer]\nmodel = \"gpt\"\n").find("gpt") != std::string::npos);
  CHECK(error_of("[corpus]\nsource = \"csedm\"\n").find("corpus.csv") != std::string::npos);
  CHECK(error_of("[corpus]\ndelimiter = \";;\"\n").find("delimiter") != std::string::npos);
  CHECK(error_of("[corpus]\nseed = -1\n").find("corpus.seed") != std::string::npos);
  CHECK(error_of("[metrics]\nweight_ngram = -1.0\n") != "");
  // parse errors carry a position
  CHECK(error_of("[trainer\n").find("line 1") != std::string::npos);
}

TEST_CASE("seeds are mandatory where they are used") {
  const RunConfig c = parse_run_config("");
  CHECK_THROWS_WITH_AS(c.require_corpus_seed(), doctest::Contains("missing seed"), ConfigError);
  CHECK_THROWS_WITH_AS(c.require_trainer_seed(), doctest::Contains("missing seed"), ConfigError);
  const RunConfig d = parse_run_config("[corpus]\nseed = 0\n[trainer]\nseed = 0\n");
  CHECK_NOTHROW(d.require_corpus_seed());
  CHECK_NOTHROW(d.require_trainer_seed());
}

TEST_CASE("serialized configs parse back to the same values") {
  RunConfig c = parse_run_config("[corpus]\nseed = 3\ndelimiter = \";\"\n[trainer]\nseed = 8\nlambda = 0.0\nmodel = \"oirt\"\n"
                                 "[knowledge]\nd_cont = 0\nd_disc = 0\n[analysis]\ncontinuous_values = [1.0, 2.5]\n");
  c.corpus.columns.code = "Source \"code\"";
  const RunConfig back = parse_run_config(c.to_toml());
  CHECK(back.to_toml() == c.to_toml());
  CHECK(*back.corpus.seed == 3);
  CHECK(back.corpus.columns.delimiter == ';');
  CHECK(back.corpus.columns.code == "Source \"code\"");
  CHECK(back.trainer.kind == ModelKind::oirt);
  CHECK(back.trainer.lambda == 0.0);
  CHECK(back.trainer_seed_set);
  CHECK(back.analysis.continuous_values == std::vector<double>{1.0, 2.5});
}

TEST_CASE("missing config file") { CHECK_THROWS_AS(load_run_config("/nonexistent/run.toml"), ConfigError); }
