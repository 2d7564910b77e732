#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "cli.hpp"

namespace fs = std::filesystem;
using infooirt::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Scratch directory holding a tiny-model configuration.
struct Workspace {
  fs::path root = fs::temp_directory_path() / "infooirt_cli_test";
  fs::path config = root / "tiny.toml";

  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(config) << R"([corpus]
n_students = 4
n_problems = 3
seed = 2

[knowledge]
d_bar = 2
d_cont = 1
d_disc = 3

[generator]
d_model = 16
n_layers = 1
n_heads = 2
max_len = 256

[trainer]
epochs = 1
batch_size = 4
lr_generator = 0.001
seed = 7
)";
  }
  ~Workspace() { fs::remove_all(root); }

  std::string dir(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"synth", "--no-such-flag"}).code == 2);
  const Result r = invoke({"eval"});
  CHECK(r.code == 2);
  CHECK(r.err.find("usage error") != std::string::npos);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("module errors exit with 1") {
  Workspace w;
  const Result r = invoke({"synth", "--run-dir", w.dir("a")});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing seed") != std::string::npos);
  CHECK(invoke({"ingest", "--seed", "1", "--csv", w.dir("none.csv"), "--run-dir", w.dir("b")}).code == 1);
  CHECK(invoke({"eval", "--checkpoint", w.dir("none.bin")}).code == 1);
  CHECK(invoke({"train", "--config", w.dir("none.toml"), "--seed", "1"}).code == 1);
}

TEST_CASE("synth writes the corpus, split and resolved config") {
  Workspace w;
  const Result r = invoke({"synth", "--config", w.config.string(), "--seed", "5", "--run-dir", w.dir("s")});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(w.root / "s" / "corpus"));
  const std::string cfg = slurp(w.root / "s" / "config.toml");
  CHECK(cfg.find("seed = 5") != std::string::npos);
  CHECK(cfg.find("n_students = 4") != std::string::npos);
}

TEST_CASE("ingest reads a submission table") {
  Workspace w;
  const Result r = invoke({"ingest", "--seed", "1", "--csv", std::string(INFOOIRT_FIXTURES_DIR) + "/filter_100.csv",
                           "--run-dir", w.dir("i")});
  CHECK(r.code == 0);
  CHECK(r.out.find("85") != std::string::npos);
  CHECK(fs::exists(w.root / "i" / "corpus"));
}

TEST_CASE("train, eval, sweep, recover, mi-curve and report") {
  Workspace w;
  const std::string cfg = w.config.string();
  REQUIRE(invoke({"train", "--config", cfg, "--run-dir", w.dir("t1")}).code == 0);
  REQUIRE(invoke({"train", "--config", cfg, "--run-dir", w.dir("t2")}).code == 0);
  const fs::path ck = w.root / "t1" / "checkpoint.bin";
  CHECK(slurp(ck) == slurp(w.root / "t2" / "checkpoint.bin"));
  CHECK(fs::exists(w.root / "t1" / "train_log.jsonl"));

  const Result ev = invoke({"eval", "--checkpoint", ck.string()});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("CodeBLEU") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(w.root / "t1" / "eval_test.json"));
  for (const char* key : {"model", "d_bar", "d_cont", "d_disc", "n", "test_loss", "codebleu", "dist_1", "examples"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }

  const Result sw = invoke({"sweep", "--checkpoint", ck.string(), "--student", "S0", "--problem", "P1", "--factor", "2"});
  REQUIRE(sw.code == 0);
  CHECK(fs::exists(w.root / "t1" / "sweep_z2_S0_P1.json"));
  CHECK(fs::exists(w.root / "t1" / "sweep_z2_S0_P1.md"));
  const Result sc = invoke({"sweep", "--checkpoint", ck.string(), "--student", "S0", "--problem", "P1", "--continuous",
                            "--values", "-2,0,2"});
  REQUIRE(sc.code == 0);
  CHECK(fs::exists(w.root / "t1" / "sweep_c0_S0_P1.json"));
  CHECK(invoke({"sweep", "--checkpoint", ck.string(), "--student", "S9", "--problem", "P1", "--factor", "0"}).code == 1);
  CHECK(invoke({"sweep", "--checkpoint", ck.string(), "--student", "S0", "--problem", "P1", "--factor", "7"}).code == 1);

  CHECK(invoke({"recover", "--checkpoint", ck.string()}).code == 0);
  CHECK(fs::exists(w.root / "t1" / "recovery.json"));

  const std::string log1 = (w.root / "t1" / "train_log.jsonl").string();
  const std::string log2 = (w.root / "t2" / "train_log.jsonl").string();
  CHECK(invoke({"mi-curve", "--log", log1, "--log", log2, "--out", w.dir("mi")}).code == 0);
  CHECK(slurp(w.root / "mi" / "mi_curve.svg").find("<svg") != std::string::npos);

  const Result rep = invoke({"report", "--run-dir", w.dir("t1")});
  REQUIRE(rep.code == 0);
  const std::string md = slurp(w.root / "t1" / "report.md");
  CHECK(md.find("CodeBLEU") != std::string::npos);
}
