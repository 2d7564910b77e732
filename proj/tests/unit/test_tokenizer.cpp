#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "infooirt/corpus.hpp"
#include "infooirt/error.hpp"
#include "infooirt/tokenizer.hpp"

using namespace infooirt;

TEST_CASE("vocabulary holds every token plus the five specials") {
  const std::vector<std::string> texts = {"a b", "b c"};
  const Vocabulary v = Vocabulary::build(texts);
  CHECK(v.size() == 8);
  for (const char* t : {"a", "b", "c"}) CHECK(v.id_of(t) != Vocabulary::kUnk);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kSep) == "<sep>");
  // frequency first (b twice), then lexicographic
  CHECK(v.id_of("b") == 5);
  CHECK(v.id_of("a") == 6);
  CHECK(v.id_of("c") == 7);
}

TEST_CASE("identical corpora give identical ids") {
  const std::vector<std::string> texts = {"x = y ;", "return x ;"};
  CHECK(Vocabulary::build(texts) == Vocabulary::build(texts));
}

TEST_CASE("an empty corpus is an error") {
  const std::vector<std::string> empty = {""};
  CHECK_THROWS_AS(Vocabulary::build(empty), ConfigError);
}

TEST_CASE("round trip of canonical text") {
  const std::string text = "if ( x ) { return 0 ; }";
  const std::vector<std::string> texts = {text};
  const Vocabulary v = Vocabulary::build(texts);
  CHECK(v.decode(v.encode(text)) == text);
}

TEST_CASE("indentation and newlines are explicit tokens") {
  const auto toks = tokenize("if (x) {\n    return 0;\n}");
  const std::vector<std::string> expected = {"if", "(", "x", ")", "{", "<NL>", "<INDENT>", "return", "0", ";", "<NL>", "}"};
  CHECK(toks == expected);
  CHECK(detokenize(toks) == "if ( x ) {\n    return 0 ;\n}");
  const auto tab = tokenize("\treturn 0;");
  CHECK(tab.front() == "<INDENT>");
}

TEST_CASE("unknown tokens map to UNK and bad ids are rejected") {
  const std::vector<std::string> texts = {"a b"};
  const Vocabulary v = Vocabulary::build(texts);
  CHECK(v.encode("zzz") == std::vector<TokenId>{Vocabulary::kUnk});
  const std::vector<TokenId> bad = {static_cast<TokenId>(v.size())};
  CHECK_THROWS_AS(v.decode(bad), ConfigError);
  const std::vector<TokenId> neg = {-1};
  CHECK_THROWS_AS(v.decode(neg), ConfigError);
}

TEST_CASE("synthetic corpus round-trips through the vocabulary") {
  const Corpus c = synth_generate(SynthSpec{.n_students = 10, .n_problems = 12, .bug_rate = 0.5, .seed = 2});
  std::vector<std::string> texts;
  for (const auto& s : c.submissions) texts.push_back(s.code);
  const Vocabulary v = Vocabulary::build(texts);
  for (const auto& s : c.submissions) {
    CHECK(v.decode(v.encode(s.code)) == detokenize(tokenize(s.code)));
    // synthetic code is already canonical
    CHECK(v.decode(v.encode(s.code)) == s.code);
  }
}

TEST_CASE("vocabulary file is one token per line") {
  const std::vector<std::string> texts = {"a b b"};
  const Vocabulary v = Vocabulary::build(texts);
  const auto path = std::filesystem::temp_directory_path() / "infooirt_vocab_test.txt";
  v.save(path);
  CHECK(Vocabulary::load(path) == v);
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    CHECK(line == v.token(n));
    ++n;
  }
  CHECK(n == v.size());
  std::filesystem::remove(path);
}
