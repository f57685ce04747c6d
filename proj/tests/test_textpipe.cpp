#include <algorithm>

#include "doctest.h"

#include "fib/rng.hpp"
#include "fib/textpipe.hpp"
#include "test_util.hpp"

using namespace fib;
using namespace fib::text;

namespace {

const Lexicon& shipped() {
  static const Lexicon lex = Lexicon::load(testutil::data_dir() + "/lexicon.tsv");
  return lex;
}

}  // namespace

TEST_CASE("wordpunct tokenization examples") {
  using V = std::vector<std::string>;
  CHECK(tokenize_wordpunct("She shakes her head.") == V{"she", "shakes", "her", "head", "."});
  CHECK(tokenize_wordpunct("").empty());
  CHECK(tokenize_wordpunct("don't stop") == V{"don", "'", "t", "stop"});
  CHECK(tokenize_wordpunct("Wait...!? ok_2") == V{"wait", "...!?", "ok_2"});
  CHECK(tokenize_wordpunct("  \t\n ").empty());
  CHECK(split_wordpunct("He RUNS") == V{"He", "RUNS"});
}

TEST_CASE("wordpunct tokens preserve the non-space characters") {
  Rng rng(8);
  const std::string alphabet = "abcXYZ019_ .,'!?-\t\"()";
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    const auto len = rng.uniform_int(40);
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.uniform_int(alphabet.size())];
    std::string joined;
    for (const auto& t : tokenize_wordpunct(s)) {
      CHECK_FALSE(t.empty());
      joined += t;
    }
    std::string expect;
    for (char c : s)
      if (c != ' ' && c != '\t') expect += c;
    CHECK(joined == to_lower(expect));
  }
}

TEST_CASE("shipped lexicon tags") {
  auto tags = tag({"she", "shakes", "her", "head"}, shipped());
  REQUIRE(tags.size() == 4);
  CHECK(tags[0].tag == Tag::OTHER);
  CHECK(tags[1].tag == Tag::VERB);
  CHECK(tags[2].tag == Tag::OTHER);
  CHECK(tags[3].tag == Tag::NOUN);
  CHECK(tag({}, shipped()).empty());
  CHECK_FALSE(shipped().lookup("quickly").has_value());
  CHECK(tag_word("quickly", shipped()) == Tag::ADV);
  CHECK(shipped().size() > 2000);
}

TEST_CASE("suffix rules and defaults on an empty lexicon") {
  Lexicon lex;
  CHECK(tag_word("slowly", lex) == Tag::ADV);
  CHECK(tag_word("jumping", lex) == Tag::VERB);
  CHECK(tag_word("walked", lex) == Tag::VERB);
  CHECK(tag_word("famous", lex) == Tag::ADJ);
  CHECK(tag_word("hopeful", lex) == Tag::ADJ);
  CHECK(tag_word("massive", lex) == Tag::ADJ);
  CHECK(tag_word("capable", lex) == Tag::ADJ);
  CHECK(tag_word("station", lex) == Tag::NOUN);
  CHECK(tag_word("darkness", lex) == Tag::NOUN);
  CHECK(tag_word("moment", lex) == Tag::NOUN);
  CHECK(tag_word("zorb", lex) == Tag::NOUN);
  CHECK(tag_word(".", lex) == Tag::OTHER);
  CHECK(tag_word("42", lex) == Tag::OTHER);
  lex.add("run", Tag::VERB);
  CHECK(tag_word("runs", lex) == Tag::VERB);
  // Lexicon lookup wins over the suffix rules.
  lex.add("only", Tag::ADJ);
  CHECK(tag_word("only", lex) == Tag::ADJ);
}

TEST_CASE("tagging is pure and preserves length") {
  Rng rng(3);
  const std::vector<std::string> words{"the", "door", "opens", "slowly", ",", "she", "smiles", "x1"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> toks;
    const auto n = rng.uniform_int(12);
    for (std::size_t i = 0; i < n; ++i) toks.push_back(words[rng.uniform_int(words.size())]);
    auto a = tag(toks, shipped());
    auto b = tag(toks, shipped());
    CHECK(a.size() == toks.size());
    CHECK(a == b);
    for (const auto& t : a) CHECK(t.lower == to_lower(t.surface));
  }
}

TEST_CASE("tagged pairs") {
  auto t = parse_tagged_pair("Head/NOUN");
  CHECK(t.surface == "Head");
  CHECK(t.lower == "head");
  CHECK(t.tag == Tag::NOUN);
  CHECK(parse_tagged_pair("and/or/OTHER").surface == "and/or");
  CHECK_THROWS(parse_tagged_pair("head"));
  CHECK_THROWS(parse_tagged_pair("head/NN"));
}

TEST_CASE("stoplist loading") {
  testutil::TempDir dir("stop");
  testutil::spit(dir / "a.txt", "her\nthe\n");
  CHECK(Stoplist::load(dir / "a.txt").entries() == std::unordered_set<std::string>{"her", "the"});
  testutil::spit(dir / "b.txt", "");
  CHECK(Stoplist::load(dir / "b.txt").size() == 0);
  testutil::spit(dir / "c.txt", "Her\nher\n# comment\n\n");
  auto s = Stoplist::load(dir / "c.txt");
  CHECK(s.size() == 1);
  CHECK(s.contains("her"));
  CHECK_FALSE(s.contains("Her"));
  CHECK_THROWS(Stoplist::load(dir / "missing.txt"));
}
