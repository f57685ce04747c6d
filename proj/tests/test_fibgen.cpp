#include <algorithm>
#include <set>

#include "doctest.h"

#include "fib/corpus.hpp"
#include "fib/fibgen.hpp"
#include "gen_oracle.hpp"
#include "test_util.hpp"

using namespace fib;
using namespace fib::gen;

namespace {

const text::Lexicon& shipped() {
  static const text::Lexicon lex = text::Lexicon::load(testutil::data_dir() + "/lexicon.tsv");
  return lex;
}

Corpus make_corpus(std::vector<std::pair<std::string, Split>> anns) {
  Corpus c;
  for (std::size_t i = 0; i < anns.size(); ++i) {
    Clip clip;
    clip.clip_id = "c" + std::to_string(i);
    clip.annotation = anns[i].first;
    clip.split = anns[i].second;
    c.clips.push_back(std::move(clip));
  }
  c.reindex();
  return c;
}

std::string fixture() { return testutil::data_dir() + "/fixtures/fixture200.jsonl"; }
std::string fixture_stoplist() { return testutil::data_dir() + "/fixtures/stoplist.txt"; }

}  // namespace

TEST_CASE("count_train_tokens counts the training split only") {
  auto c = make_corpus({{"a b", Split::train}, {"a", Split::train}, {"a a a", Split::val}});
  CHECK(count_train_tokens(c) == TokenCounts{{"a", 2}, {"b", 1}});
  CHECK(count_train_tokens(make_corpus({})).empty());
  CHECK(count_train_tokens(make_corpus({{"x y", Split::val}})).empty());
}

TEST_CASE("extract_candidates") {
  auto tagged = text::tag(text::tokenize_wordpunct("she shakes her head"), shipped());
  auto idx = extract_candidates(tagged, {});
  std::set<std::string> words;
  for (auto i : idx) words.insert(tagged[i].lower);
  CHECK(words.count("shakes"));
  CHECK(words.count("head"));
  CHECK_FALSE(words.count("she"));
  CHECK_FALSE(words.count("her"));
  CHECK(std::is_sorted(idx.begin(), idx.end()));

  std::vector<text::TaggedToken> others{{"the", "the", text::Tag::OTHER}, {".", ".", text::Tag::OTHER}};
  CHECK(extract_candidates(others, {}).empty());

  std::vector<text::TaggedToken> vn{{"runs", "runs", text::Tag::VERB}, {"Dog", "dog", text::Tag::NOUN}};
  CHECK(extract_candidates(vn, text::Stoplist({"dog"})) == std::vector<std::size_t>{0});
}

TEST_CASE("generate threshold is inclusive") {
  std::vector<std::pair<std::string, Split>> anns;
  for (int i = 0; i < 49; ++i) anns.push_back({"apple", Split::train});
  for (int i = 0; i < 50; ++i) anns.push_back({"banana", Split::train});
  auto ex = generate(make_corpus(anns), shipped(), {}, {.min_count = 50});
  CHECK(ex.size() == 50);
  for (const auto& e : ex) CHECK(e.answer == "banana");
  CHECK(generate(make_corpus({}), shipped(), {}).empty());
  CHECK_THROWS(generate(make_corpus(anns), shipped(), {}, {.min_count = 0}));
}

TEST_CASE("generated examples satisfy the example invariants") {
  auto corpus = load_corpus(fixture(), {.load_tracks = false});
  auto stop = text::Stoplist::load(fixture_stoplist());
  auto ex = generate(corpus, shipped(), stop, {.min_count = 5});
  REQUIRE_FALSE(ex.empty());
  const auto counts = count_train_tokens(corpus);
  std::string prev_clip;
  std::size_t prev_k = 0;
  std::size_t prev_pos = 0;
  for (const auto& e : ex) {
    REQUIRE(e.blank_index < e.tokens.size());
    CHECK(e.tokens[e.blank_index] == e.answer);
    CHECK(counts.at(e.answer) >= 5);
    CHECK_FALSE(stop.contains(e.answer));
    const auto r = e.render();
    std::size_t blanks = 0;
    for (auto p = r.find(kBlank); p != std::string::npos; p = r.find(kBlank, p + 1)) ++blanks;
    CHECK(blanks == 1);
    CHECK(e.qid == make_qid(e.clip_id, e.blank_index));
    const auto pos = *corpus.find(e.clip_id);
    if (e.clip_id == prev_clip) CHECK(e.blank_index > prev_k);
    else if (!prev_clip.empty()) CHECK(pos > prev_pos);
    prev_clip = e.clip_id, prev_k = e.blank_index, prev_pos = pos;
  }
  CHECK(generate(corpus, shipped(), stop, {.min_count = 5}) == ex);
  CHECK(make_qid("clipA", 7) == "clipA#007");
}

TEST_CASE("generate matches the brute-force oracle on the fixture") {
  auto corpus = load_corpus(fixture(), {.load_tracks = false});
  auto stop = text::Stoplist::load(fixture_stoplist());
  for (std::size_t mc : {1u, 5u, 20u, 50u}) {
    auto got = generate(corpus, shipped(), stop, {.min_count = mc});
    auto want = oracle::generate(fixture(), fixture_stoplist(), shipped(), mc);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(oracle::from_library(got[i]) == want[i]);
  }
}

TEST_CASE("dataset file round trip") {
  testutil::TempDir dir("dataset");
  auto corpus = load_corpus(fixture(), {.load_tracks = false});
  auto ex = generate(corpus, shipped(), {}, {.min_count = 10});
  save_dataset(ex, dir / "d.jsonl");
  CHECK(load_dataset(dir / "d.jsonl") == ex);
}

TEST_CASE("build_vocab thresholds and ordering") {
  // Train counts: a:4, b:3, c:3, d:1.
  auto corpus = make_corpus({{"a b c", Split::train}, {"a b c", Split::train}, {"a b c d", Split::train},
                             {"a", Split::train}, {"zz", Split::val}});
  std::vector<FibExample> ex{{"q0", "c2", {"a", "b", "c", "d"}, 3, "d", text::Tag::NOUN},
                             {"q1", "c4", {"zz"}, 0, "zz", text::Tag::NOUN}};
  auto v = build_vocab(ex, corpus, {.input_min = 4, .output_min = 3});
  CHECK(v.input.token(Vocabulary::kUnkId) == Vocabulary::kUnk);
  CHECK(v.input_id("a") != Vocabulary::kUnkId);
  CHECK(v.input_id("b") == Vocabulary::kUnkId);
  CHECK(v.input_id("never") == Vocabulary::kUnkId);
  // Output: a(4), b(3), c(3) by threshold, then answers d(1) and zz(0).
  CHECK(v.output.tokens() == std::vector<std::string>{"a", "b", "c", "d", "zz"});
  for (std::size_t i = 1; i < v.output.size(); ++i) {
    const auto c0 = v.output.counts()[i - 1], c1 = v.output.counts()[i];
    CHECK((c0 > c1 || (c0 == c1 && v.output.tokens()[i - 1] < v.output.tokens()[i])));
  }
  auto all = build_vocab(ex, corpus, {.input_min = 1, .output_min = 1});
  for (std::string t : {"a", "b", "c", "d"}) CHECK(all.input_id(t) != Vocabulary::kUnkId);
  CHECK(std::count(all.input.tokens().begin(), all.input.tokens().end(), std::string(Vocabulary::kUnk)) == 1);
  CHECK_THROWS(build_vocab(ex, corpus, {.input_min = 1, .output_min = 0}));
}

TEST_CASE("vocab file round trip") {
  testutil::TempDir dir("vocab");
  auto corpus = load_corpus(fixture(), {.load_tracks = false});
  auto ex = generate(corpus, shipped(), {}, {.min_count = 5});
  auto v = build_vocab(ex, corpus, {.input_min = 2, .output_min = 3});
  save_vocab(v, dir / "v.tsv");
  auto back = load_vocab(dir / "v.tsv");
  CHECK(back.input.tokens() == v.input.tokens());
  CHECK(back.input.counts() == v.input.counts());
  CHECK(back.output.tokens() == v.output.tokens());
  CHECK(back.output.counts() == v.output.counts());
  for (const auto& e : ex) CHECK(v.output_id(e.answer).has_value());
}

TEST_CASE("encode_question") {
  auto corpus = make_corpus({{"she opens the door", Split::train}, {"she opens the gate", Split::train},
                             {"she opens the rarething", Split::val}});
  std::vector<FibExample> ex{{"q", "c0", {"she", "opens", "the", "door"}, 1, "opens", text::Tag::VERB}};
  auto v = build_vocab(ex, corpus, {.input_min = 1, .output_min = 1});
  auto q = encode_question(ex[0], v);
  CHECK(q.blank_index == 1);
  CHECK(q.ids[1] == kBlankId);
  CHECK(std::count(q.ids.begin(), q.ids.end(), Vocabulary::kUnkId) == 0);
  CHECK(q.answer_id == *v.output_id("opens"));

  FibExample rare{"r", "c2", {"she", "opens", "the", "rarething"}, 1, "opens", text::Tag::VERB};
  auto qr = encode_question(rare, v);
  CHECK(std::count(qr.ids.begin(), qr.ids.end(), Vocabulary::kUnkId) == 1);
  CHECK(qr.ids[3] == Vocabulary::kUnkId);

  FibExample bad{"b", "c2", {"she", "opens", "the", "rarething"}, 3, "rarething", text::Tag::NOUN};
  CHECK_THROWS_AS(encode_question(bad, v), std::invalid_argument);
}

TEST_CASE("stats on small inputs") {
  auto empty = stats({}, make_corpus({}));
  CHECK(empty.total == 0);
  CHECK(empty.distinct_answers == 0);
  CHECK(empty.histogram.empty());
  CHECK(empty.top.empty());

  auto corpus = make_corpus({{"x", Split::train}});
  std::vector<FibExample> ex;
  for (int i = 0; i < 3; ++i) ex.push_back({"q" + std::to_string(i), "c0", {"a"}, 0, "a", text::Tag::NOUN});
  ex.push_back({"q9", "c0", {"b"}, 0, "b", text::Tag::VERB});
  auto s = stats(ex, corpus, {.top_k = 2});
  CHECK(s.total == 4);
  CHECK(s.distinct_answers == 2);
  std::set<std::size_t> at;
  for (const auto& b : s.histogram)
    if (b.answers) at.insert(b.lo);
  CHECK(at == std::set<std::size_t>{1, 3});
  REQUIRE(s.top.size() == 2);
  CHECK(s.top[0] == std::pair<std::string, std::size_t>{"a", 3});
  CHECK(s.top[1] == std::pair<std::string, std::size_t>{"b", 1});
}

TEST_CASE("stats invariants on the fixture") {
  auto corpus = load_corpus(fixture(), {.load_tracks = false});
  auto ex = generate(corpus, shipped(), {}, {.min_count = 1});
  auto s = stats(ex, corpus);
  std::size_t bins = 0;
  for (const auto& b : s.histogram) bins += b.answers;
  CHECK(bins == s.distinct_answers);
  CHECK(s.per_split[0] + s.per_split[1] + s.per_split[2] == s.total);
  CHECK(s.histogram.back().pooled);
  std::size_t pos = 0;
  for (const auto& [t, n] : s.pos_counts) pos += n;
  CHECK(pos == s.total);
  CHECK(s.questions_per_annotation == doctest::Approx(double(s.total) / corpus.clips.size()));
  CHECK_FALSE(stats_json(s).empty());
  CHECK(stats_table(s).find("#examples") != std::string::npos);
}
