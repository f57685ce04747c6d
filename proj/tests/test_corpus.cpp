#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"

#include "fib/corpus.hpp"
#include "fib/rng.hpp"
#include "test_util.hpp"

using namespace fib;
using testutil::TempDir;

TEST_CASE("feature track round trip is bit exact") {
  TempDir dir("fibf");
  Rng rng(1);
  for (int trial = 0; trial < 25; ++trial) {
    FeatureTrack t;
    t.timesteps = 1 + static_cast<std::uint32_t>(rng.uniform_int(40));
    t.dim = 1 + static_cast<std::uint32_t>(rng.uniform_int(30));
    t.values.resize(std::size_t(t.timesteps) * t.dim);
    for (auto& v : t.values) v = static_cast<float>(rng.normal() * std::pow(10.0, rng.uniform(-30, 30)));
    t.values[0] = -0.0f;
    t.values.back() = std::numeric_limits<float>::denorm_min();
    write_feature_track(t, dir / "t.fibf");
    auto back = read_feature_track(dir / "t.fibf");
    CHECK(back.timesteps == t.timesteps);
    CHECK(back.dim == t.dim);
    REQUIRE(back.values.size() == t.values.size());
    CHECK(std::memcmp(back.values.data(), t.values.data(), t.values.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("feature track file layout") {
  TempDir dir("fibf_layout");
  FeatureTrack t{1, 1, {0.0f}};
  write_feature_track(t, dir / "one.fibf");
  auto bytes = testutil::slurp(dir / "one.fibf");
  CHECK(bytes.size() == 20);
  CHECK(bytes.substr(0, 4) == "FIBF");
  CHECK(bytes[4] == 1);

  auto bad = bytes;
  bad.replace(0, 4, "XXXX");
  testutil::spit(dir / "bad.fibf", bad);
  CHECK_THROWS_WITH_AS(read_feature_track(dir / "bad.fibf"), doctest::Contains("magic"), DataError);

  // Header T=2, D=3 with a 20-byte payload.
  std::string hdr = bytes.substr(0, 8);
  hdr += std::string("\x02\0\0\0", 4) + std::string("\x03\0\0\0", 4) + std::string(20, '\0');
  testutil::spit(dir / "short.fibf", hdr);
  CHECK_THROWS_WITH_AS(read_feature_track(dir / "short.fibf"), doctest::Contains("24"), DataError);

  auto v2 = bytes;
  v2[4] = 2;
  testutil::spit(dir / "v2.fibf", v2);
  CHECK_THROWS_WITH_AS(read_feature_track(dir / "v2.fibf"), doctest::Contains("version"), DataError);
}

TEST_CASE("non-finite values are rejected on write and read") {
  TempDir dir("fibf_nan");
  FeatureTrack t{1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}};
  CHECK_THROWS_AS(write_feature_track(t, dir / "nan.fibf"), DataError);
  CHECK_FALSE(std::filesystem::exists(dir / "nan.fibf"));
  FeatureTrack ok{1, 2, {1.0f, 2.0f}};
  write_feature_track(ok, dir / "ok.fibf");
  auto bytes = testutil::slurp(dir / "ok.fibf");
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(bytes.data() + 16, &inf, 4);
  testutil::spit(dir / "inf.fibf", bytes);
  CHECK_THROWS_AS(read_feature_track(dir / "inf.fibf"), DataError);
}

TEST_CASE("load_corpus basics and errors") {
  TempDir dir("corpus");
  testutil::spit(dir / "three.jsonl",
                 R"({"clip_id":"a","split":"train","annotation":"She shakes her head."}
{"clip_id":"b","split":"val","annotation":"He runs.","duration_s":2.5}
{"clip_id":"c","split":"test","annotation":["She/OTHER","smiles/VERB"]}
)");
  auto c = load_corpus(dir / "three.jsonl");
  REQUIRE(c.clips.size() == 3);
  CHECK(c.clips[0].clip_id == "a");
  CHECK(c.clips[1].split == Split::val);
  CHECK(c.clips[1].duration_s == doctest::Approx(2.5));
  REQUIRE(c.clips[2].pretagged.has_value());
  CHECK(c.clips[2].pretagged->at(1).tag == text::Tag::VERB);
  CHECK(c.count(Split::train) + c.count(Split::val) + c.count(Split::test) == c.clips.size());
  CHECK(c.find("b") == 1u);
  CHECK_FALSE(c.find("zz").has_value());

  testutil::spit(dir / "empty.jsonl", "");
  CHECK(load_corpus(dir / "empty.jsonl").clips.empty());

  testutil::spit(dir / "typo.jsonl", R"({"clip_id":"a","split":"train","annotation":"x"}
{"clip_id":"b","split":"trian","annotation":"y"}
)");
  try {
    load_corpus(dir / "typo.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
    CHECK(msg.find("trian") != std::string::npos);
  }

  testutil::spit(dir / "dup.jsonl", R"({"clip_id":"a","split":"train","annotation":"x"}
{"clip_id":"a","split":"val","annotation":"y"}
)");
  CHECK_THROWS_WITH_AS(load_corpus(dir / "dup.jsonl"), doctest::Contains("duplicate"), DataError);

  testutil::spit(dir / "bad.jsonl", "{\"clip_id\":\"a\",\n");
  CHECK_THROWS_AS(load_corpus(dir / "bad.jsonl"), DataError);
  testutil::spit(dir / "noann.jsonl", R"({"clip_id":"a","split":"train","annotation":""})");
  CHECK_THROWS_AS(load_corpus(dir / "noann.jsonl"), DataError);
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), DataError);
}

TEST_CASE("save_corpus then load_corpus preserves clips and tracks") {
  TempDir dir("corpus_rt");
  auto c = synth_corpus(12, SynthSignal::feature_argmax, 4);
  save_corpus(c, dir / "c.jsonl");
  auto back = load_corpus(dir / "c.jsonl");
  REQUIRE(back.clips.size() == c.clips.size());
  for (std::size_t i = 0; i < c.clips.size(); ++i) {
    CHECK(back.clips[i].clip_id == c.clips[i].clip_id);
    CHECK(back.clips[i].split == c.clips[i].split);
    CHECK(back.clips[i].annotation == c.clips[i].annotation);
    CHECK(back.clips[i].tracks == c.clips[i].tracks);
  }
  auto lazy = load_corpus(dir / "c.jsonl", {.load_tracks = false});
  CHECK(lazy.clips[0].tracks.empty());
  CHECK(lazy.clips[0].track_paths.size() == 2);
}

TEST_CASE("synth_corpus is deterministic") {
  auto a = synth_corpus(10, SynthSignal::none, 7);
  auto b = synth_corpus(10, SynthSignal::none, 7);
  REQUIRE(a.clips.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a.clips[i].annotation == b.clips[i].annotation);
    CHECK(a.clips[i].tracks == b.clips[i].tracks);
  }
  auto one = synth_corpus(1, SynthSignal::none, 0);
  REQUIRE(one.clips.size() == 1);
  CHECK_FALSE(one.clips[0].annotation.empty());
  CHECK_THROWS(synth_corpus(0, SynthSignal::none, 0));
}

TEST_CASE("synth feature-argmax answer is recoverable from the 2d track") {
  auto c = synth_corpus(100, SynthSignal::feature_argmax, 1);
  const auto table = synth_answer_table();
  for (const auto& clip : c.clips) {
    const auto& t = clip.tracks.at("2d");
    std::vector<double> mean(t.dim, 0.0);
    for (std::size_t s = 0; s < t.timesteps; ++s)
      for (std::size_t j = 0; j < t.dim; ++j) mean[j] += t.row(s)[j];
    std::size_t best = 0;
    for (std::size_t j = 1; j < t.dim; ++j)
      if (mean[j] > mean[best]) best = j;
    const auto toks = text::tokenize_wordpunct(clip.annotation);
    CHECK(std::count(toks.begin(), toks.end(), std::string(table[best])) == 1);
  }
}

TEST_CASE("synth split assignment") {
  auto c = synth_corpus(30, SynthSignal::none, 2);
  for (std::size_t i = 0; i < 30; ++i) {
    const Split want = i % 10 < 8 ? Split::train : (i % 10 == 8 ? Split::val : Split::test);
    CHECK(c.clips[i].split == want);
  }
}
