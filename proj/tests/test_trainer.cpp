#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "fib/kernels.hpp"
#include "fib/trainer.hpp"
#include "test_util.hpp"

using namespace fib;
using namespace fib::train;

namespace {

struct Setup {
  Corpus corpus;
  std::vector<gen::FibExample> examples;
  gen::Vocabulary vocab;
};

const Setup& small_setup() {
  static const Setup s = [] {
    Setup x;
    x.corpus = synth_corpus(60, SynthSignal::feature_argmax, 5, {.dim_2d = 10, .dim_3d = 3, .min_frames = 4, .max_frames = 9});
    auto lex = text::Lexicon::load(testutil::data_dir() + "/lexicon.tsv");
    x.examples = gen::generate(x.corpus, lex, {}, {.min_count = 1});
    x.vocab = gen::build_vocab(x.examples, x.corpus);
    return x;
  }();
  return s;
}

TrainConfig tiny_config(model::Variant v) {
  TrainConfig c;
  c.variant = v;
  c.d_w = 6;
  c.d_q = 5;
  c.d_v = 4;
  c.hidden = 8;
  c.batch_size = 8;
  c.frames = 3;
  c.epochs = 2;
  return c;
}

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::set<std::string> train_ids(const Corpus& c) {
  std::set<std::string> out;
  for (const auto& clip : c.clips)
    if (clip.split == Split::train) out.insert(clip.clip_id);
  return out;
}

}  // namespace

TEST_CASE("eval frame sampling examples") {
  Rng rng(0);
  using V = std::vector<std::size_t>;
  CHECK(sample_frames(5, 3, FrameMode::eval, rng) == V{0, 2, 4});
  CHECK(sample_frames(100, 2, FrameMode::eval, rng) == V{0, 99});
  CHECK(sample_frames(7, 1, FrameMode::eval, rng) == V{3});
  CHECK(sample_frames(8, 1, FrameMode::eval, rng) == V{3});
  CHECK_THROWS(sample_frames(0, 2, FrameMode::eval, rng));
  CHECK_THROWS(sample_frames(3, 0, FrameMode::train, rng));
}

TEST_CASE("eval frame indices: range, order and endpoints for all K <= T <= 200") {
  Rng rng(0);
  for (std::size_t T = 1; T <= 200; ++T)
    for (std::size_t K = 1; K <= T; ++K) {
      const auto idx = sample_frames(T, K, FrameMode::eval, rng);
      REQUIRE(idx.size() == K);
      REQUIRE(std::is_sorted(idx.begin(), idx.end()));
      REQUIRE(idx.back() <= T - 1);
      if (K >= 2) {
        REQUIRE(idx.front() == 0);
        REQUIRE(idx.back() == T - 1);
      }
    }
  // K beyond T repeats frames but stays in range.
  auto over = sample_frames(3, 7, FrameMode::eval, rng);
  CHECK(over.size() == 7);
  CHECK(*std::max_element(over.begin(), over.end()) == 2);
}

TEST_CASE("train frame sampling") {
  for (std::size_t T : {1u, 5u, 25u, 60u})
    for (std::size_t K : {1u, 3u, 25u, 40u}) {
      Rng a(42), b(42);
      auto x = sample_frames(T, K, FrameMode::train, a);
      CHECK(x == sample_frames(T, K, FrameMode::train, b));
      CHECK(x.size() == K);
      CHECK(std::is_sorted(x.begin(), x.end()));
      CHECK(x.back() < T);
      if (K <= T) CHECK(std::adjacent_find(x.begin(), x.end()) == x.end());
    }
}

TEST_CASE("subset_fraction keeps a nested floor(p N) prefix") {
  const auto& s = small_setup();
  const auto n_train = s.corpus.count(Split::train);
  CHECK(train_ids(subset_fraction(s.corpus, 1.0, 3)) == train_ids(s.corpus));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::set<std::string> prev;
    for (double p : {0.1, 0.2, 0.35, 0.5, 0.8, 1.0}) {
      auto sub = subset_fraction(s.corpus, p, seed);
      auto ids = train_ids(sub);
      CHECK(ids.size() == static_cast<std::size_t>(std::floor(p * n_train + 1e-9)));
      CHECK(std::includes(ids.begin(), ids.end(), prev.begin(), prev.end()));
      CHECK(sub.count(Split::val) == s.corpus.count(Split::val));
      CHECK(sub.count(Split::test) == s.corpus.count(Split::test));
      prev = ids;
    }
  }
  CHECK_THROWS(subset_fraction(s.corpus, 0.0, 1));
  CHECK_THROWS(subset_fraction(s.corpus, 1.5, 1));
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.frames = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("loss values") {
  const auto& s = small_setup();
  auto cfg = tiny_config(model::Variant::text_2d);
  auto m = model::ModelParams::init(model_config(cfg, s.vocab, s.corpus), 1);
  auto set = encode_examples(s.examples, s.vocab, s.corpus, Split::train);
  std::vector<std::size_t> rows{0, 1, 2, 3, 4};
  Rng rng(0);
  auto batch = make_batch(set, rows, cfg.variant, 3, FrameMode::eval, rng);

  // Zero classifier output layer: uniform prediction.
  auto z = m.deep_copy();
  std::fill(z.W2.mutable_values().begin(), z.W2.mutable_values().end(), 0.0);
  std::fill(z.b2.mutable_values().begin(), z.b2.mutable_values().end(), 0.0);
  CHECK(loss(z, batch, model::Mode::infer).item() ==
        doctest::Approx(std::log(double(s.vocab.output.size()))).epsilon(1e-12));

  // Batch loss is the mean of single-example losses with population stats.
  double total = 0;
  for (auto r : rows) {
    std::vector<std::size_t> one{r};
    Rng r1(0);
    total += loss(m, make_batch(set, one, cfg.variant, 3, FrameMode::eval, r1), model::Mode::infer).item();
  }
  CHECK(loss(m, batch, model::Mode::infer).item() == doctest::Approx(total / rows.size()).epsilon(1e-12));

  // A model that puts all mass on the target.
  auto sure = z.deep_copy();
  for (std::size_t j = 0; j < sure.b2.numel(); ++j) sure.b2.mutable_values()[j] = -1e3;
  std::vector<std::size_t> same;
  for (std::size_t r = 0; r < set.size(); ++r)
    if (set.questions[r].answer_id == set.questions[0].answer_id) same.push_back(r);
  sure.b2.mutable_values()[static_cast<std::size_t>(set.questions[0].answer_id)] = 1e3;
  Rng r2(0);
  CHECK(loss(sure, make_batch(set, same, cfg.variant, 3, FrameMode::eval, r2), model::Mode::infer).item() == 0.0);
}

TEST_CASE("train loss decreases over the first Adam steps on a fixed batch") {
  const auto& s = small_setup();
  auto cfg = tiny_config(model::Variant::text_2d);
  auto m = model::ModelParams::init(model_config(cfg, s.vocab, s.corpus), 7);
  auto set = encode_examples(s.examples, s.vocab, s.corpus, Split::train);
  std::vector<std::size_t> rows(16);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  Rng rng(0);
  auto batch = make_batch(set, rows, cfg.variant, 3, FrameMode::train, rng);
  auto params = m.parameters();
  AdamState st(AdamConfig{.lr = 1e-3}, params);
  double prev = INFINITY;
  for (int step = 0; step < 6; ++step) {
    zero_grads(params);
    auto l = loss(m, batch, model::Mode::train);
    if (step > 0) CHECK(l.item() < prev);
    prev = l.item();
    backward(l);
    adam_step(params, st);
  }
}

TEST_CASE("make_batch and encode_examples") {
  const auto& s = small_setup();
  auto set = encode_examples(s.examples, s.vocab, s.corpus, Split::val);
  CHECK(set.size() == s.corpus.count(Split::val));
  for (auto* c : set.clips) CHECK(c->split == Split::val);

  Corpus missing = s.corpus;
  missing.clips.erase(missing.clips.begin());
  missing.reindex();
  CHECK(encode_examples(s.examples, s.vocab, missing).size() == s.examples.size() - 1);

  Corpus no_tracks = s.corpus;
  for (auto& c : no_tracks.clips) c.tracks.clear();
  auto bare = encode_examples(s.examples, s.vocab, no_tracks);
  std::vector<std::size_t> rows{0};
  Rng rng(0);
  CHECK_THROWS_AS(make_batch(bare, rows, model::Variant::text_2d, 2, FrameMode::eval, rng), DataError);
  CHECK_NOTHROW(make_batch(bare, rows, model::Variant::text_only, 2, FrameMode::eval, rng));
}

TEST_CASE("text-only predictions do not depend on feature tracks") {
  const auto& s = small_setup();
  auto cfg = tiny_config(model::Variant::text_only);
  auto m = model::ModelParams::init(model_config(cfg, s.vocab, s.corpus), 3);
  Corpus bare = s.corpus;
  for (auto& c : bare.clips) c.tracks.clear();
  auto a = predict_set(m, encode_examples(s.examples, s.vocab, s.corpus), 5);
  auto b = predict_set(m, encode_examples(s.examples, s.vocab, bare), 5);
  CHECK(a == b);
}

TEST_CASE("predict_set does not depend on chunking or thread count") {
  const auto& s = small_setup();
  auto cfg = tiny_config(model::Variant::text_2d_3d);
  auto m = model::ModelParams::init(model_config(cfg, s.vocab, s.corpus), 4);
  for (auto* p : {&m.q_fwd, &m.video.at("2d")})
    for (auto& v : p->bn_h.mean) v = 0.05;
  auto set = encode_examples(s.examples, s.vocab, s.corpus);
  kernels::set_num_threads(1);
  auto ref = predict_set(m, set, 4, set.size());
  for (std::size_t chunk : {1u, 7u, 64u}) CHECK(predict_set(m, set, 4, chunk) == ref);
  kernels::set_num_threads(4);
  CHECK(predict_set(m, set, 4, 5) == ref);
  kernels::set_num_threads(1);
}

TEST_CASE("finetune initialization") {
  const auto& s = small_setup();
  auto cfg = tiny_config(model::Variant::text_only);
  auto src = model::ModelParams::init(model_config(cfg, s.vocab, s.corpus), 11);
  src.q_fwd.bn_w.mean[0] = 0.5;
  const auto src_W1 = vals(src.W1);

  auto same = finetune_init(model::ModelParams::init(src.config, 99), src);
  auto set = encode_examples(s.examples, s.vocab, s.corpus);
  CHECK(predict_set(same, set, 3) == predict_set(src, set, 3));
  auto ps = src.parameters(), pt = same.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(vals(ps[i]) == vals(pt[i]));

  auto vcfg = cfg;
  vcfg.variant = model::Variant::text_2d;
  auto fresh = model::ModelParams::init(model_config(vcfg, s.vocab, s.corpus), 12);
  auto ft = finetune_init(fresh, src);
  const std::size_t H = cfg.hidden, q_rows = 2 * cfg.d_q, v_rows = cfg.d_v;
  for (std::size_t r = 0; r < q_rows; ++r)
    for (std::size_t c = 0; c < H; ++c) CHECK(ft.W1.at(v_rows + r, c) == src.W1.at(r, c));
  for (std::size_t r = 0; r < v_rows; ++r)
    for (std::size_t c = 0; c < H; ++c) {
      CHECK(ft.W1.at(r, c) == fresh.W1.at(r, c));
    }
  CHECK(vals(ft.embedding) == vals(src.embedding));
  CHECK(ft.q_fwd.bn_w.mean == src.q_fwd.bn_w.mean);
  CHECK(vals(ft.video.at("2d").W_w) == vals(fresh.video.at("2d").W_w));
  CHECK(vals(src.W1) == src_W1);

  auto bad = vcfg;
  bad.d_q = 6;
  auto mismatched = model::ModelParams::init(model_config(bad, s.vocab, s.corpus), 1);
  const auto before = vals(mismatched.W1);
  CHECK_THROWS_AS(finetune_init(mismatched, src), std::invalid_argument);
  CHECK(vals(mismatched.W1) == before);
  CHECK_THROWS_AS(finetune_init(src, fresh), std::invalid_argument);
}

TEST_CASE("training: zero epochs, determinism and log format") {
  const auto& s = small_setup();
  auto cfg = tiny_config(model::Variant::text_2d);
  cfg.epochs = 0;
  auto r0 = fib::train::train(s.corpus, s.examples, s.vocab, cfg);
  auto init = model::ModelParams::init(model_config(cfg, s.vocab, s.corpus), cfg.seed);
  auto a = r0.params.parameters(), b = init.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(vals(a[i]) == vals(b[i]));
  CHECK(r0.log.empty());
  CHECK(r0.selected_epoch == 0);

  cfg.epochs = 3;
  std::vector<std::string> lines;
  auto r1 = fib::train::train(s.corpus, s.examples, s.vocab, cfg, [&](const EpochRecord& e) { lines.push_back(format_epoch(e)); });
  auto r2 = fib::train::train(s.corpus, s.examples, s.vocab, cfg);
  REQUIRE(r1.log.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(format_epoch(r1.log[i]) == format_epoch(r2.log[i]));
    CHECK(lines[i] == format_epoch(r1.log[i]));
    CHECK(r1.log[i].val_acc.has_value());
  }
  auto p1 = r1.params.parameters(), p2 = r2.params.parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(vals(p1[i]) == vals(p2[i]));

  EpochRecord e{2, 0.5, std::nullopt, 0.75, 1.5};
  CHECK(format_epoch(e) == R"({"epoch":2,"train_loss":0.5,"val_acc":null,"train_acc":0.75})");
  CHECK(format_epoch(e, true).find("\"wallclock\":1.5") != std::string::npos);
}

TEST_CASE("model gradients through the full model are finite") {
  GradCheckSpec spec;
  spec.d_w = 3;
  spec.d_h = 3;
  spec.hidden = 4;
  spec.vocab_in = 8;
  spec.vocab_out = 4;
  spec.dim_2d = 3;
  spec.dim_3d = 2;
  auto r = model_grad_check(spec);
  CHECK(std::isfinite(r.max_rel_error));
  CHECK(r.entries > 0);
  // Entries that finite differences can resolve agree closely.
  CHECK(r.max_rel_error_resolved < 1e-4);
}
