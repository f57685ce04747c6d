#include "fib/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace fib::train {

using model::ModelParams;
using model::Mode;

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw std::invalid_argument(what); };
  if (frames < 1) bad("frames must be at least 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) bad("fraction must lie in (0, 1]");
  if (batch_size < 1) bad("batch size must be at least 1");
  if (!(adam.lr > 0.0)) bad("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) bad("beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) bad("beta2 must lie in [0, 1)");
  if (!(adam.eps > 0.0)) bad("adam epsilon must be positive");
  if (d_w == 0 || d_q == 0 || d_v == 0 || hidden == 0) bad("model dimensions must be positive");
  if (!(clip_norm > 0.0)) bad("clip norm must be positive");
}

std::vector<std::size_t> sample_frames(std::size_t T, std::size_t K, FrameMode mode, Rng& rng) {
  if (T < 1) throw std::invalid_argument("sample_frames: track has no frames");
  if (K < 1) throw std::invalid_argument("sample_frames: K must be at least 1");
  std::vector<std::size_t> out;
  out.reserve(K);
  if (mode == FrameMode::eval) {
    if (K == 1) return {(T - 1) / 2};
    for (std::size_t i = 0; i < K; ++i) {
      const double pos = static_cast<double>(i) * static_cast<double>(T - 1) / static_cast<double>(K - 1);
      out.push_back(std::min(static_cast<std::size_t>(std::llround(pos)), T - 1));
    }
    return out;
  }
  if (K <= T) {
    // Partial Fisher-Yates over [0, T).
    std::vector<std::size_t> pool(T);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < K; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_int(T - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < K; ++i) out.push_back(static_cast<std::size_t>(rng.uniform_int(T)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Corpus subset_fraction(const Corpus& corpus, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < corpus.clips.size(); ++i)
    if (corpus.clips[i].split == Split::train) train_idx.push_back(i);
  Rng rng(seed);
  rng.shuffle(train_idx);
  const auto keep_n = static_cast<std::size_t>(std::floor(p * static_cast<double>(train_idx.size()) + 1e-9));
  std::vector<char> keep(corpus.clips.size(), 1);
  for (std::size_t r = keep_n; r < train_idx.size(); ++r) keep[train_idx[r]] = 0;
  Corpus out;
  out.provenance = corpus.provenance;
  for (std::size_t i = 0; i < corpus.clips.size(); ++i)
    if (keep[i]) out.clips.push_back(corpus.clips[i]);
  out.reindex();
  return out;
}

EncodedSet encode_examples(const std::vector<gen::FibExample>& examples, const gen::Vocabulary& vocab,
                           const Corpus& corpus, std::optional<Split> split) {
  EncodedSet set;
  for (const auto& ex : examples) {
    const auto idx = corpus.find(ex.clip_id);
    if (!idx) continue;
    const Clip& clip = corpus.clips[*idx];
    if (split && clip.split != *split) continue;
    set.questions.push_back(gen::encode_question(ex, vocab));
    set.clips.push_back(&clip);
    set.qids.push_back(ex.qid);
  }
  return set;
}

model::Batch make_batch(const EncodedSet& set, std::span<const std::size_t> rows, model::Variant variant,
                        std::size_t K, FrameMode mode, Rng& rng) {
  model::Batch batch;
  const auto tracks = model::variant_tracks(variant);
  for (const auto& name : tracks) batch.video[name].reserve(rows.size());
  for (auto r : rows) {
    batch.questions.push_back(set.questions.at(r));
    const Clip& clip = *set.clips.at(r);
    for (const auto& name : tracks) {
      auto it = clip.tracks.find(name);
      if (it == clip.tracks.end())
        throw DataError("clip " + clip.clip_id + " has no '" + name + "' feature track");
      batch.video[name].push_back({&it->second, sample_frames(it->second.timesteps, K, mode, rng)});
    }
  }
  return batch;
}

Tensor loss(const ModelParams& params, const model::Batch& batch, Mode mode) {
  std::vector<std::int64_t> targets;
  targets.reserve(batch.questions.size());
  for (const auto& q : batch.questions) targets.push_back(q.answer_id);
  return softmax_cross_entropy(model::forward_logits(params, batch, mode), targets);
}

std::vector<std::int64_t> predict_set(const ModelParams& params, const EncodedSet& set, std::size_t K,
                                      std::size_t chunk) {
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t n = set.size();
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<std::int64_t> out(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < n_chunks; ++c) {
    try {
      std::vector<std::size_t> rows;
      for (std::size_t r = c * chunk; r < std::min(n, (c + 1) * chunk); ++r) rows.push_back(r);
      Rng unused(0);  // eval sampling draws nothing
      const auto batch = make_batch(set, rows, params.config.variant, K, FrameMode::eval, unused);
      const auto pred = model::predict(params, batch);
      std::copy(pred.begin(), pred.end(), out.begin() + static_cast<std::ptrdiff_t>(rows.front()));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double set_accuracy(const ModelParams& params, const EncodedSet& set, std::size_t K) {
  if (set.size() == 0) throw std::invalid_argument("accuracy of an empty set");
  const auto pred = predict_set(params, set, K);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == set.questions[i].answer_id;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

ModelParams finetune_init(const ModelParams& target, const ModelParams& source) {
  const auto& t = target.config;
  const auto& s = source.config;
  auto mismatch = [](const std::string& what, std::size_t a, std::size_t b) {
    throw std::invalid_argument("finetune source " + what + " is " + std::to_string(a) + ", target needs " +
                                std::to_string(b));
  };
  if (s.variant != model::Variant::text_only) throw std::invalid_argument("finetune source must be text-only");
  if (s.vocab_in != t.vocab_in) mismatch("input vocabulary", s.vocab_in, t.vocab_in);
  if (s.vocab_out != t.vocab_out) mismatch("output vocabulary", s.vocab_out, t.vocab_out);
  if (s.d_w != t.d_w) mismatch("d_w", s.d_w, t.d_w);
  if (s.d_q != t.d_q) mismatch("question d_h", s.d_q, t.d_q);
  if (s.hidden != t.hidden) mismatch("classifier width", s.hidden, t.hidden);

  ModelParams out = target.deep_copy();
  auto copy = [](Tensor& dst, const Tensor& src) {
    std::copy(src.values().begin(), src.values().end(), dst.mutable_values().begin());
  };
  copy(out.embedding, source.embedding);
  out.q_fwd = source.q_fwd.deep_copy();
  out.q_bwd = source.q_bwd.deep_copy();
  // The question block occupies the last 2 d_q rows of W1.
  const std::size_t q_rows = 2 * s.d_q;
  const std::size_t offset = (t.classifier_input() - q_rows) * t.hidden;
  std::copy(source.W1.values().begin(), source.W1.values().end(),
            out.W1.mutable_values().begin() + static_cast<std::ptrdiff_t>(offset));
  copy(out.b1, source.b1);
  copy(out.W2, source.W2);
  copy(out.b2, source.b2);
  return out;
}

std::string format_epoch(const EpochRecord& r, bool with_wallclock) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_acc"] = r.val_acc ? nlohmann::ordered_json(*r.val_acc) : nlohmann::ordered_json(nullptr);
  if (r.train_acc) j["train_acc"] = *r.train_acc;
  if (with_wallclock) j["wallclock"] = r.wallclock_s;
  return j.dump();
}

model::ModelConfig model_config(const TrainConfig& cfg, const gen::Vocabulary& vocab, const Corpus& corpus) {
  model::ModelConfig mc;
  mc.variant = cfg.variant;
  mc.vocab_in = vocab.input.size();
  mc.vocab_out = vocab.output.size();
  mc.d_w = cfg.d_w;
  mc.d_q = cfg.d_q;
  mc.d_v = cfg.d_v;
  mc.hidden = cfg.hidden;
  for (const auto& name : model::variant_tracks(cfg.variant)) {
    for (const auto& clip : corpus.clips) {
      auto it = clip.tracks.find(name);
      if (it == clip.tracks.end()) continue;
      auto [pos, inserted] = mc.track_dims.emplace(name, it->second.dim);
      if (!inserted && pos->second != it->second.dim)
        throw DataError("clip " + clip.clip_id + ": '" + name + "' track has dim " + std::to_string(it->second.dim) +
                        ", other clips have " + std::to_string(pos->second));
    }
    if (!mc.track_dims.count(name)) throw DataError("no clip carries a '" + name + "' feature track");
  }
  return mc;
}

TrainResult train(const Corpus& full_corpus, const std::vector<gen::FibExample>& examples,
                  const gen::Vocabulary& vocab, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  const Corpus corpus = cfg.fraction < 1.0 ? subset_fraction(full_corpus, cfg.fraction, cfg.seed) : Corpus{};
  const Corpus& data = cfg.fraction < 1.0 ? corpus : full_corpus;

  const auto train_set = encode_examples(examples, vocab, data, Split::train);
  const auto val_set = encode_examples(examples, vocab, data, Split::val);
  if (train_set.size() == 0 && cfg.epochs > 0) throw DataError("no training examples");

  const auto mc = model_config(cfg, vocab, data);
  ModelParams params = ModelParams::init(mc, cfg.seed);
  if (cfg.finetune_from) params = finetune_init(params, model::load_model(*cfg.finetune_from));

  std::vector<Tensor> weights = params.parameters();
  AdamState adam(cfg.adam, weights);
  Rng rng(cfg.seed ^ 0x5EEDull);

  TrainResult result;
  result.params = params.deep_copy();
  std::optional<double> best_val;
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const auto batch = make_batch(train_set, rows, cfg.variant, cfg.frames, FrameMode::train, rng);
      zero_grads(weights);
      const Tensor l = loss(params, batch, Mode::train);
      if (!std::isfinite(l.item())) {
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(b) + " (first qid " + train_set.qids[rows.front()] + ")");
      }
      backward(l);
      clip_grad_norm(weights, cfg.clip_norm);
      adam_step(weights, adam);
      loss_sum += l.item() * static_cast<double>(rows.size());
      seen += rows.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    if (val_set.size() > 0) rec.val_acc = set_accuracy(params, val_set, cfg.frames);
    if (cfg.target_train_acc) rec.train_acc = set_accuracy(params, train_set, cfg.frames);
    rec.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const bool stop = cfg.target_train_acc && *rec.train_acc >= *cfg.target_train_acc;
    if (rec.val_acc) {
      if (!best_val || *rec.val_acc >= *best_val) {
        best_val = rec.val_acc;
        result.params = params.deep_copy();
        result.selected_epoch = epoch;
      }
    } else if (epoch == cfg.epochs || stop) {
      result.params = params.deep_copy();
      result.selected_epoch = epoch;
    }
    if (stop) break;
  }
  return result;
}

}  // namespace fib::train
