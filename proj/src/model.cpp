#include "fib/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fib::model {

namespace {

Tensor uniform(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor param_full(std::size_t n, double value) { return Tensor::full({n}, value, true); }

void push_array(std::vector<NamedArray>& out, std::string name, const Tensor& t) {
  out.push_back({std::move(name), t.shape(), {t.values().begin(), t.values().end()}});
}

void push_stats(std::vector<NamedArray>& out, const std::string& name, const BatchStats& s) {
  out.push_back({name + ".mean", {s.mean.size()}, s.mean});
  out.push_back({name + ".var", {s.variance.size()}, s.variance});
}

const NamedArray& need(const Container& c, const std::string& name, const Shape& shape) {
  const auto* a = c.find(name);
  if (!a) throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
  if (a->shape != shape)
    throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_str(a->shape) + ", expected " +
                     shape_str(shape));
  return *a;
}

void load_into(Tensor& t, const Container& c, const std::string& name) {
  const auto& a = need(c, name, t.shape());
  std::copy(a.values.begin(), a.values.end(), t.mutable_values().begin());
}

void load_stats(BatchStats& s, const Container& c, const std::string& name) {
  const auto& m = need(c, name + ".mean", {s.mean.size()});
  const auto& v = need(c, name + ".var", {s.variance.size()});
  s.mean = m.values;
  s.variance = v.values;
}

bool all_set(std::span<const std::uint8_t> mask) {
  return std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::text_only: return "text-only";
    case Variant::text_2d: return "text+2d";
    case Variant::text_3d: return "text+3d";
    case Variant::text_2d_3d: return "text+2d+3d";
  }
  return "text-only";
}

std::optional<Variant> parse_variant(std::string_view s) {
  for (Variant v : {Variant::text_only, Variant::text_2d, Variant::text_3d, Variant::text_2d_3d})
    if (variant_name(v) == s) return v;
  return std::nullopt;
}

std::vector<std::string> variant_tracks(Variant v) {
  switch (v) {
    case Variant::text_only: return {};
    case Variant::text_2d: return {"2d"};
    case Variant::text_3d: return {"3d"};
    case Variant::text_2d_3d: return {"2d", "3d"};
  }
  return {};
}

BnLstmParams BnLstmParams::init(std::size_t d_in, std::size_t d_h, Rng& rng, double gamma_init,
                                double momentum) {
  BnLstmParams p;
  p.d_in = d_in;
  p.d_h = d_h;
  p.W_w = uniform({d_in, 4 * d_h}, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
  p.W_h = uniform({d_h, 4 * d_h}, 1.0 / std::sqrt(static_cast<double>(d_h)), rng);
  p.b = param_full(4 * d_h, 0.0);
  p.gamma_w = param_full(4 * d_h, gamma_init);
  p.gamma_h = param_full(4 * d_h, gamma_init);
  p.gamma_c = param_full(d_h, gamma_init);
  p.b_c = param_full(d_h, 0.0);
  p.h0 = param_full(d_h, 0.0);
  p.c0 = param_full(d_h, 0.0);
  p.bn_w = BatchStats(4 * d_h, momentum);
  p.bn_h = BatchStats(4 * d_h, momentum);
  p.bn_c = BatchStats(d_h, momentum);
  return p;
}

std::vector<Tensor> BnLstmParams::parameters() const {
  return {W_w, W_h, b, gamma_w, gamma_h, gamma_c, b_c, h0, c0};
}

void BnLstmParams::append_arrays(const std::string& prefix, std::vector<NamedArray>& out) const {
  push_array(out, prefix + ".W_w", W_w);
  push_array(out, prefix + ".W_h", W_h);
  push_array(out, prefix + ".b", b);
  push_array(out, prefix + ".gamma_w", gamma_w);
  push_array(out, prefix + ".gamma_h", gamma_h);
  push_array(out, prefix + ".gamma_c", gamma_c);
  push_array(out, prefix + ".b_c", b_c);
  push_array(out, prefix + ".h0", h0);
  push_array(out, prefix + ".c0", c0);
  push_stats(out, prefix + ".bn_w", bn_w);
  push_stats(out, prefix + ".bn_h", bn_h);
  push_stats(out, prefix + ".bn_c", bn_c);
}

void BnLstmParams::assign_from(const std::string& prefix, const Container& c) {
  load_into(W_w, c, prefix + ".W_w");
  load_into(W_h, c, prefix + ".W_h");
  load_into(b, c, prefix + ".b");
  load_into(gamma_w, c, prefix + ".gamma_w");
  load_into(gamma_h, c, prefix + ".gamma_h");
  load_into(gamma_c, c, prefix + ".gamma_c");
  load_into(b_c, c, prefix + ".b_c");
  load_into(h0, c, prefix + ".h0");
  load_into(c0, c, prefix + ".c0");
  load_stats(bn_w, c, prefix + ".bn_w");
  load_stats(bn_h, c, prefix + ".bn_h");
  load_stats(bn_c, c, prefix + ".bn_c");
}

BnLstmParams BnLstmParams::deep_copy() const {
  BnLstmParams p = *this;
  p.W_w = W_w.clone(true);
  p.W_h = W_h.clone(true);
  p.b = b.clone(true);
  p.gamma_w = gamma_w.clone(true);
  p.gamma_h = gamma_h.clone(true);
  p.gamma_c = gamma_c.clone(true);
  p.b_c = b_c.clone(true);
  p.h0 = h0.clone(true);
  p.c0 = c0.clone(true);
  return p;
}

LstmState initial_state(const BnLstmParams& p, std::size_t batch) {
  return {broadcast_rows(p.h0, batch), broadcast_rows(p.c0, batch)};
}

LstmState bnlstm_step(const BnLstmParams& p, const Tensor& x, const LstmState& prev, Mode mode,
                      std::span<const std::uint8_t> mask, StepOptions opts) {
  const std::size_t batch = x.rows();
  if (x.rank() != 2 || x.cols() != p.d_in)
    throw ShapeError("bnlstm_step: input " + shape_str(x.shape()) + " does not match d_in " +
                     std::to_string(p.d_in));
  const Shape state_shape{batch, p.d_h};
  if (prev.h.shape() != state_shape || prev.c.shape() != state_shape)
    throw ShapeError("bnlstm_step: state " + shape_str(prev.h.shape()) + "/" + shape_str(prev.c.shape()) +
                     ", expected " + shape_str(state_shape));
  const BnMode bm = mode == Mode::train ? BnMode::batch : BnMode::population;
  const BnOptions bo{opts.bn_eps, mode == Mode::train};
  const std::size_t d = p.d_h;

  auto from_input = batch_norm(matmul(x, p.W_w), p.gamma_w, p.bn_w, bm, mask, bo);
  auto from_state = batch_norm(matmul(prev.h, p.W_h), p.gamma_h, p.bn_h, bm, mask, bo);
  auto pre = add_bias(add(from_input, from_state), p.b);
  auto i = sigmoid(slice_cols(pre, 0, d));
  auto f = sigmoid(slice_cols(pre, d, d));
  auto o = sigmoid(slice_cols(pre, 2 * d, d));
  auto g = tanh(slice_cols(pre, 3 * d, d));
  auto c = add(hadamard(i, g), hadamard(f, prev.c));
  auto h = hadamard(o, tanh(add_bias(batch_norm(c, p.gamma_c, p.bn_c, bm, mask, bo), p.b_c)));
  if (!mask.empty() && !all_set(mask)) {
    h = where_rows(mask, h, prev.h);
    c = where_rows(mask, c, prev.c);
  }
  return {h, c};
}

namespace {

// Runs `net` over per-example token sequences, right-aligned. `token_at(b, j)`
// returns the j-th token of example b's sequence.
template <typename TokenAt>
Tensor run_text(const BnLstmParams& net, const Tensor& embedding, const std::vector<std::size_t>& lengths,
                TokenAt token_at, Mode mode, StepOptions opts) {
  const std::size_t batch = lengths.size();
  LstmState state = initial_state(net, batch);
  const std::size_t steps = *std::max_element(lengths.begin(), lengths.end());
  std::vector<std::int64_t> ids(batch);
  std::vector<std::uint8_t> mask(batch);
  for (std::size_t t = 0; t < steps; ++t) {
    bool full = true;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t start = steps - lengths[b];
      mask[b] = t >= start ? 1 : 0;
      full = full && mask[b];
      ids[b] = mask[b] ? token_at(b, t - start) : -1;
      if (mask[b] && ids[b] < 0) throw std::invalid_argument("question encoder reached the blank token");
    }
    const Tensor x = pick_rows(embedding, ids);
    state = bnlstm_step(net, x, state, mode, full ? std::span<const std::uint8_t>{} : mask, opts);
  }
  return state.h;
}

}  // namespace

Tensor encode_questions(const BnLstmParams& fwd, const BnLstmParams& bwd, const Tensor& embedding,
                        std::span<const gen::EncodedQuestion> questions, Mode mode, StepOptions opts) {
  if (questions.empty()) throw std::invalid_argument("encode_questions: empty batch");
  if (embedding.cols() != fwd.d_in || embedding.cols() != bwd.d_in)
    throw ShapeError("encode_questions: embedding " + shape_str(embedding.shape()) +
                     " does not match encoder input widths");
  std::vector<std::size_t> len_f, len_b;
  for (const auto& q : questions) {
    if (q.blank_index >= q.ids.size())
      throw std::out_of_range("blank index " + std::to_string(q.blank_index) + " outside question of length " +
                              std::to_string(q.ids.size()));
    len_f.push_back(q.blank_index);
    len_b.push_back(q.ids.size() - q.blank_index - 1);
  }
  Tensor hf = run_text(
      fwd, embedding, len_f, [&](std::size_t b, std::size_t j) { return questions[b].ids[j]; }, mode, opts);
  Tensor hb = run_text(
      bwd, embedding, len_b,
      [&](std::size_t b, std::size_t j) { return questions[b].ids[questions[b].ids.size() - 1 - j]; }, mode,
      opts);
  return concat({hf, hb});
}

Tensor encode_question(const BnLstmParams& fwd, const BnLstmParams& bwd, const Tensor& embedding,
                       std::span<const std::int64_t> ids, std::size_t k, Mode mode, StepOptions opts) {
  gen::EncodedQuestion q;
  q.ids.assign(ids.begin(), ids.end());
  q.blank_index = k;
  const Tensor out = encode_questions(fwd, bwd, embedding, std::span(&q, 1), mode, opts);
  return reshape(out, {out.numel()});
}

Tensor encode_videos(const BnLstmParams& p, std::span<const VideoInput> inputs, Mode mode, StepOptions opts) {
  if (inputs.empty()) throw std::invalid_argument("encode_videos: empty batch");
  const std::size_t steps = inputs[0].indices.size();
  if (steps == 0) throw std::invalid_argument("encode_video: empty frame index list");
  for (const auto& in : inputs) {
    if (!in.track) throw std::invalid_argument("encode_video: missing feature track");
    if (in.indices.size() != steps)
      throw std::invalid_argument("encode_videos: inputs select different frame counts");
    if (in.track->dim != p.d_in)
      throw ShapeError("encode_video: track dim " + std::to_string(in.track->dim) + " but encoder expects " +
                       std::to_string(p.d_in));
    for (auto i : in.indices)
      if (i >= in.track->timesteps)
        throw std::out_of_range("frame index " + std::to_string(i) + " outside track of " +
                                std::to_string(in.track->timesteps) + " steps");
  }
  const std::size_t batch = inputs.size();
  LstmState state = initial_state(p, batch);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> x(batch * p.d_in);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto row = inputs[b].track->row(inputs[b].indices[t]);
      std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(b * p.d_in));
    }
    state = bnlstm_step(p, Tensor::from({batch, p.d_in}, std::move(x)), state, mode, {}, opts);
  }
  return state.h;
}

Tensor encode_video(const BnLstmParams& p, const FeatureTrack& track, std::span<const std::size_t> indices,
                    Mode mode, StepOptions opts) {
  VideoInput in{&track, {indices.begin(), indices.end()}};
  const Tensor out = encode_videos(p, std::span(&in, 1), mode, opts);
  return reshape(out, {out.numel()});
}

std::size_t ModelConfig::classifier_input() const {
  return 2 * d_q + d_v * variant_tracks(variant).size();
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.vocab_in == 0 || cfg.vocab_out == 0) throw std::invalid_argument("model: empty vocabulary");
  if (cfg.d_w == 0 || cfg.d_q == 0 || cfg.d_v == 0 || cfg.hidden == 0)
    throw std::invalid_argument("model: dimensions must be positive");
  Rng rng(seed);
  ModelParams m;
  m.config = cfg;
  m.embedding = uniform({cfg.vocab_in, cfg.d_w}, 1.0, rng);
  m.q_fwd = BnLstmParams::init(cfg.d_w, cfg.d_q, rng, cfg.gamma_init, cfg.bn_momentum);
  m.q_bwd = BnLstmParams::init(cfg.d_w, cfg.d_q, rng, cfg.gamma_init, cfg.bn_momentum);
  for (const auto& name : variant_tracks(cfg.variant)) {
    auto it = cfg.track_dims.find(name);
    if (it == cfg.track_dims.end() || it->second == 0)
      throw std::invalid_argument("model: no feature dimension for track '" + name + "'");
    m.video.emplace(name, BnLstmParams::init(it->second, cfg.d_v, rng, cfg.gamma_init, cfg.bn_momentum));
  }
  const std::size_t in = cfg.classifier_input();
  m.W1 = uniform({in, cfg.hidden}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  m.b1 = param_full(cfg.hidden, 0.0);
  m.W2 = uniform({cfg.hidden, cfg.vocab_out}, 1.0 / std::sqrt(static_cast<double>(cfg.hidden)), rng);
  m.b2 = param_full(cfg.vocab_out, 0.0);
  return m;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out{embedding};
  for (const auto* p : {&q_fwd, &q_bwd})
    for (auto& t : p->parameters()) out.push_back(t);
  for (const auto& name : variant_tracks(config.variant))
    for (auto& t : video.at(name).parameters()) out.push_back(t);
  for (const auto& t : {W1, b1, W2, b2}) out.push_back(t);
  return out;
}

ModelParams ModelParams::deep_copy() const {
  ModelParams m = *this;
  m.embedding = embedding.clone(true);
  m.q_fwd = q_fwd.deep_copy();
  m.q_bwd = q_bwd.deep_copy();
  for (auto& [name, p] : m.video) p = p.deep_copy();
  m.W1 = W1.clone(true);
  m.b1 = b1.clone(true);
  m.W2 = W2.clone(true);
  m.b2 = b2.clone(true);
  return m;
}

nlohmann::json config_to_meta(const ModelConfig& cfg) {
  nlohmann::json j;
  j["format"] = "fib-model";
  j["variant"] = variant_name(cfg.variant);
  j["vocab_in"] = cfg.vocab_in;
  j["vocab_out"] = cfg.vocab_out;
  j["d_w"] = cfg.d_w;
  j["d_q"] = cfg.d_q;
  j["d_v"] = cfg.d_v;
  j["hidden"] = cfg.hidden;
  j["track_dims"] = cfg.track_dims;
  j["gamma_init"] = cfg.gamma_init;
  j["bn_eps"] = cfg.bn_eps;
  j["bn_momentum"] = cfg.bn_momentum;
  return j;
}

ModelConfig config_from_meta(const nlohmann::json& meta) {
  if (meta.value("format", "") != "fib-model") throw std::runtime_error("checkpoint is not a fib model");
  ModelConfig cfg;
  const auto v = parse_variant(meta.at("variant").get<std::string>());
  if (!v) throw std::runtime_error("checkpoint has unknown variant");
  cfg.variant = *v;
  cfg.vocab_in = meta.at("vocab_in").get<std::size_t>();
  cfg.vocab_out = meta.at("vocab_out").get<std::size_t>();
  cfg.d_w = meta.at("d_w").get<std::size_t>();
  cfg.d_q = meta.at("d_q").get<std::size_t>();
  cfg.d_v = meta.at("d_v").get<std::size_t>();
  cfg.hidden = meta.at("hidden").get<std::size_t>();
  cfg.track_dims = meta.at("track_dims").get<std::map<std::string, std::size_t>>();
  cfg.gamma_init = meta.value("gamma_init", 0.1);
  cfg.bn_eps = meta.value("bn_eps", 1e-5);
  cfg.bn_momentum = meta.value("bn_momentum", 0.1);
  return cfg;
}

Container ModelParams::to_container() const {
  Container c;
  c.meta = config_to_meta(config);
  push_array(c.arrays, "embedding", embedding);
  q_fwd.append_arrays("q_fwd", c.arrays);
  q_bwd.append_arrays("q_bwd", c.arrays);
  for (const auto& name : variant_tracks(config.variant)) video.at(name).append_arrays("video." + name, c.arrays);
  push_array(c.arrays, "clf.W1", W1);
  push_array(c.arrays, "clf.b1", b1);
  push_array(c.arrays, "clf.W2", W2);
  push_array(c.arrays, "clf.b2", b2);
  return c;
}

ModelParams ModelParams::from_container(const Container& c) {
  ModelParams m = init(config_from_meta(c.meta), 0);
  load_into(m.embedding, c, "embedding");
  m.q_fwd.assign_from("q_fwd", c);
  m.q_bwd.assign_from("q_bwd", c);
  for (auto& [name, p] : m.video) p.assign_from("video." + name, c);
  load_into(m.W1, c, "clf.W1");
  load_into(m.b1, c, "clf.b1");
  load_into(m.W2, c, "clf.W2");
  load_into(m.b2, c, "clf.b2");
  return m;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  write_container(path, params.to_container());
}

ModelParams load_model(const std::filesystem::path& path, const ModelConfig* expect) {
  const auto c = read_container(path);
  auto m = ModelParams::from_container(c);
  if (expect) {
    const auto& got = m.config;
    auto mismatch = [&](const std::string& what, auto a, auto b) {
      throw std::runtime_error("checkpoint " + path.string() + ": " + what + " is " + std::to_string(a) +
                               ", expected " + std::to_string(b));
    };
    if (got.variant != expect->variant)
      throw std::runtime_error("checkpoint " + path.string() + ": variant is " +
                               std::string(variant_name(got.variant)) + ", expected " +
                               std::string(variant_name(expect->variant)));
    if (got.vocab_in != expect->vocab_in) mismatch("vocab_in", got.vocab_in, expect->vocab_in);
    if (got.vocab_out != expect->vocab_out) mismatch("vocab_out", got.vocab_out, expect->vocab_out);
    if (got.d_w != expect->d_w) mismatch("d_w", got.d_w, expect->d_w);
    if (got.d_q != expect->d_q) mismatch("d_q", got.d_q, expect->d_q);
    if (got.d_v != expect->d_v) mismatch("d_v", got.d_v, expect->d_v);
    if (got.hidden != expect->hidden) mismatch("hidden", got.hidden, expect->hidden);
  }
  return m;
}

Tensor classifier_logits(const ModelParams& params, const Tensor& question_rep,
                         const std::vector<Tensor>& video_reps) {
  std::vector<Tensor> parts(video_reps.begin(), video_reps.end());
  parts.push_back(question_rep);
  Tensor x = concat(parts);
  if (x.rank() == 1) x = reshape(x, {1, x.numel()});
  if (x.cols() != params.W1.rows())
    throw ShapeError("classifier: representation width " + std::to_string(x.cols()) + " but classifier expects " +
                     std::to_string(params.W1.rows()));
  const Tensor hidden = tanh(add_bias(matmul(x, params.W1), params.b1));
  return add_bias(matmul(hidden, params.W2), params.b2);
}

Tensor classify(const ModelParams& params, const Tensor& question_rep, const std::vector<Tensor>& video_reps) {
  return softmax(classifier_logits(params, question_rep, video_reps));
}

Tensor forward_logits(const ModelParams& params, const Batch& batch, Mode mode) {
  const StepOptions so{params.config.bn_eps};
  const Tensor q = encode_questions(params.q_fwd, params.q_bwd, params.embedding, batch.questions, mode, so);
  std::vector<Tensor> reps;
  for (const auto& name : variant_tracks(params.config.variant)) {
    auto it = batch.video.find(name);
    if (it == batch.video.end() || it->second.size() != batch.questions.size())
      throw std::invalid_argument("batch lacks '" + name + "' inputs for every question");
    reps.push_back(encode_videos(params.video.at(name), it->second, mode, so));
  }
  return classifier_logits(params, q, reps);
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<std::int64_t> predict(const ModelParams& params, const Batch& batch) {
  NoGradGuard no_grad;
  const Tensor probs = softmax(forward_logits(params, batch, Mode::infer));
  const std::size_t n = probs.cols();
  std::vector<std::int64_t> out;
  for (std::size_t r = 0; r < probs.rows(); ++r)
    out.push_back(static_cast<std::int64_t>(argmax(probs.values().subspan(r * n, n))));
  return out;
}

}  // namespace fib::model
