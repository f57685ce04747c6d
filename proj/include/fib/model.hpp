#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fib/checkpoint.hpp"
#include "fib/corpus.hpp"
#include "fib/fibgen.hpp"
#include "fib/ops.hpp"
#include "fib/rng.hpp"
#include "fib/tensor.hpp"

namespace fib::model {

enum class Variant { text_only, text_2d, text_3d, text_2d_3d };

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view s);
// Feature tracks consumed by a variant, in classifier concatenation order.
std::vector<std::string> variant_tracks(Variant v);

enum class Mode { train, infer };

struct BnLstmParams {
  std::size_t d_in = 0;
  std::size_t d_h = 0;
  Tensor W_w;      // d_in x 4d_h, gate blocks ordered (i, f, o, g)
  Tensor W_h;      // d_h x 4d_h
  Tensor b;        // 4d_h
  Tensor gamma_w;  // 4d_h
  Tensor gamma_h;  // 4d_h
  Tensor gamma_c;  // d_h
  Tensor b_c;      // d_h
  Tensor h0;       // d_h
  Tensor c0;       // d_h
  // Running statistics, updated by train-mode steps only.
  mutable BatchStats bn_w, bn_h, bn_c;

  static BnLstmParams init(std::size_t d_in, std::size_t d_h, Rng& rng, double gamma_init = 0.1,
                           double momentum = 0.1);
  std::vector<Tensor> parameters() const;
  void append_arrays(const std::string& prefix, std::vector<NamedArray>& out) const;
  void assign_from(const std::string& prefix, const Container& c);
  BnLstmParams deep_copy() const;
};

struct LstmState {
  Tensor h;  // batch x d_h
  Tensor c;  // batch x d_h
};

struct StepOptions {
  double bn_eps = 1e-5;
};

// One BN-LSTM transition on a batch. Rows with mask[r] == 0 keep their
// previous state and are excluded from the batch statistics.
LstmState bnlstm_step(const BnLstmParams& p, const Tensor& x, const LstmState& prev, Mode mode,
                      std::span<const std::uint8_t> mask = {}, StepOptions opts = {});

LstmState initial_state(const BnLstmParams& p, std::size_t batch);

// Question encoder over a batch: the forward network reads tokens [0, k) and
// the backward network reads tokens (k, l] in reverse; the result is
// concat(h_fwd, h_bwd) of shape batch x 2d_h. Sequences are right-aligned so
// every example ends on the final step; examples with an empty side keep the
// learned initial state.
Tensor encode_questions(const BnLstmParams& fwd, const BnLstmParams& bwd, const Tensor& embedding,
                        std::span<const gen::EncodedQuestion> questions, Mode mode, StepOptions opts = {});

// Single-question form, returns a rank-1 tensor of length 2d_h.
Tensor encode_question(const BnLstmParams& fwd, const BnLstmParams& bwd, const Tensor& embedding,
                       std::span<const std::int64_t> ids, std::size_t k, Mode mode, StepOptions opts = {});

struct VideoInput {
  const FeatureTrack* track = nullptr;
  std::vector<std::size_t> indices;
};

// Runs the encoder over the selected rows of each track (all inputs must
// select the same number of frames) and returns the final h, batch x d_h.
Tensor encode_videos(const BnLstmParams& p, std::span<const VideoInput> inputs, Mode mode,
                     StepOptions opts = {});

// Single-track form, rank-1 result of length d_h.
Tensor encode_video(const BnLstmParams& p, const FeatureTrack& track, std::span<const std::size_t> indices,
                    Mode mode, StepOptions opts = {});

struct ModelConfig {
  Variant variant = Variant::text_only;
  std::size_t vocab_in = 0;
  std::size_t vocab_out = 0;
  std::size_t d_w = 64;
  std::size_t d_q = 128;
  std::size_t d_v = 128;
  std::size_t hidden = 256;
  // Feature dimension per track name; only tracks of the variant are used.
  std::map<std::string, std::size_t> track_dims;
  double gamma_init = 0.1;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  std::size_t classifier_input() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  Tensor embedding;  // vocab_in x d_w
  BnLstmParams q_fwd;
  BnLstmParams q_bwd;
  std::map<std::string, BnLstmParams> video;
  Tensor W1;  // classifier_input x hidden; video blocks first, question block last
  Tensor b1;  // hidden
  Tensor W2;  // hidden x vocab_out
  Tensor b2;  // vocab_out

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<Tensor> parameters() const;
  ModelParams deep_copy() const;
  Container to_container() const;
  static ModelParams from_container(const Container& c);
};

ModelConfig config_from_meta(const nlohmann::json& meta);
nlohmann::json config_to_meta(const ModelConfig& cfg);

void save_model(const ModelParams& params, const std::filesystem::path& path);
// Throws when `expect` is given and the stored variant or dims differ.
ModelParams load_model(const std::filesystem::path& path, const ModelConfig* expect = nullptr);

struct Batch {
  std::vector<gen::EncodedQuestion> questions;
  // Per track name, one input per question.
  std::map<std::string, std::vector<VideoInput>> video;
};

// tanh hidden layer over concat(video reps..., question rep), then linear
// logits (batch x vocab_out).
Tensor classifier_logits(const ModelParams& params, const Tensor& question_rep,
                         const std::vector<Tensor>& video_reps);
// softmax(classifier_logits(...)).
Tensor classify(const ModelParams& params, const Tensor& question_rep, const std::vector<Tensor>& video_reps);

Tensor forward_logits(const ModelParams& params, const Batch& batch, Mode mode);

// Index of the largest entry; the smallest index wins ties.
std::size_t argmax(std::span<const double> v);

// Predicted output id for every row of the batch (infer mode).
std::vector<std::int64_t> predict(const ModelParams& params, const Batch& batch);

}  // namespace fib::model
