#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fib/corpus.hpp"
#include "fib/fibgen.hpp"
#include "fib/model.hpp"
#include "fib/optim.hpp"
#include "fib/rng.hpp"

namespace fib::train {

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  // Frames per track, both for training samples and for validation.
  std::size_t frames = 25;
  std::uint64_t seed = 1;
  double fraction = 1.0;
  model::Variant variant = model::Variant::text_only;
  std::optional<std::filesystem::path> finetune_from;
  gen::VocabOptions vocab;
  std::size_t d_w = 64;
  std::size_t d_q = 128;
  std::size_t d_v = 128;
  std::size_t hidden = 256;
  double clip_norm = 5.0;
  // Stop once training-split accuracy (infer mode) reaches this value.
  std::optional<double> target_train_acc;

  // Throws std::invalid_argument naming the bad field.
  void validate() const;
};

enum class FrameMode { train, eval };

// Eval: K >= 2 gives round(i (T-1) / (K-1)), K == 1 gives (T-1)/2. Train: K
// distinct sorted indices when K <= T, else K sorted draws with replacement.
std::vector<std::size_t> sample_frames(std::size_t T, std::size_t K, FrameMode mode, Rng& rng);

// Keeps floor(p * N_train) training clips chosen by a seeded shuffle; other
// splits are untouched. For one seed, smaller fractions select a prefix of
// the same permutation, so subsets are nested.
Corpus subset_fraction(const Corpus& corpus, double p, std::uint64_t seed);

// Examples resolved against a vocabulary and corpus.
struct EncodedSet {
  std::vector<gen::EncodedQuestion> questions;
  std::vector<const Clip*> clips;
  std::vector<std::string> qids;
  std::size_t size() const { return questions.size(); }
};

// Encodes the examples whose clip is in the corpus and, when `split` is
// given, belongs to that split. Examples whose clip is absent are skipped.
EncodedSet encode_examples(const std::vector<gen::FibExample>& examples, const gen::Vocabulary& vocab,
                           const Corpus& corpus, std::optional<Split> split = std::nullopt);

// Assembles the rows of `set` into a model batch, sampling K frames from each
// track used by the variant. Throws DataError when a clip lacks a track.
model::Batch make_batch(const EncodedSet& set, std::span<const std::size_t> rows, model::Variant variant,
                        std::size_t K, FrameMode mode, Rng& rng);

// Mean negative log-likelihood of the batch answers.
Tensor loss(const model::ModelParams& params, const model::Batch& batch, model::Mode mode);

// Infer-mode predictions for every row of the set, evaluated in chunks that
// run in parallel. Frame indices use eval sampling, so results do not depend
// on chunking or thread count.
std::vector<std::int64_t> predict_set(const model::ModelParams& params, const EncodedSet& set, std::size_t K,
                                      std::size_t chunk = 64);

double set_accuracy(const model::ModelParams& params, const EncodedSet& set, std::size_t K);

// Copies the text components of a text-only source into a fresh target:
// embeddings, both question encoders (with running stats), the classifier
// rows of W1 that read the question block, b1, W2 and b2. Throws
// std::invalid_argument on a variant, dimension or vocabulary mismatch.
model::ModelParams finetune_init(const model::ModelParams& target, const model::ModelParams& source);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_acc;
  std::optional<double> train_acc;
  double wallclock_s = 0.0;
};

// One JSON object per line. Wall-clock time is left out unless requested, so
// logs of identical runs compare equal byte for byte.
std::string format_epoch(const EpochRecord& r, bool with_wallclock = false);

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochRecord> log;
  // Epoch whose parameters were returned; 0 means the initialization.
  std::size_t selected_epoch = 0;
};

// Model configuration implied by a training config, a vocabulary and the
// track dimensions found in the corpus.
model::ModelConfig model_config(const TrainConfig& cfg, const gen::Vocabulary& vocab, const Corpus& corpus);

// Trains on the train split and keeps the parameters with the best val
// accuracy (the final ones when there is no val split). `on_epoch`, when set,
// sees each record as it is produced.
TrainResult train(const Corpus& corpus, const std::vector<gen::FibExample>& examples,
                  const gen::Vocabulary& vocab, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace fib::train

namespace fib::train {

struct GradCheckSpec {
  model::Variant variant = model::Variant::text_2d_3d;
  std::size_t d_w = 8;
  std::size_t d_h = 8;
  std::size_t hidden = 8;
  std::size_t vocab_in = 20;
  std::size_t vocab_out = 10;
  std::size_t batch = 4;
  std::size_t question_len = 3;
  std::size_t track_steps = 2;
  std::uint32_t dim_2d = 5;
  std::uint32_t dim_3d = 4;
  std::uint64_t seed = 1;
  double h = 1e-5;
};

// Builds a random model and batch of the given sizes (blank positions vary
// across the batch) and checks the train-mode loss gradient of every
// parameter against central differences.
GradCheckResult model_grad_check(const GradCheckSpec& spec);

}  // namespace fib::train
