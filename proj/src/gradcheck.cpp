#include <map>

#include "fib/trainer.hpp"

namespace fib::train {

GradCheckResult model_grad_check(const GradCheckSpec& spec) {
  if (spec.batch == 0 || spec.question_len == 0 || spec.track_steps == 0)
    throw std::invalid_argument("grad check sizes must be positive");
  if (spec.vocab_in < 2) throw std::invalid_argument("grad check needs at least two input tokens");
  Rng rng(spec.seed);
  model::ModelConfig cfg;
  cfg.variant = spec.variant;
  cfg.vocab_in = spec.vocab_in;
  cfg.vocab_out = spec.vocab_out;
  cfg.d_w = spec.d_w;
  cfg.d_q = spec.d_h;
  cfg.d_v = spec.d_h;
  cfg.hidden = spec.hidden;
  cfg.track_dims = {{"2d", spec.dim_2d}, {"3d", spec.dim_3d}};
  auto params = model::ModelParams::init(cfg, rng.next_u64());

  std::map<std::string, std::vector<FeatureTrack>> tracks;
  for (const auto& name : model::variant_tracks(spec.variant)) {
    auto& list = tracks[name];
    for (std::size_t b = 0; b < spec.batch; ++b) {
      FeatureTrack t;
      t.timesteps = static_cast<std::uint32_t>(spec.track_steps);
      t.dim = cfg.track_dims.at(name);
      for (std::size_t i = 0; i < std::size_t{t.timesteps} * t.dim; ++i)
        t.values.push_back(static_cast<float>(rng.normal()));
      list.push_back(std::move(t));
    }
  }

  // Tokens at one position are distinct across the batch when the vocabulary
  // allows it. Repeated rows make batch norm nearly constant in its input.
  std::vector<std::vector<std::int64_t>> column_tokens(spec.question_len);
  for (auto& col : column_tokens) {
    std::vector<std::int64_t> ids;
    for (std::size_t v = 1; v < spec.vocab_in; ++v) ids.push_back(static_cast<std::int64_t>(v));
    rng.shuffle(ids);
    for (std::size_t b = 0; b < spec.batch; ++b) col.push_back(ids[b % ids.size()]);
  }

  model::Batch batch;
  for (std::size_t b = 0; b < spec.batch; ++b) {
    gen::EncodedQuestion q;
    // Middle blank for all but the last row, which blanks the first token, so
    // padding masks are exercised. A step with exactly two active rows is
    // avoided: batch norm over two rows is nearly flat in its input and the
    // true gradient drops below finite-difference round-off.
    q.blank_index = b + 1 < spec.batch ? spec.question_len / 2 : 0;
    for (std::size_t i = 0; i < spec.question_len; ++i)
      q.ids.push_back(i == q.blank_index ? gen::kBlankId : column_tokens[i][b]);
    q.answer_id = static_cast<std::int64_t>(rng.uniform_int(spec.vocab_out));
    batch.questions.push_back(std::move(q));
    for (auto& [name, list] : tracks) {
      std::vector<std::size_t> idx(spec.track_steps);
      for (std::size_t t = 0; t < idx.size(); ++t) idx[t] = t;
      batch.video[name].push_back({&list[b], idx});
    }
  }

  auto weights = params.parameters();
  return grad_check([&] { return loss(params, batch, model::Mode::train); }, weights, spec.h);
}

}  // namespace fib::train
