// fib: fill-in-the-blank pipeline driver.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fib/corpus.hpp"
#include "fib/evaluator.hpp"
#include "fib/fibgen.hpp"
#include "fib/kernels.hpp"
#include "fib/model.hpp"
#include "fib/textpipe.hpp"
#include "fib/trainer.hpp"
#include "json.hpp"

#ifndef FIB_DEFAULT_LEXICON
#define FIB_DEFAULT_LEXICON "lexicon.tsv"
#endif

namespace {

using namespace fib;

constexpr std::uint64_t kDefaultSeed = 1;

// Bad flag values discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataArgs {
  std::string corpus;
  std::string dataset;
  std::string vocab;
  std::size_t input_min = 1;
  std::size_t output_min = 1;
};

void add_data_flags(CLI::App* cmd, DataArgs& a, bool need_dataset = true) {
  cmd->add_option("--corpus", a.corpus, "Corpus JSONL file")->required();
  auto* d = cmd->add_option("--dataset", a.dataset, "Dataset JSONL written by generate");
  if (need_dataset) d->required();
}

void add_vocab_flags(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--vocab", a.vocab, "Vocabulary file; built from the dataset when omitted");
  cmd->add_option("--input-min", a.input_min, "Minimum training count for input tokens");
  cmd->add_option("--output-min", a.output_min, "Minimum training count for output tokens");
}

Split parse_split_flag(const std::string& s, const char* flag) {
  const auto sp = parse_split(s);
  if (!sp) throw UsageError(std::string(flag) + ": unknown split '" + s + "'");
  return *sp;
}

gen::Vocabulary vocab_for(const DataArgs& a, const std::vector<gen::FibExample>& examples, const Corpus& corpus) {
  if (!a.vocab.empty()) return gen::load_vocab(a.vocab);
  return gen::build_vocab(examples, corpus, {a.input_min, a.output_min});
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

std::vector<gen::FibExample> split_examples(const std::vector<gen::FibExample>& all, const Corpus& corpus,
                                            Split split) {
  std::vector<gen::FibExample> out;
  for (const auto& ex : all) {
    const auto idx = corpus.find(ex.clip_id);
    if (idx && corpus.clips[*idx].split == split) out.push_back(ex);
  }
  return out;
}

std::string display_label(const std::string& path, const model::ModelParams& m) {
  return std::string(model::variant_name(m.config.variant)) + " (" + std::filesystem::path(path).filename().string() +
         ")";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fill-in-the-blank question generation, training and evaluation"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for parallel kernels")->envname("FIB_THREADS")
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with feature tracks");
  std::size_t synth_n = 2000;
  std::string synth_signal = "feature-argmax", synth_out;
  std::uint64_t synth_seed = kDefaultSeed;
  SynthOptions synth_opts;
  synth->add_option("--n", synth_n, "Number of clips")->check(CLI::PositiveNumber);
  synth->add_option("--signal", synth_signal, "Answer signal: none or feature-argmax");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--dim-2d", synth_opts.dim_2d, "2d track width");
  synth->add_option("--dim-3d", synth_opts.dim_3d, "3d track width");
  synth->add_option("--min-frames", synth_opts.min_frames, "Shortest 2d track");
  synth->add_option("--max-frames", synth_opts.max_frames, "Longest 2d track");
  synth->add_option("--out", synth_out, "Output corpus JSONL; tracks go to tracks/ beside it")->required();

  // generate
  auto* generate = app.add_subcommand("generate", "Generate fill-in-the-blank examples from a corpus");
  std::string gen_corpus, gen_out, gen_lexicon = FIB_DEFAULT_LEXICON, gen_stoplist;
  std::size_t gen_min_count = 50;
  generate->add_option("--corpus", gen_corpus, "Corpus JSONL file")->required();
  generate->add_option("--lexicon", gen_lexicon, "POS lexicon (word<TAB>TAG)");
  generate->add_option("--stoplist", gen_stoplist, "Words never blanked, one per line");
  generate->add_option("--min-count", gen_min_count, "Minimum training count of an answer");
  generate->add_option("--out", gen_out, "Output dataset JSONL")->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  DataArgs stats_data;
  add_data_flags(stats_cmd, stats_data);
  std::string stats_answer_split, stats_json_out;
  gen::StatsOptions stats_opts;
  stats_cmd->add_option("--answer-split", stats_answer_split, "Restrict answer statistics to one split");
  stats_cmd->add_option("--bin-width", stats_opts.bin_width, "Histogram bin width")->check(CLI::PositiveNumber);
  stats_cmd->add_option("--pool-top", stats_opts.pool_top, "Pool the head of the histogram beyond this many answers");
  stats_cmd->add_option("--top-k", stats_opts.top_k, "Most frequent answers to list");
  stats_cmd->add_option("--json", stats_json_out, "Also write the statistics as JSON");

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "Build input/output vocabularies");
  DataArgs vocab_data;
  add_data_flags(vocab_cmd, vocab_data);
  std::string vocab_out;
  vocab_cmd->add_option("--input-min", vocab_data.input_min, "Minimum training count for input tokens");
  vocab_cmd->add_option("--output-min", vocab_data.output_min, "Minimum training count for output tokens");
  vocab_cmd->add_option("--out", vocab_out, "Output vocabulary file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  DataArgs train_data;
  add_data_flags(train_cmd, train_data);
  add_vocab_flags(train_cmd, train_data);
  train::TrainConfig tc;
  std::string train_variant = "text-only", train_out, train_log, train_finetune, train_vocab_out;
  bool train_wallclock = false;
  std::optional<double> train_target;
  train_cmd->add_option("--variant", train_variant, "text-only, text+2d, text+3d or text+2d+3d");
  train_cmd->add_option("--lr", tc.adam.lr, "Adam learning rate");
  train_cmd->add_option("--beta1", tc.adam.beta1, "Adam beta1");
  train_cmd->add_option("--beta2", tc.adam.beta2, "Adam beta2");
  train_cmd->add_option("--adam-eps", tc.adam.eps, "Adam epsilon");
  train_cmd->add_option("--batch", tc.batch_size, "Minibatch size");
  train_cmd->add_option("--epochs", tc.epochs, "Training epochs");
  train_cmd->add_option("--frames", tc.frames, "Frames sampled per track");
  train_cmd->add_option("--seed", tc.seed, "Random seed");
  train_cmd->add_option("--fraction", tc.fraction, "Fraction of training clips to use");
  train_cmd->add_option("--d-w", tc.d_w, "Word embedding width");
  train_cmd->add_option("--d-q", tc.d_q, "Question encoder state width");
  train_cmd->add_option("--d-v", tc.d_v, "Video encoder state width");
  train_cmd->add_option("--hidden", tc.hidden, "Classifier hidden width");
  train_cmd->add_option("--clip", tc.clip_norm, "Gradient global-norm clip");
  train_cmd->add_option("--target-train-acc", train_target, "Stop once training accuracy reaches this");
  train_cmd->add_option("--finetune-from", train_finetune, "Text-only checkpoint to initialize from");
  train_cmd->add_option("--out", train_out, "Output checkpoint")->required();
  train_cmd->add_option("--log", train_log, "Epoch log (JSONL)");
  train_cmd->add_flag("--log-wallclock", train_wallclock, "Include wall-clock seconds in the epoch log");
  train_cmd->add_option("--vocab-out", train_vocab_out, "Write the vocabulary used for training");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints");
  DataArgs eval_data;
  add_data_flags(eval_cmd, eval_data);
  add_vocab_flags(eval_cmd, eval_data);
  std::vector<std::string> eval_models;
  std::string eval_split = "both", eval_out, eval_pred;
  std::size_t eval_frames = 25;
  eval_cmd->add_option("--model", eval_models, "Checkpoint (repeatable)")->required();
  eval_cmd->add_option("--split", eval_split, "val, test or both");
  eval_cmd->add_option("--frames", eval_frames, "Frames per track")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval_out, "Write per-answer reports as JSON");
  eval_cmd->add_option("--predictions", eval_pred, "Write qid/gold/prediction lines for the first model");

  // sweep-frames
  auto* sweep = app.add_subcommand("sweep-frames", "Accuracy as a function of sampled frames");
  DataArgs sweep_data;
  add_data_flags(sweep, sweep_data);
  add_vocab_flags(sweep, sweep_data);
  std::string sweep_model, sweep_split = "val";
  std::vector<std::size_t> sweep_ks{1, 2, 5, 10, 15, 20, 25};
  sweep->add_option("--model", sweep_model, "Video checkpoint")->required();
  sweep->add_option("--split", sweep_split, "Split to evaluate");
  sweep->add_option("--frames", sweep_ks, "Frame counts")->delimiter(',');

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Check model gradients against finite differences");
  train::GradCheckSpec gc;
  std::string gc_variant = "text+2d+3d";
  double gc_tol = 1e-4;
  gradcheck->add_option("--dw", gc.d_w, "Word embedding width")->check(CLI::PositiveNumber);
  gradcheck->add_option("--dh", gc.d_h, "Recurrent state width")->check(CLI::PositiveNumber);
  gradcheck->add_option("--hidden", gc.hidden, "Classifier hidden width")->check(CLI::PositiveNumber);
  gradcheck->add_option("--vocab-in", gc.vocab_in, "Input vocabulary size");
  gradcheck->add_option("--vocab-out", gc.vocab_out, "Output vocabulary size")->check(CLI::PositiveNumber);
  gradcheck->add_option("--batch", gc.batch, "Batch size")->check(CLI::PositiveNumber);
  gradcheck->add_option("--question-len", gc.question_len, "Question length")->check(CLI::PositiveNumber);
  gradcheck->add_option("--steps", gc.track_steps, "Frames per track")->check(CLI::PositiveNumber);
  gradcheck->add_option("--variant", gc_variant, "Model variant");
  gradcheck->add_option("--seed", gc.seed, "Random seed");
  gradcheck->add_option("--fd-step", gc.h, "Finite-difference step");
  gradcheck->add_option("--tol", gc_tol, "Pass threshold on max relative error");

  // export-human-eval
  auto* exp = app.add_subcommand("export-human-eval", "Write a blinded answer-comparison sheet");
  DataArgs exp_data;
  add_data_flags(exp, exp_data);
  add_vocab_flags(exp, exp_data);
  std::vector<std::string> exp_models, exp_answers;
  std::string exp_split = "test", exp_out, exp_key;
  std::size_t exp_limit = 0, exp_frames = 25;
  std::uint64_t exp_seed = kDefaultSeed;
  exp->add_option("--model", exp_models, "name=checkpoint (repeatable)");
  exp->add_option("--answers", exp_answers, "name=file with one answer per example (repeatable)");
  exp->add_option("--split", exp_split, "Split to export");
  exp->add_option("--limit", exp_limit, "Export only the first N examples (0 = all)");
  exp->add_option("--frames", exp_frames, "Frames per track")->check(CLI::PositiveNumber);
  exp->add_option("--seed", exp_seed, "Shuffle seed");
  exp->add_option("--out", exp_out, "Output CSV")->required();
  exp->add_option("--key", exp_key, "Output column key CSV")->required();

  // import-human-eval
  auto* imp = app.add_subcommand("import-human-eval", "Tally judged answer-comparison sheets");
  std::string imp_csv, imp_key, imp_mode = "choice";
  std::uint64_t imp_seed = kDefaultSeed;
  imp->add_option("--judged", imp_csv, "Exported CSV with judgment columns appended")->required();
  imp->add_option("--key", imp_key, "Column key CSV")->required();
  imp->add_option("--mode", imp_mode, "choice (column letters) or tiers (';'-separated tier labels)");
  imp->add_option("--seed", imp_seed, "Tie-break seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  kernels::set_num_threads(threads);

  try {
    if (*synth) {
      const auto sig = parse_signal(synth_signal);
      if (!sig) throw UsageError("--signal: expected none or feature-argmax");
      auto corpus = synth_corpus(synth_n, *sig, synth_seed, synth_opts);
      save_corpus(corpus, synth_out);
      std::cerr << "wrote " << corpus.clips.size() << " clips to " << synth_out << "\n";
    } else if (*generate) {
      const auto lexicon = text::Lexicon::load(gen_lexicon);
      const auto stoplist = gen_stoplist.empty() ? text::Stoplist{} : text::load_stoplist(gen_stoplist);
      const auto corpus = load_corpus(gen_corpus, {.load_tracks = false});
      const auto examples = gen::generate(corpus, lexicon, stoplist, {gen_min_count});
      gen::save_dataset(examples, gen_out);
      std::cout << gen::stats_table(gen::stats(examples, corpus));
    } else if (*stats_cmd) {
      if (!stats_answer_split.empty()) stats_opts.answer_split = parse_split_flag(stats_answer_split, "--answer-split");
      const auto corpus = load_corpus(stats_data.corpus, {.load_tracks = false});
      const auto examples = gen::load_dataset(stats_data.dataset);
      const auto s = gen::stats(examples, corpus, stats_opts);
      std::cout << gen::stats_table(s);
      if (!stats_json_out.empty()) write_text(stats_json_out, gen::stats_json(s) + "\n");
    } else if (*vocab_cmd) {
      const auto corpus = load_corpus(vocab_data.corpus, {.load_tracks = false});
      const auto examples = gen::load_dataset(vocab_data.dataset);
      const auto v = gen::build_vocab(examples, corpus, {vocab_data.input_min, vocab_data.output_min});
      gen::save_vocab(v, vocab_out);
      std::cout << "input " << v.input.size() << " output " << v.output.size() << "\n";
    } else if (*train_cmd) {
      const auto variant = model::parse_variant(train_variant);
      if (!variant) throw UsageError("--variant: unknown variant '" + train_variant + "'");
      tc.variant = *variant;
      tc.target_train_acc = train_target;
      if (!train_finetune.empty()) tc.finetune_from = train_finetune;
      try {
        tc.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto corpus = load_corpus(train_data.corpus, {.load_tracks = tc.variant != model::Variant::text_only});
      const auto examples = gen::load_dataset(train_data.dataset);
      const auto vocab = vocab_for(train_data, examples, corpus);
      if (!train_vocab_out.empty()) gen::save_vocab(vocab, train_vocab_out);
      std::ofstream log;
      if (!train_log.empty()) {
        log.open(train_log, std::ios::binary);
        if (!log) throw DataError("cannot write " + train_log);
      }
      auto result = train::train(corpus, examples, vocab, tc, [&](const train::EpochRecord& r) {
        std::cerr << train::format_epoch(r, true) << "\n";
        if (log.is_open()) log << train::format_epoch(r, train_wallclock) << "\n" << std::flush;
      });
      model::save_model(result.params, train_out);
      std::cerr << "selected epoch " << result.selected_epoch << ", wrote " << train_out << "\n";
    } else if (*eval_cmd) {
      std::vector<Split> splits;
      if (eval_split == "both") splits = {Split::val, Split::test};
      else splits = {parse_split_flag(eval_split, "--split")};
      std::vector<model::ModelParams> models;
      bool any_video = false;
      for (const auto& path : eval_models) {
        models.push_back(model::load_model(path));
        any_video = any_video || models.back().config.variant != model::Variant::text_only;
      }
      const auto corpus = load_corpus(eval_data.corpus, {.load_tracks = any_video});
      const auto examples = gen::load_dataset(eval_data.dataset);
      const auto vocab = vocab_for(eval_data, examples, corpus);
      std::vector<eval::RunResult> runs;
      nlohmann::json all = nlohmann::json::array();
      for (std::size_t m = 0; m < models.size(); ++m) {
        if (models[m].config.vocab_in != vocab.input.size() || models[m].config.vocab_out != vocab.output.size())
          throw DataError(eval_models[m] + ": checkpoint vocabulary sizes do not match the vocabulary");
        eval::RunResult run;
        run.label = display_label(eval_models[m], models[m]);
        for (Split sp : splits) {
          const auto r = eval::evaluate(models[m], examples, vocab, corpus, sp, eval_frames);
          (sp == Split::val ? run.val : run.test) = r.accuracy;
          all.push_back(nlohmann::json::parse(eval::report_json(r)));
          all.back()["model"] = eval_models[m];
        }
        runs.push_back(run);
      }
      std::cout << eval::report(runs);
      if (!eval_out.empty()) write_text(eval_out, all.dump(2) + "\n");
      if (!eval_pred.empty()) {
        const auto set = train::encode_examples(examples, vocab, corpus, splits.front());
        const auto pred = train::predict_set(models.front(), set, eval_frames);
        std::ofstream out(eval_pred, std::ios::binary);
        if (!out) throw DataError("cannot write " + eval_pred);
        for (std::size_t i = 0; i < pred.size(); ++i) {
          nlohmann::ordered_json j{{"qid", set.qids[i]},
                                   {"gold", vocab.output.token(set.questions[i].answer_id)},
                                   {"pred", vocab.output.token(pred[i])}};
          out << j.dump() << "\n";
        }
      }
    } else if (*sweep) {
      const auto params = model::load_model(sweep_model);
      const auto corpus = load_corpus(sweep_data.corpus);
      const auto examples = gen::load_dataset(sweep_data.dataset);
      const auto vocab = vocab_for(sweep_data, examples, corpus);
      const auto set = train::encode_examples(examples, vocab, corpus, parse_split_flag(sweep_split, "--split"));
      if (set.size() == 0) throw DataError("no examples in split " + sweep_split);
      for (auto k : sweep_ks)
        if (k == 0) throw UsageError("--frames: frame counts must be positive");
      for (const auto& p : eval::frame_sweep(params, set, sweep_ks))
        std::cout << p.frames << " " << eval::percent(p.accuracy) << "\n";
    } else if (*gradcheck) {
      const auto variant = model::parse_variant(gc_variant);
      if (!variant) throw UsageError("--variant: unknown variant '" + gc_variant + "'");
      gc.variant = *variant;
      const auto r = train::model_grad_check(gc);
      std::printf("max relative error %.3e over %zu entries (param %zu, index %zu: analytic %.6e numeric %.6e)\n",
                  r.max_rel_error, r.entries, r.worst_param, r.worst_index, r.analytic, r.numeric);
      std::printf("finite-difference resolution %.3e, max abs error %.3e, max relative error %.3e over the %zu "
                  "entries above 1e5 x resolution\n",
                  r.fd_resolution, r.max_abs_error, r.max_rel_error_resolved, r.resolved_entries);
      return r.max_rel_error < gc_tol ? 0 : 2;
    } else if (*exp) {
      if (exp_models.empty() && exp_answers.empty()) throw UsageError("--model or --answers is required");
      const Split split = parse_split_flag(exp_split, "--split");
      const auto corpus = load_corpus(exp_data.corpus);
      const auto all = gen::load_dataset(exp_data.dataset);
      auto examples = split_examples(all, corpus, split);
      if (exp_limit > 0 && examples.size() > exp_limit) examples.resize(exp_limit);
      std::vector<eval::ModelAnswers> answers;
      auto split_pair = [](const std::string& s, const char* flag) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError(std::string(flag) + ": expected name=path");
        return std::pair{s.substr(0, eq), s.substr(eq + 1)};
      };
      if (!exp_models.empty()) {
        const auto vocab = vocab_for(exp_data, all, corpus);
        const auto set = train::encode_examples(examples, vocab, corpus);
        for (const auto& spec : exp_models) {
          const auto [name, path] = split_pair(spec, "--model");
          const auto params = model::load_model(path);
          eval::ModelAnswers ma{name, {}};
          for (auto id : train::predict_set(params, set, exp_frames)) ma.answers.push_back(vocab.output.token(id));
          answers.push_back(std::move(ma));
        }
      }
      for (const auto& spec : exp_answers) {
        const auto [name, path] = split_pair(spec, "--answers");
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path);
        eval::ModelAnswers ma{name, {}};
        for (std::string line; std::getline(in, line);) ma.answers.push_back(line);
        answers.push_back(std::move(ma));
      }
      eval::export_human_eval(examples, answers, exp_out, exp_key, exp_seed);
      std::cerr << "exported " << examples.size() << " rows\n";
    } else if (*imp) {
      if (imp_mode == "choice") {
        const auto r = eval::import_human_eval(imp_csv, imp_key, imp_seed);
        for (const auto& [name, wins] : r.wins)
          std::cout << name << " " << wins << " " << eval::percent(static_cast<double>(wins) / r.rows) << "\n";
      } else if (imp_mode == "tiers") {
        const auto r = eval::import_tier_ratings(imp_csv, imp_key, imp_seed);
        for (const auto& [name, tiers] : r.counts)
          for (const auto& [tier, n] : tiers) std::cout << name << "\t" << tier << "\t" << n << "\n";
      } else {
        throw UsageError("--mode: expected choice or tiers");
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
