#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fib/fibgen.hpp"
#include "fib/model.hpp"
#include "fib/trainer.hpp"

namespace fib::eval {

// Fraction of positions where prediction equals gold. Throws
// std::invalid_argument on empty or mismatched inputs.
double accuracy(std::span<const std::int64_t> predictions, std::span<const std::int64_t> golds);

// Percentage with one decimal, e.g. 2/3 -> "66.7".
std::string percent(double fraction);

struct AnswerStats {
  std::size_t gold = 0;
  std::size_t correct = 0;
  double tpr = 0.0;
  std::size_t train_count = 0;
};

struct TprReport {
  // Keyed by answer token; answers absent from the golds are not listed.
  std::map<std::string, AnswerStats> per_answer;
  // Spearman correlation of TPR against training count; absent when fewer
  // than two answers or either side is constant.
  std::optional<double> spearman;
};

// Training counts come from the output side of the vocabulary.
TprReport per_answer_tpr(std::span<const std::int64_t> predictions, std::span<const std::int64_t> golds,
                         const gen::Vocabulary& vocab);

// Spearman rank correlation with average ranks for ties.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct MajorityBaseline {
  std::string answer;
  std::size_t count = 0;
};

// Most frequent answer; ties go to the lexicographically smallest.
MajorityBaseline majority_baseline(const std::vector<gen::FibExample>& train_examples);
double baseline_accuracy(const MajorityBaseline& b, const std::vector<gen::FibExample>& examples);

struct EvalReport {
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
  TprReport tpr;
  std::size_t frames = 0;
  std::string split;
  std::string variant;
};

EvalReport evaluate(const model::ModelParams& params, const std::vector<gen::FibExample>& examples,
                    const gen::Vocabulary& vocab, const Corpus& corpus, Split split, std::size_t frames);

std::string report_json(const EvalReport& r);

struct SweepPoint {
  std::size_t frames = 0;
  double accuracy = 0.0;
};

// Eval-mode accuracy of a video checkpoint at each frame count.
std::vector<SweepPoint> frame_sweep(const model::ModelParams& params, const train::EncodedSet& set,
                                    std::span<const std::size_t> frame_counts);

struct ModelAnswers {
  std::string name;
  std::vector<std::string> answers;
};

inline constexpr std::string_view kGroundTruth = "ground_truth";

// Writes `csv` with header qid,question,clip,A,B,... and one row per example,
// rows and answer columns shuffled by `seed`; `key` maps every row's column
// letters to model names (ground truth included).
void export_human_eval(const std::vector<gen::FibExample>& examples, const std::vector<ModelAnswers>& models,
                       const std::filesystem::path& csv, const std::filesystem::path& key, std::uint64_t seed);

struct ChoiceResult {
  // qid -> model whose answer was chosen for that row.
  std::map<std::string, std::string> chosen;
  // model -> number of rows where it was chosen.
  std::map<std::string, std::size_t> wins;
  std::size_t rows = 0;
};

// Reads an export with one judgment column per worker appended; a judgment
// is the column letter the worker picked. The row's choice is the letter
// given by two or more workers, else a seeded random pick among the
// judgments.
ChoiceResult import_human_eval(const std::filesystem::path& csv, const std::filesystem::path& key,
                               std::uint64_t seed);

// Quality tiers for rating answers, best first.
std::vector<std::string> default_tiers();

struct TierResult {
  // model -> tier label -> number of rows.
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  std::size_t rows = 0;
};

// Like import_human_eval, but every judgment cell lists one tier label per
// answer column, separated by ';', in column order. Per row and model the
// tier given by two or more workers wins, else a seeded random pick.
TierResult import_tier_ratings(const std::filesystem::path& csv, const std::filesystem::path& key,
                               std::uint64_t seed, const std::vector<std::string>& tiers = default_tiers());

struct RunResult {
  std::string label;
  std::optional<double> val;
  std::optional<double> test;
  double fraction = 1.0;
};

// "Model Validation Test" header, then one "label val test" row per full-data
// run with percentages to one decimal ("-" when missing). Runs with
// fraction < 1 add a per-label series of "fraction val test" lines.
std::string report(std::span<const RunResult> runs);

// Minimal RFC 4180 helpers.
std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace fib::eval
