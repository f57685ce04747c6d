#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fib/corpus.hpp"
#include "fib/textpipe.hpp"

namespace fib::gen {

inline constexpr std::string_view kBlank = "_____";

struct FibExample {
  std::string qid;
  std::string clip_id;
  std::vector<std::string> tokens;
  std::size_t blank_index = 0;
  std::string answer;
  // Coarse tag of the answer in its source sentence.
  text::Tag answer_tag = text::Tag::NOUN;

  // Tokens joined by spaces with tokens[blank_index] replaced by kBlank.
  std::string render() const;
  bool operator==(const FibExample&) const = default;
};

// Sorted so iteration is deterministic.
using TokenCounts = std::map<std::string, std::size_t, std::less<>>;

// Lowercased tokens of a clip: the pre-tagged tokens when present, else the
// wordpunct tokenization of the annotation.
std::vector<std::string> clip_tokens(const Clip& clip);
std::vector<text::TaggedToken> clip_tagged(const Clip& clip, const text::Lexicon& lexicon);

// Token occurrences over training-split annotations only.
TokenCounts count_train_tokens(const Corpus& corpus);

// Ascending indices of NOUN/VERB/ADJ/ADV tokens not in the stoplist.
std::vector<std::size_t> extract_candidates(const std::vector<text::TaggedToken>& tagged,
                                            const text::Stoplist& stoplist);

struct GenerateOptions {
  std::size_t min_count = 50;
};

// One example per candidate whose training count is >= min_count, for every
// clip in corpus order, then by blank position. qid = clip_id + "#" + k
// zero-padded to three digits.
std::vector<FibExample> generate(const Corpus& corpus, const text::Lexicon& lexicon,
                                 const text::Stoplist& stoplist, GenerateOptions opts = {});

std::string make_qid(std::string_view clip_id, std::size_t k);

void save_dataset(const std::vector<FibExample>& examples, const std::filesystem::path& path);
std::vector<FibExample> load_dataset(const std::filesystem::path& path);

// Dense id map for one side of the vocabulary; ids follow (count desc,
// token asc).
class VocabSide {
 public:
  void push(std::string token, std::size_t count);
  std::optional<std::int64_t> id(std::string_view token) const;
  const std::string& token(std::int64_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t count(std::int64_t id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::int64_t> ids_;
};

class Vocabulary {
 public:
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::int64_t kUnkId = 0;

  VocabSide input;
  VocabSide output;

  std::int64_t input_id(std::string_view token) const;
  std::optional<std::int64_t> output_id(std::string_view token) const { return output.id(token); }
};

struct VocabOptions {
  std::size_t input_min = 1;
  std::size_t output_min = 1;
};

// Input side: UNK at id 0 (its count is the number of training tokens it
// absorbs), then tokens with train count >= input_min. Output side: tokens
// with train count >= output_min plus every answer in examples.
Vocabulary build_vocab(const std::vector<FibExample>& examples, const Corpus& corpus,
                       VocabOptions opts = {});

// Header "#fib-vocab<TAB>1<TAB>input=N<TAB>output=M", then N input lines and
// M output lines of "token<TAB>id<TAB>count".
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

inline constexpr std::int64_t kBlankId = -1;

struct EncodedQuestion {
  // Input ids per token; the blank position holds kBlankId.
  std::vector<std::int64_t> ids;
  std::size_t blank_index = 0;
  std::int64_t answer_id = 0;
};

// Throws std::invalid_argument when the answer is not in the output side.
EncodedQuestion encode_question(const FibExample& example, const Vocabulary& vocab);

struct HistogramBin {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::size_t answers = 0;  // distinct answers whose frequency falls in [lo, hi]
  bool pooled = false;
};

struct DatasetStats {
  std::size_t total = 0;
  std::array<std::size_t, 3> per_split{};
  std::array<std::size_t, 3> clips_per_split{};
  std::array<double, 3> mean_question_len{};
  double mean_question_len_all = 0.0;
  // Examples per annotation over all splits.
  double questions_per_annotation = 0.0;
  std::size_t distinct_answers = 0;
  std::vector<HistogramBin> histogram;
  std::map<text::Tag, std::size_t> pos_counts;
  std::map<text::Tag, std::vector<std::pair<std::string, std::size_t>>> pos_top;
  std::vector<std::pair<std::string, std::size_t>> top;
};

struct StatsOptions {
  // Restrict answer histogram/POS/top-k to one split (Fig.-style training
  // statistics); nullopt uses every example.
  std::optional<Split> answer_split;
  // The most frequent answers are pooled into one final bin when there are
  // more distinct answers than this.
  std::size_t pool_top = 20;
  std::size_t bin_width = 1;
  std::size_t top_k = 20;
  std::size_t pos_top_k = 5;
};

DatasetStats stats(const std::vector<FibExample>& examples, const Corpus& corpus,
                   StatsOptions opts = {});

std::string stats_json(const DatasetStats& s);
std::string stats_table(const DatasetStats& s);

}  // namespace fib::gen
