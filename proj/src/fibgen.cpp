#include "fib/fibgen.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace fib::gen {

namespace {

std::size_t split_idx(Split s) { return static_cast<std::size_t>(s); }

bool is_candidate_tag(text::Tag t) {
  return t == text::Tag::NOUN || t == text::Tag::VERB || t == text::Tag::ADJ || t == text::Tag::ADV;
}

std::vector<std::pair<std::string, std::size_t>> top_by_count(
    const std::map<std::string, std::size_t>& counts, std::size_t k) {
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (v.size() > k) v.resize(k);
  return v;
}

}  // namespace

std::string FibExample::render() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += i == blank_index ? std::string(kBlank) : tokens[i];
  }
  return out;
}

std::vector<std::string> clip_tokens(const Clip& clip) {
  if (clip.pretagged) {
    std::vector<std::string> out;
    out.reserve(clip.pretagged->size());
    for (const auto& t : *clip.pretagged) out.push_back(t.lower);
    return out;
  }
  return text::tokenize_wordpunct(clip.annotation);
}

std::vector<text::TaggedToken> clip_tagged(const Clip& clip, const text::Lexicon& lexicon) {
  if (clip.pretagged) return *clip.pretagged;
  return text::tag(text::tokenize_wordpunct(clip.annotation), lexicon);
}

TokenCounts count_train_tokens(const Corpus& corpus) {
  TokenCounts counts;
  for (const auto& c : corpus.clips) {
    if (c.split != Split::train) continue;
    for (auto& t : clip_tokens(c)) ++counts[std::move(t)];
  }
  return counts;
}

std::vector<std::size_t> extract_candidates(const std::vector<text::TaggedToken>& tagged,
                                            const text::Stoplist& stoplist) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tagged.size(); ++i)
    if (is_candidate_tag(tagged[i].tag) && !stoplist.contains(tagged[i].lower)) out.push_back(i);
  return out;
}

std::string make_qid(std::string_view clip_id, std::size_t k) {
  std::ostringstream os;
  os << clip_id << '#' << std::setw(3) << std::setfill('0') << k;
  return os.str();
}

std::vector<FibExample> generate(const Corpus& corpus, const text::Lexicon& lexicon,
                                 const text::Stoplist& stoplist, GenerateOptions opts) {
  if (opts.min_count < 1) throw std::invalid_argument("generate: min_count must be >= 1");
  const auto counts = count_train_tokens(corpus);
  std::vector<std::vector<FibExample>> per_clip(corpus.clips.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.clips.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t ci = 0; ci < n; ++ci) {
    const auto& clip = corpus.clips[static_cast<std::size_t>(ci)];
    const auto tagged = clip_tagged(clip, lexicon);
    std::vector<std::string> tokens;
    tokens.reserve(tagged.size());
    for (const auto& t : tagged) tokens.push_back(t.lower);
    for (std::size_t k : extract_candidates(tagged, stoplist)) {
      auto it = counts.find(tagged[k].lower);
      if (it == counts.end() || it->second < opts.min_count) continue;
      per_clip[static_cast<std::size_t>(ci)].push_back(
          {make_qid(clip.clip_id, k), clip.clip_id, tokens, k, tagged[k].lower, tagged[k].tag});
    }
  }
  std::vector<FibExample> out;
  for (auto& v : per_clip)
    for (auto& e : v) out.push_back(std::move(e));
  return out;
}

void save_dataset(const std::vector<FibExample>& examples, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const auto& e : examples) {
    nlohmann::ordered_json rec;
    rec["qid"] = e.qid;
    rec["clip_id"] = e.clip_id;
    rec["tokens"] = e.tokens;
    rec["blank_index"] = e.blank_index;
    rec["answer"] = e.answer;
    rec["tag"] = text::tag_name(e.answer_tag);
    os << rec.dump() << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<FibExample> load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset: " + path.string());
  std::vector<FibExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      FibExample e;
      e.qid = rec.at("qid").get<std::string>();
      e.clip_id = rec.at("clip_id").get<std::string>();
      e.tokens = rec.at("tokens").get<std::vector<std::string>>();
      e.blank_index = rec.at("blank_index").get<std::size_t>();
      e.answer = rec.at("answer").get<std::string>();
      if (rec.contains("tag")) {
        const auto t = text::parse_tag(rec["tag"].get<std::string>());
        if (!t) throw DataError("unknown tag");
        e.answer_tag = *t;
      }
      if (e.blank_index >= e.tokens.size() || e.tokens[e.blank_index] != e.answer)
        throw DataError("blank_index does not point at the answer");
      out.push_back(std::move(e));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
  }
  return out;
}

void VocabSide::push(std::string token, std::size_t count) {
  const auto id = static_cast<std::int64_t>(tokens_.size());
  if (!ids_.emplace(token, id).second) throw std::invalid_argument("duplicate vocabulary token '" + token + "'");
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
}

std::optional<std::int64_t> VocabSide::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::int64_t Vocabulary::input_id(std::string_view token) const {
  return input.id(token).value_or(kUnkId);
}

Vocabulary build_vocab(const std::vector<FibExample>& examples, const Corpus& corpus, VocabOptions opts) {
  if (opts.output_min < 1) throw std::invalid_argument("build_vocab: output_min must be >= 1");
  if (opts.input_min < 1) throw std::invalid_argument("build_vocab: input_min must be >= 1");
  const auto counts = count_train_tokens(corpus);

  auto ordered = [](std::vector<std::pair<std::string, std::size_t>> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return v;
  };

  Vocabulary vocab;
  std::vector<std::pair<std::string, std::size_t>> in;
  std::size_t unk_count = 0;
  for (const auto& [tok, c] : counts) {
    if (c >= opts.input_min && tok != Vocabulary::kUnk)
      in.emplace_back(tok, c);
    else
      unk_count += c;
  }
  vocab.input.push(std::string(Vocabulary::kUnk), unk_count);
  for (auto& [tok, c] : ordered(std::move(in))) vocab.input.push(std::move(tok), c);

  std::map<std::string, std::size_t> out_set;
  for (const auto& [tok, c] : counts)
    if (c >= opts.output_min) out_set.emplace(tok, c);
  for (const auto& e : examples) {
    auto it = counts.find(e.answer);
    out_set.emplace(e.answer, it == counts.end() ? 0 : it->second);
  }
  for (auto& [tok, c] : ordered({out_set.begin(), out_set.end()})) vocab.output.push(std::move(tok), c);
  return vocab;
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "#fib-vocab\t1\tinput=" << vocab.input.size() << "\toutput=" << vocab.output.size() << '\n';
  for (const auto* side : {&vocab.input, &vocab.output})
    for (std::size_t i = 0; i < side->size(); ++i)
      os << side->tokens()[i] << '\t' << i << '\t' << side->counts()[i] << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open vocabulary: " + path.string());
  std::string header;
  std::getline(is, header);
  std::size_t n_in = 0, n_out = 0;
  if (std::sscanf(header.c_str(), "#fib-vocab\t1\tinput=%zu\toutput=%zu", &n_in, &n_out) != 2)
    throw DataError(path.string() + ": bad vocabulary header");
  Vocabulary v;
  std::string line;
  for (std::size_t i = 0; i < n_in + n_out; ++i) {
    if (!std::getline(is, line)) throw DataError(path.string() + ": truncated vocabulary");
    std::istringstream ls(line);
    std::string tok;
    std::size_t id = 0, count = 0;
    if (!std::getline(ls, tok, '\t') || !(ls >> id >> count))
      throw DataError(path.string() + ":" + std::to_string(i + 2) + ": expected token<TAB>id<TAB>count");
    auto& side = i < n_in ? v.input : v.output;
    if (id != side.size()) throw DataError(path.string() + ":" + std::to_string(i + 2) + ": ids must be dense");
    side.push(std::move(tok), count);
  }
  if (n_in == 0 || v.input.token(0) != Vocabulary::kUnk)
    throw DataError(path.string() + ": input side must start with " + std::string(Vocabulary::kUnk));
  return v;
}

EncodedQuestion encode_question(const FibExample& example, const Vocabulary& vocab) {
  const auto ans = vocab.output_id(example.answer);
  if (!ans)
    throw std::invalid_argument("answer '" + example.answer + "' of " + example.qid +
                                " is not in the output vocabulary");
  if (example.blank_index >= example.tokens.size())
    throw std::invalid_argument("blank index out of range in " + example.qid);
  EncodedQuestion q;
  q.blank_index = example.blank_index;
  q.answer_id = *ans;
  q.ids.reserve(example.tokens.size());
  for (std::size_t i = 0; i < example.tokens.size(); ++i)
    q.ids.push_back(i == example.blank_index ? kBlankId : vocab.input_id(example.tokens[i]));
  return q;
}

DatasetStats stats(const std::vector<FibExample>& examples, const Corpus& corpus, StatsOptions opts) {
  DatasetStats s;
  for (const auto& c : corpus.clips) ++s.clips_per_split[split_idx(c.split)];

  std::array<double, 3> len_sum{};
  double len_all = 0.0;
  std::map<std::string, std::size_t> answers;
  std::map<text::Tag, std::map<std::string, std::size_t>> by_tag;
  for (const auto& e : examples) {
    const auto ci = corpus.find(e.clip_id);
    if (!ci) throw DataError("example " + e.qid + " references unknown clip '" + e.clip_id + "'");
    const Split sp = corpus.clips[*ci].split;
    ++s.per_split[split_idx(sp)];
    len_sum[split_idx(sp)] += static_cast<double>(e.tokens.size());
    len_all += static_cast<double>(e.tokens.size());
    ++s.total;
    if (opts.answer_split && *opts.answer_split != sp) continue;
    ++answers[e.answer];
    ++s.pos_counts[e.answer_tag];
    ++by_tag[e.answer_tag][e.answer];
  }
  for (std::size_t i = 0; i < 3; ++i)
    s.mean_question_len[i] = s.per_split[i] ? len_sum[i] / static_cast<double>(s.per_split[i]) : 0.0;
  s.mean_question_len_all = s.total ? len_all / static_cast<double>(s.total) : 0.0;
  s.questions_per_annotation =
      corpus.clips.empty() ? 0.0 : static_cast<double>(s.total) / static_cast<double>(corpus.clips.size());
  s.distinct_answers = answers.size();
  s.top = top_by_count(answers, opts.top_k);
  for (const auto& [tag, m] : by_tag) s.pos_top[tag] = top_by_count(m, opts.pos_top_k);

  // Frequency histogram; the head answers share one final bin.
  auto ranked = top_by_count(answers, answers.size());
  std::size_t pooled_n = 0;
  if (ranked.size() > opts.pool_top) pooled_n = opts.pool_top;
  const std::size_t width = std::max<std::size_t>(1, opts.bin_width);
  std::map<std::size_t, std::size_t> bins;
  for (std::size_t i = pooled_n; i < ranked.size(); ++i) ++bins[(ranked[i].second - 1) / width];
  for (const auto& [b, n] : bins) s.histogram.push_back({b * width + 1, (b + 1) * width, n, false});
  if (pooled_n > 0)
    s.histogram.push_back({ranked[pooled_n - 1].second, ranked.front().second, pooled_n, true});
  return s;
}

std::string stats_json(const DatasetStats& s) {
  nlohmann::ordered_json j;
  j["total"] = s.total;
  for (Split sp : {Split::train, Split::val, Split::test}) {
    const auto i = split_idx(sp);
    j["splits"][std::string(split_name(sp))] = {{"examples", s.per_split[i]},
                                                {"clips", s.clips_per_split[i]},
                                                {"mean_question_len", s.mean_question_len[i]}};
  }
  j["mean_question_len"] = s.mean_question_len_all;
  j["questions_per_annotation"] = s.questions_per_annotation;
  j["distinct_answers"] = s.distinct_answers;
  j["histogram"] = nlohmann::ordered_json::array();
  for (const auto& b : s.histogram)
    j["histogram"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"answers", b.answers}, {"pooled", b.pooled}});
  for (const auto& [tag, n] : s.pos_counts) {
    auto& pj = j["pos"][std::string(text::tag_name(tag))];
    pj["count"] = n;
    pj["top"] = nlohmann::ordered_json::array();
    if (auto it = s.pos_top.find(tag); it != s.pos_top.end())
      for (const auto& [w, c] : it->second) pj["top"].push_back({w, c});
  }
  j["top"] = nlohmann::ordered_json::array();
  for (const auto& [w, c] : s.top) j["top"].push_back({w, c});
  return j.dump(2);
}

std::string stats_table(const DatasetStats& s) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "" << std::right << std::setw(10) << "train" << std::setw(10)
     << "val" << std::setw(10) << "test" << std::setw(10) << "total" << '\n';
  os << std::left << std::setw(22) << "#clips" << std::right;
  for (auto n : s.clips_per_split) os << std::setw(10) << n;
  os << std::setw(10) << (s.clips_per_split[0] + s.clips_per_split[1] + s.clips_per_split[2]) << '\n';
  os << std::left << std::setw(22) << "#examples" << std::right;
  for (auto n : s.per_split) os << std::setw(10) << n;
  os << std::setw(10) << s.total << '\n';
  os << std::left << std::setw(22) << "mean #words in Q" << std::right << std::fixed << std::setprecision(2);
  for (auto m : s.mean_question_len) os << std::setw(10) << m;
  os << std::setw(10) << s.mean_question_len_all << '\n';
  os << "questions per annotation: " << s.questions_per_annotation << '\n';
  os << "distinct answers: " << s.distinct_answers << '\n';
  os << "answer frequency histogram (frequency range: #answers)\n";
  for (const auto& b : s.histogram) {
    os << "  [" << b.lo << " : " << b.hi << "]" << (b.pooled ? " (pooled head)" : "") << ": " << b.answers
       << '\n';
  }
  os << "answers by POS\n";
  for (const auto& [tag, n] : s.pos_counts) {
    os << "  " << std::left << std::setw(6) << text::tag_name(tag) << std::right << std::setw(9) << n;
    if (auto it = s.pos_top.find(tag); it != s.pos_top.end())
      for (const auto& [w, c] : it->second) os << "  " << w << ":" << c;
    os << '\n';
  }
  os << "top answers\n";
  for (const auto& [w, c] : s.top) os << "  " << std::left << std::setw(16) << w << std::right << c << '\n';
  return os.str();
}

}  // namespace fib::gen
