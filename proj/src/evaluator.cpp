#include "fib/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fib::eval {

namespace {

std::string column_letter(std::size_t i) {
  std::string s;
  ++i;
  while (i > 0) {
    --i;
    s.insert(s.begin(), static_cast<char>('A' + i % 26));
    i /= 26;
  }
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_escape(fields[i]);
  out << '\n';
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

// Label picked by two or more judges, else a random one of the judgments.
std::string resolve(const std::vector<std::string>& judgments, Rng& rng) {
  std::map<std::string, std::size_t> votes;
  for (const auto& j : judgments) ++votes[j];
  for (const auto& [label, n] : votes)
    if (n >= 2) return label;
  return judgments[static_cast<std::size_t>(rng.uniform_int(judgments.size()))];
}

struct ParsedExport {
  std::vector<std::string> letters;
  // Rows of the export: qid, answer-column count known from the header.
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::map<std::string, std::string>> key;  // qid -> letter -> model
};

ParsedExport parse_export(const std::filesystem::path& csv, const std::filesystem::path& key) {
  ParsedExport p;
  auto table = read_csv(csv);
  if (table.empty()) throw DataError(csv.string() + ": empty file");
  const auto& header = table.front();
  if (header.size() < 4 || header[0] != "qid" || header[1] != "question" || header[2] != "clip")
    throw DataError(csv.string() + ": header must start with qid,question,clip");
  for (std::size_t i = 3; i < header.size() && header[i] == column_letter(i - 3); ++i) p.letters.push_back(header[i]);
  p.rows.assign(table.begin() + 1, table.end());

  auto key_rows = read_csv(key);
  if (key_rows.empty() || key_rows.front().size() != p.letters.size() + 1)
    throw DataError(key.string() + ": key does not match the export's answer columns");
  for (std::size_t r = 1; r < key_rows.size(); ++r) {
    const auto& row = key_rows[r];
    if (row.size() != p.letters.size() + 1) throw DataError(key.string() + ": malformed row " + std::to_string(r + 1));
    auto& m = p.key[row[0]];
    for (std::size_t c = 0; c < p.letters.size(); ++c) m[p.letters[c]] = row[c + 1];
  }
  return p;
}

}  // namespace

double accuracy(std::span<const std::int64_t> predictions, std::span<const std::int64_t> golds) {
  if (predictions.size() != golds.size())
    throw std::invalid_argument("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(golds.size()) + " golds");
  if (golds.empty()) throw std::invalid_argument("accuracy: no examples");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hit += predictions[i] == golds[i];
  return static_cast<double>(hit) / static_cast<double>(golds.size());
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

TprReport per_answer_tpr(std::span<const std::int64_t> predictions, std::span<const std::int64_t> golds,
                         const gen::Vocabulary& vocab) {
  accuracy(predictions, golds);  // validates lengths
  TprReport r;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    auto& a = r.per_answer[vocab.output.token(golds[i])];
    ++a.gold;
    a.correct += predictions[i] == golds[i];
    a.train_count = vocab.output.count(golds[i]);
  }
  std::vector<double> tpr, freq;
  for (auto& [tok, a] : r.per_answer) {
    a.tpr = static_cast<double>(a.correct) / static_cast<double>(a.gold);
    tpr.push_back(a.tpr);
    freq.push_back(static_cast<double>(a.train_count));
  }
  r.spearman = spearman(tpr, freq);
  return r;
}

MajorityBaseline majority_baseline(const std::vector<gen::FibExample>& train_examples) {
  if (train_examples.empty()) throw std::invalid_argument("majority baseline needs training examples");
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : train_examples) ++counts[ex.answer];
  MajorityBaseline best;
  for (const auto& [answer, n] : counts)
    if (n > best.count) best = {answer, n};
  return best;
}

double baseline_accuracy(const MajorityBaseline& b, const std::vector<gen::FibExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("baseline accuracy: no examples");
  const auto hit = std::count_if(examples.begin(), examples.end(), [&](const auto& e) { return e.answer == b.answer; });
  return static_cast<double>(hit) / static_cast<double>(examples.size());
}

EvalReport evaluate(const model::ModelParams& params, const std::vector<gen::FibExample>& examples,
                    const gen::Vocabulary& vocab, const Corpus& corpus, Split split, std::size_t frames) {
  const auto set = train::encode_examples(examples, vocab, corpus, split);
  if (set.size() == 0) throw DataError("no examples in the " + std::string(split_name(split)) + " split");
  const auto pred = train::predict_set(params, set, frames);
  std::vector<std::int64_t> gold;
  for (const auto& q : set.questions) gold.push_back(q.answer_id);
  EvalReport r;
  r.accuracy = accuracy(pred, gold);
  r.n = gold.size();
  r.tpr = per_answer_tpr(pred, gold, vocab);
  for (const auto& [tok, a] : r.tpr.per_answer) r.correct += a.correct;
  r.frames = frames;
  r.split = split_name(split);
  r.variant = model::variant_name(params.config.variant);
  return r;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["split"] = r.split;
  j["variant"] = r.variant;
  j["frames"] = r.frames;
  j["n"] = r.n;
  j["correct"] = r.correct;
  j["accuracy"] = r.accuracy;
  j["accuracy_pct"] = percent(r.accuracy);
  j["tpr_spearman"] = r.tpr.spearman ? nlohmann::ordered_json(*r.tpr.spearman) : nlohmann::ordered_json(nullptr);
  auto& per = j["per_answer"];
  per = nlohmann::ordered_json::object();
  for (const auto& [tok, a] : r.tpr.per_answer)
    per[tok] = {{"gold", a.gold}, {"correct", a.correct}, {"tpr", a.tpr}, {"train_count", a.train_count}};
  return j.dump(2);
}

std::vector<SweepPoint> frame_sweep(const model::ModelParams& params, const train::EncodedSet& set,
                                    std::span<const std::size_t> frame_counts) {
  if (model::variant_tracks(params.config.variant).empty())
    throw std::invalid_argument("frame sweep needs a model with a video input");
  std::vector<SweepPoint> out;
  for (auto k : frame_counts) out.push_back({k, train::set_accuracy(params, set, k)});
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string s = "\"";
  for (char c : field) {
    if (c == '"') s += '"';
    s += c;
  }
  return s + "\"";
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw DataError(path.string() + ": unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

void export_human_eval(const std::vector<gen::FibExample>& examples, const std::vector<ModelAnswers>& models,
                       const std::filesystem::path& csv, const std::filesystem::path& key, std::uint64_t seed) {
  for (const auto& m : models)
    if (m.answers.size() != examples.size())
      throw std::invalid_argument("model '" + m.name + "' has " + std::to_string(m.answers.size()) +
                                  " answers for " + std::to_string(examples.size()) + " examples");
  const std::size_t n_cols = models.size() + 1;
  Rng rng(seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  auto out = open_out(csv);
  auto key_out = open_out(key);
  std::vector<std::string> header{"qid", "question", "clip"}, key_header{"qid"};
  for (std::size_t c = 0; c < n_cols; ++c) {
    header.push_back(column_letter(c));
    key_header.push_back(column_letter(c));
  }
  write_row(out, header);
  write_row(key_out, key_header);
  for (auto i : order) {
    const auto& ex = examples[i];
    // Slot 0 is ground truth, slot m+1 is model m.
    std::vector<std::size_t> cols(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) cols[c] = c;
    rng.shuffle(cols);
    std::vector<std::string> row{ex.qid, ex.render(), ex.clip_id}, key_row{ex.qid};
    for (auto slot : cols) {
      row.push_back(slot == 0 ? ex.answer : models[slot - 1].answers[i]);
      key_row.push_back(slot == 0 ? std::string(kGroundTruth) : models[slot - 1].name);
    }
    write_row(out, row);
    write_row(key_out, key_row);
  }
  if (!out || !key_out) throw DataError("failed writing human-eval export");
}

ChoiceResult import_human_eval(const std::filesystem::path& csv, const std::filesystem::path& key,
                               std::uint64_t seed) {
  const auto p = parse_export(csv, key);
  Rng rng(seed);
  ChoiceResult r;
  const std::size_t first_judgment = 3 + p.letters.size();
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& row = p.rows[i];
    if (row.size() <= first_judgment) throw DataError(csv.string() + ": row " + std::to_string(i + 2) + " has no judgments");
    auto k = p.key.find(row[0]);
    if (k == p.key.end()) throw DataError(csv.string() + ": qid " + row[0] + " missing from key");
    std::vector<std::string> judgments;
    for (std::size_t c = first_judgment; c < row.size(); ++c) {
      if (!k->second.count(row[c]))
        throw DataError(csv.string() + ": row " + std::to_string(i + 2) + " judgment '" + row[c] +
                        "' is not an answer column");
      judgments.push_back(row[c]);
    }
    const auto& model = k->second.at(resolve(judgments, rng));
    r.chosen[row[0]] = model;
    ++r.wins[model];
    ++r.rows;
  }
  return r;
}

std::vector<std::string> default_tiers() {
  return {"Perfect", "Make sense for the sentence and video, but isn't quite perfect", "Doesn't make sense at all",
          "wrong"};
}

TierResult import_tier_ratings(const std::filesystem::path& csv, const std::filesystem::path& key,
                               std::uint64_t seed, const std::vector<std::string>& tiers) {
  const auto p = parse_export(csv, key);
  Rng rng(seed);
  TierResult r;
  const std::size_t first_judgment = 3 + p.letters.size();
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& row = p.rows[i];
    const std::string where = csv.string() + ": row " + std::to_string(i + 2);
    if (row.size() <= first_judgment) throw DataError(where + " has no judgments");
    auto k = p.key.find(row[0]);
    if (k == p.key.end()) throw DataError(csv.string() + ": qid " + row[0] + " missing from key");
    std::vector<std::vector<std::string>> per_col(p.letters.size());
    for (std::size_t c = first_judgment; c < row.size(); ++c) {
      std::vector<std::string> labels;
      std::stringstream ss(row[c]);
      for (std::string label; std::getline(ss, label, ';');) labels.push_back(label);
      if (labels.size() != p.letters.size())
        throw DataError(where + ": a rating lists " + std::to_string(labels.size()) + " tiers for " +
                        std::to_string(p.letters.size()) + " answers");
      for (std::size_t a = 0; a < labels.size(); ++a) {
        if (std::find(tiers.begin(), tiers.end(), labels[a]) == tiers.end())
          throw DataError(where + ": unknown tier '" + labels[a] + "'");
        per_col[a].push_back(labels[a]);
      }
    }
    for (std::size_t a = 0; a < p.letters.size(); ++a)
      ++r.counts[k->second.at(p.letters[a])][resolve(per_col[a], rng)];
    ++r.rows;
  }
  return r;
}

std::string report(std::span<const RunResult> runs) {
  auto pct = [](const std::optional<double>& v) { return v ? percent(*v) : std::string("-"); };
  std::ostringstream out;
  out << "Model Validation Test\n";
  std::vector<std::string> labels;
  bool any_fraction = false;
  for (const auto& r : runs) {
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
    if (r.fraction < 1.0) any_fraction = true;
    if (r.fraction >= 1.0) out << r.label << ' ' << pct(r.val) << ' ' << pct(r.test) << '\n';
  }
  if (!any_fraction) return out.str();
  out << "\nTraining fraction series\n";
  for (const auto& label : labels) {
    std::vector<const RunResult*> series;
    for (const auto& r : runs)
      if (r.label == label) series.push_back(&r);
    std::stable_sort(series.begin(), series.end(),
                     [](const RunResult* a, const RunResult* b) { return a->fraction < b->fraction; });
    out << label << '\n';
    for (const auto* r : series) out << "  " << percent(r->fraction) << "% " << pct(r->val) << ' ' << pct(r->test) << '\n';
  }
  return out.str();
}

}  // namespace fib::eval
