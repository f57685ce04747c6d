#include "fib/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "fib/binio.hpp"
#include "fib/rng.hpp"
#include "json.hpp"

namespace fib {

namespace {

constexpr char kTrackMagic[4] = {'F', 'I', 'B', 'F'};
constexpr std::uint32_t kTrackVersion = 1;

constexpr std::array<std::string_view, 10> kAnswerTable{
    "door", "phone", "car", "gun", "letter", "glass", "book", "bag", "window", "table"};

// Closed-class words; all tagged OTHER by the default lexicon.
constexpr std::array<std::string_view, 4> kSubjects{"she", "he", "they", "we"};
constexpr std::array<std::string_view, 28> kFiller{
    "at",   "with", "into",   "from",    "on",     "over",  "to",    "by",    "for",   "in",
    "near", "under", "toward", "behind", "across", "past",  "beside", "the",  "a",     "her",
    "his",  "their", "this",  "that",    "and",    "while", "once",  "of"};

std::string fmt_line_error(const std::filesystem::path& path, std::size_t lineno,
                           const std::string& what) {
  return path.string() + ":" + std::to_string(lineno) + ": " + what;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) {
  for (Split v : {Split::train, Split::val, Split::test})
    if (split_name(v) == s) return v;
  return std::nullopt;
}

void validate(const FeatureTrack& track) {
  if (track.timesteps == 0 || track.dim == 0)
    throw DataError("feature track must have T >= 1 and D >= 1");
  if (track.values.size() != static_cast<std::size_t>(track.timesteps) * track.dim)
    throw DataError("feature track holds " + std::to_string(track.values.size()) +
                    " values, expected T*D = " +
                    std::to_string(static_cast<std::size_t>(track.timesteps) * track.dim));
  for (std::size_t i = 0; i < track.values.size(); ++i)
    if (!std::isfinite(track.values[i]))
      throw DataError("feature track value " + std::to_string(i) + " is not finite");
}

FeatureTrack read_feature_track(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open feature track: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw DataError(path.string() + ": truncated feature track header");
  if (!std::equal(kTrackMagic, kTrackMagic + 4, bytes.begin()))
    throw DataError(path.string() + ": bad magic, expected FIBF");
  const auto version = binio::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kTrackVersion)
    throw DataError(path.string() + ": unsupported feature track version " + std::to_string(version));
  FeatureTrack t;
  t.timesteps = binio::get_le<std::uint32_t>(bytes.data() + 8);
  t.dim = binio::get_le<std::uint32_t>(bytes.data() + 12);
  const std::size_t expected = static_cast<std::size_t>(t.timesteps) * t.dim * 4;
  if (bytes.size() - 16 != expected)
    throw DataError(path.string() + ": payload is " + std::to_string(bytes.size() - 16) +
                    " bytes, expected T*D*4 = " + std::to_string(expected));
  t.values.resize(static_cast<std::size_t>(t.timesteps) * t.dim);
  for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = binio::get_f32(bytes.data() + 16 + i * 4);
  try {
    validate(t);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return t;
}

void write_feature_track(const FeatureTrack& track, const std::filesystem::path& path) {
  validate(track);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write(kTrackMagic, 4);
  binio::put_le<std::uint32_t>(os, kTrackVersion);
  binio::put_le<std::uint32_t>(os, track.timesteps);
  binio::put_le<std::uint32_t>(os, track.dim);
  for (float v : track.values) binio::put_f32(os, v);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::size_t Corpus::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(clips.begin(), clips.end(), [s](const Clip& c) { return c.split == s; }));
}

std::optional<std::size_t> Corpus::find(std::string_view clip_id) const {
  if (index_.size() == clips.size()) {
    auto it = index_.find(std::string(clip_id));
    if (it != index_.end() && it->second < clips.size() && clips[it->second].clip_id == clip_id)
      return it->second;
  }
  for (std::size_t i = 0; i < clips.size(); ++i)
    if (clips[i].clip_id == clip_id) return i;
  return std::nullopt;
}

void Corpus::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < clips.size(); ++i) index_.emplace(clips[i].clip_id, i);
}

Corpus load_corpus(const std::filesystem::path& path, LoadOptions opts) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open corpus: " + path.string());
  Corpus corpus;
  corpus.provenance = path.string();
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(fmt_line_error(path, lineno, std::string("malformed record: ") + e.what()));
    }
    if (!rec.is_object()) throw DataError(fmt_line_error(path, lineno, "record is not an object"));
    Clip c;
    try {
      c.clip_id = rec.at("clip_id").get<std::string>();
      const auto split = rec.at("split").get<std::string>();
      const auto sp = parse_split(split);
      if (!sp) throw DataError("unknown split '" + split + "'");
      c.split = *sp;
      const auto& ann = rec.at("annotation");
      if (ann.is_array()) {
        std::vector<text::TaggedToken> toks;
        std::string joined;
        for (const auto& p : ann) {
          toks.push_back(text::parse_tagged_pair(p.get<std::string>()));
          if (!joined.empty()) joined += ' ';
          joined += toks.back().surface;
        }
        c.annotation = std::move(joined);
        c.pretagged = std::move(toks);
      } else {
        c.annotation = ann.get<std::string>();
      }
      if (rec.contains("duration_s") && !rec["duration_s"].is_null())
        c.duration_s = rec["duration_s"].get<double>();
      if (rec.contains("tracks"))
        for (const auto& [name, rel] : rec["tracks"].items()) c.track_paths[name] = rel.get<std::string>();
    } catch (const DataError& e) {
      throw DataError(fmt_line_error(path, lineno, e.what()));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fmt_line_error(path, lineno, std::string("malformed record: ") + e.what()));
    } catch (const std::invalid_argument& e) {
      throw DataError(fmt_line_error(path, lineno, e.what()));
    }
    if (c.clip_id.empty()) throw DataError(fmt_line_error(path, lineno, "empty clip_id"));
    if (c.annotation.empty()) throw DataError(fmt_line_error(path, lineno, "empty annotation"));
    if (auto [it, fresh] = seen.emplace(c.clip_id, lineno); !fresh)
      throw DataError(fmt_line_error(path, lineno, "duplicate clip_id '" + c.clip_id +
                                                       "' (first seen on line " +
                                                       std::to_string(it->second) + ")"));
    corpus.clips.push_back(std::move(c));
  }

  if (opts.load_tracks) {
    struct Job {
      std::size_t clip;
      std::string name;
      std::filesystem::path file;
    };
    std::vector<Job> jobs;
    const auto base = path.parent_path();
    for (std::size_t i = 0; i < corpus.clips.size(); ++i)
      for (const auto& [name, rel] : corpus.clips[i].track_paths) jobs.push_back({i, name, base / rel});
    std::vector<FeatureTrack> loaded(jobs.size());
    std::vector<std::string> errors(jobs.size());
    const auto njobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t j = 0; j < njobs; ++j) {
      try {
        loaded[j] = read_feature_track(jobs[j].file);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (!errors[j].empty())
        throw DataError("clip '" + corpus.clips[jobs[j].clip].clip_id + "' track '" + jobs[j].name +
                        "': " + errors[j]);
      corpus.clips[jobs[j].clip].tracks[jobs[j].name] = std::move(loaded[j]);
    }
  }
  corpus.reindex();
  return corpus;
}

void save_corpus(Corpus& corpus, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  bool made_dir = false;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  for (auto& c : corpus.clips) {
    nlohmann::ordered_json rec;
    rec["clip_id"] = c.clip_id;
    rec["split"] = split_name(c.split);
    if (c.pretagged) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& t : *c.pretagged)
        arr.push_back(t.surface + "/" + std::string(text::tag_name(t.tag)));
      rec["annotation"] = std::move(arr);
    } else {
      rec["annotation"] = c.annotation;
    }
    if (c.duration_s) rec["duration_s"] = *c.duration_s;
    if (!c.tracks.empty()) {
      auto tracks = nlohmann::ordered_json::object();
      for (const auto& [name, track] : c.tracks) {
        auto& rel = c.track_paths[name];
        if (rel.empty()) rel = "tracks/" + c.clip_id + "." + name + ".fibf";
        if (!made_dir) {
          std::filesystem::create_directories(base / "tracks");
          made_dir = true;
        }
        write_feature_track(track, base / rel);
        tracks[name] = rel;
      }
      rec["tracks"] = std::move(tracks);
    }
    os << rec.dump() << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::optional<SynthSignal> parse_signal(std::string_view s) {
  if (s == "none") return SynthSignal::none;
  if (s == "feature-argmax") return SynthSignal::feature_argmax;
  return std::nullopt;
}

std::span<const std::string_view> synth_answer_table() { return kAnswerTable; }

Corpus synth_corpus(std::size_t n_clips, SynthSignal signal, std::uint64_t seed, SynthOptions opts) {
  if (n_clips == 0) throw std::invalid_argument("synth_corpus: n_clips must be >= 1");
  if (opts.dim_2d == 0 || opts.dim_2d > kAnswerTable.size())
    throw std::invalid_argument("synth_corpus: dim_2d must be in [1, " +
                                std::to_string(kAnswerTable.size()) + "]");
  if (opts.min_frames == 0 || opts.max_frames < opts.min_frames)
    throw std::invalid_argument("synth_corpus: invalid frame range");
  Rng rng(seed);
  Corpus corpus;
  {
    std::ostringstream os;
    os << "synth n_clips=" << n_clips
       << " signal=" << (signal == SynthSignal::none ? "none" : "feature-argmax") << " seed=" << seed;
    corpus.provenance = os.str();
  }
  corpus.clips.reserve(n_clips);
  for (std::size_t i = 0; i < n_clips; ++i) {
    Clip c;
    std::ostringstream id;
    id << "synth_" << std::setw(6) << std::setfill('0') << i;
    c.clip_id = id.str();
    const std::size_t r = i % 10;
    c.split = r < 8 ? Split::train : (r == 8 ? Split::val : Split::test);

    const auto frames =
        opts.min_frames + static_cast<std::uint32_t>(rng.uniform_int(opts.max_frames - opts.min_frames + 1));
    c.duration_s = std::round(frames / 6.0 * 10.0) / 10.0;

    FeatureTrack t2;
    t2.timesteps = frames;
    t2.dim = opts.dim_2d;
    t2.values.resize(static_cast<std::size_t>(frames) * opts.dim_2d);
    const auto target = static_cast<std::size_t>(rng.uniform_int(opts.dim_2d));
    const bool boost = signal == SynthSignal::feature_argmax;
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t d = 0; d < opts.dim_2d; ++d) {
        double v = opts.noise * rng.normal();
        if (boost && d == target) v += opts.signal;
        t2.values[t * opts.dim_2d + d] = static_cast<float>(v);
      }

    FeatureTrack t3;
    t3.timesteps = std::max<std::uint32_t>(1, frames / 4);
    t3.dim = opts.dim_3d;
    t3.values.resize(static_cast<std::size_t>(t3.timesteps) * opts.dim_3d);
    for (auto& v : t3.values) v = static_cast<float>(opts.noise * rng.normal());

    std::size_t answer = target;
    if (boost) {
      std::vector<double> means(opts.dim_2d, 0.0);
      for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t d = 0; d < opts.dim_2d; ++d) means[d] += t2.values[t * opts.dim_2d + d];
      answer = static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
    }

    std::string text(kSubjects[rng.uniform_int(kSubjects.size())]);
    text[0] = static_cast<char>(text[0] - 'a' + 'A');
    const auto before = 1 + rng.uniform_int(4);
    for (std::size_t k = 0; k < before; ++k) (text += ' ') += kFiller[rng.uniform_int(kFiller.size())];
    (text += ' ') += kAnswerTable[answer];
    const auto after = rng.uniform_int(5);
    for (std::size_t k = 0; k < after; ++k) (text += ' ') += kFiller[rng.uniform_int(kFiller.size())];
    text += '.';
    c.annotation = std::move(text);

    c.tracks.emplace("2d", std::move(t2));
    c.tracks.emplace("3d", std::move(t3));
    corpus.clips.push_back(std::move(c));
  }
  corpus.reindex();
  return corpus;
}

}  // namespace fib
