#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fib/textpipe.hpp"

namespace fib {

enum class Split { train, val, test };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view s);

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// T x D feature matrix, time-major. Values are kept in the on-disk 32-bit
// precision and widened by consumers.
struct FeatureTrack {
  std::uint32_t timesteps = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t t) const { return {values.data() + t * dim, dim}; }
  bool operator==(const FeatureTrack&) const = default;
};

// Throws DataError when the shape is empty, the value count is not T*D, or a
// value is not finite.
void validate(const FeatureTrack& track);

FeatureTrack read_feature_track(const std::filesystem::path& path);
void write_feature_track(const FeatureTrack& track, const std::filesystem::path& path);

struct Clip {
  std::string clip_id;
  Split split = Split::train;
  std::string annotation;
  std::optional<double> duration_s;
  std::map<std::string, FeatureTrack> tracks;
  // Relative paths of the track files, as recorded in the corpus file.
  std::map<std::string, std::string> track_paths;
  // Set for pre-tagged corpora, where the record lists "token/TAG" pairs.
  std::optional<std::vector<text::TaggedToken>> pretagged;
};

struct Corpus {
  std::vector<Clip> clips;
  std::string provenance;

  std::size_t count(Split s) const;
  // Index of the clip with this id, or nullopt.
  std::optional<std::size_t> find(std::string_view clip_id) const;
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
  bool load_tracks = true;
};

// One JSON object per line:
//   {"clip_id", "split", "annotation" (string or ["tok/TAG", ...]),
//    "duration_s"?, "tracks"?: {name: relative path}}
// Track paths are resolved against the corpus file's directory.
Corpus load_corpus(const std::filesystem::path& path, LoadOptions opts = {});

// Writes the corpus file and, for clips whose tracks have no recorded path,
// track files under <dir>/tracks/.
void save_corpus(Corpus& corpus, const std::filesystem::path& path);

enum class SynthSignal { none, feature_argmax };

std::optional<SynthSignal> parse_signal(std::string_view s);

// Answer words of the synthetic corpus, indexed by 2d-track channel.
std::span<const std::string_view> synth_answer_table();

struct SynthOptions {
  std::uint32_t dim_2d = 10;
  std::uint32_t dim_3d = 8;
  std::uint32_t min_frames = 20;
  std::uint32_t max_frames = 40;
  // feature-argmax mode: per-frame boost of the answer channel and noise std.
  double signal = 1.0;
  double noise = 0.25;
};

// Deterministic synthetic corpus. Every annotation has exactly one candidate
// word (the rest are closed-class words tagged OTHER by the default lexicon).
// In feature-argmax mode that word is synth_answer_table()[argmax over
// channels of the time-mean of the "2d" track]. Clip i goes to train when
// i % 10 < 8, val when i % 10 == 8, else test.
Corpus synth_corpus(std::size_t n_clips, SynthSignal signal, std::uint64_t seed,
                    SynthOptions opts = {});

}  // namespace fib
