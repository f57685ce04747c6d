#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fib::text {

enum class Tag { NOUN, VERB, ADJ, ADV, OTHER };

std::string_view tag_name(Tag t);
std::optional<Tag> parse_tag(std::string_view s);

struct TaggedToken {
  std::string surface;
  std::string lower;
  Tag tag = Tag::OTHER;

  bool operator==(const TaggedToken&) const = default;
};

std::string to_lower(std::string_view s);

// Maximal runs of word characters (ASCII letters, digits, '_' and any
// non-ASCII byte) and maximal runs of other non-space characters, in order,
// lowercased.
std::vector<std::string> tokenize_wordpunct(std::string_view text);

// Same runs without lowercasing.
std::vector<std::string> split_wordpunct(std::string_view text);

class Lexicon {
 public:
  Lexicon() = default;
  static Lexicon load(const std::filesystem::path& path);

  void add(std::string word, Tag tag);
  std::optional<Tag> lookup(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::string& version() const { return version_; }

 private:
  std::unordered_map<std::string, Tag> entries_;
  std::string version_;
};

// Lexicon lookup, then ordered suffix rules (-ly; -ing/-ed; -ous/-ful/-ive/
// -able; -tion/-ness/-ment; trailing -s re-lookup), then NOUN for
// alphabetic tokens and OTHER for the rest.
Tag tag_word(std::string_view lower, const Lexicon& lexicon);
std::vector<TaggedToken> tag(const std::vector<std::string>& tokens, const Lexicon& lexicon);

// Parses "token/TAG" pairs; the tag follows the last '/'.
TaggedToken parse_tagged_pair(std::string_view pair);

class Stoplist {
 public:
  Stoplist() = default;
  explicit Stoplist(std::unordered_set<std::string> entries);
  static Stoplist load(const std::filesystem::path& path);

  bool contains(std::string_view lower) const { return entries_.contains(std::string(lower)); }
  std::size_t size() const { return entries_.size(); }
  const std::unordered_set<std::string>& entries() const { return entries_; }

 private:
  std::unordered_set<std::string> entries_;
};

inline Stoplist load_stoplist(const std::filesystem::path& path) { return Stoplist::load(path); }

}  // namespace fib::text
