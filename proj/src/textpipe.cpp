#include "fib/textpipe.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

namespace fib::text {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c >= 0x80;
}

bool is_alpha_token(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s)
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80)) return false;
  return true;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  // Require at least a two-character stem before the suffix.
  return s.size() >= suffix.size() + 2 && s.substr(s.size() - suffix.size()) == suffix;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct SuffixRule {
  std::string_view suffix;
  Tag tag;
};

constexpr std::array<SuffixRule, 10> kSuffixRules{{
    {"ly", Tag::ADV},
    {"ing", Tag::VERB},
    {"ed", Tag::VERB},
    {"ous", Tag::ADJ},
    {"ful", Tag::ADJ},
    {"ive", Tag::ADJ},
    {"able", Tag::ADJ},
    {"tion", Tag::NOUN},
    {"ness", Tag::NOUN},
    {"ment", Tag::NOUN},
}};

}  // namespace

std::string_view tag_name(Tag t) {
  switch (t) {
    case Tag::NOUN: return "NOUN";
    case Tag::VERB: return "VERB";
    case Tag::ADJ: return "ADJ";
    case Tag::ADV: return "ADV";
    case Tag::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::optional<Tag> parse_tag(std::string_view s) {
  for (Tag t : {Tag::NOUN, Tag::VERB, Tag::ADJ, Tag::ADV, Tag::OTHER})
    if (tag_name(t) == s) return t;
  return std::nullopt;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string> split_wordpunct(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    const bool word = is_word(c);
    std::size_t j = i + 1;
    while (j < text.size()) {
      const auto d = static_cast<unsigned char>(text[j]);
      if (is_space(d) || is_word(d) != word) break;
      ++j;
    }
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize_wordpunct(std::string_view text) {
  auto toks = split_wordpunct(text);
  for (auto& t : toks) t = to_lower(t);
  return toks;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open lexicon: " + path.string());
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (lex.version_.empty() && line.rfind("# version:", 0) == 0) lex.version_ = trim(line.substr(10));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected word<TAB>TAG");
    const auto t = parse_tag(trim(line.substr(tab + 1)));
    if (!t)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": unknown tag '" +
                               line.substr(tab + 1) + "'");
    lex.add(to_lower(line.substr(0, tab)), *t);
  }
  return lex;
}

void Lexicon::add(std::string word, Tag tag) { entries_.insert_or_assign(std::move(word), tag); }

std::optional<Tag> Lexicon::lookup(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

Tag tag_word(std::string_view lower, const Lexicon& lexicon) {
  if (auto t = lexicon.lookup(lower)) return *t;
  if (!is_alpha_token(lower)) return Tag::OTHER;
  for (const auto& rule : kSuffixRules)
    if (ends_with(lower, rule.suffix)) return rule.tag;
  if (lower.size() >= 3 && lower.back() == 's' && lower[lower.size() - 2] != 's') {
    if (auto t = lexicon.lookup(lower.substr(0, lower.size() - 1))) return *t;
  }
  return Tag::NOUN;
}

std::vector<TaggedToken> tag(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto lower = to_lower(t);
    const Tag tg = tag_word(lower, lexicon);
    out.push_back({t, std::move(lower), tg});
  }
  return out;
}

TaggedToken parse_tagged_pair(std::string_view pair) {
  const auto slash = pair.rfind('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == pair.size())
    throw std::invalid_argument("expected token/TAG, got '" + std::string(pair) + "'");
  const auto t = parse_tag(pair.substr(slash + 1));
  if (!t) throw std::invalid_argument("unknown tag in '" + std::string(pair) + "'");
  const std::string surface(pair.substr(0, slash));
  return {surface, to_lower(surface), *t};
}

Stoplist::Stoplist(std::unordered_set<std::string> entries) {
  for (const auto& e : entries) entries_.insert(to_lower(e));
}

Stoplist Stoplist::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open stoplist: " + path.string());
  std::unordered_set<std::string> entries;
  std::string line;
  while (std::getline(is, line)) {
    auto w = trim(line);
    if (w.empty() || w[0] == '#') continue;
    entries.insert(to_lower(w));
  }
  return Stoplist(std::move(entries));
}

}  // namespace fib::text
