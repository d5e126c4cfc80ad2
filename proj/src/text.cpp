#include "airstar/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace airstar::text {

namespace {

// Function words and interrogatives that never name an object or landmark.
constexpr std::array<std::string_view, 52> kStopwords = {
    "a",     "about", "above", "after", "ahead", "airstar", "an",   "and",
    "are",   "at",    "behind", "by",   "can",   "could",   "do",   "does",
    "fly",   "for",   "from",  "go",    "guide", "hi",      "hello", "how",
    "i",     "in",    "is",    "it",    "me",    "my",      "near", "of",
    "on",    "please", "tell",  "the",   "there", "this",    "that", "to",
    "track", "follow", "what",  "where", "which", "who",     "why",  "with",
    "you",   "your",  "take",  "its"};

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool is_stopword(std::string_view token) {
  return std::find(kStopwords.begin(), kStopwords.end(), token) !=
         kStopwords.end();
}

std::set<std::string> content_tokens(std::string_view s) {
  std::set<std::string> out;
  for (auto& t : tokenize(s)) {
    if (!is_stopword(t)) out.insert(std::move(t));
  }
  return out;
}

std::size_t overlap(const std::set<std::string>& a,
                    const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

}  // namespace airstar::text
