#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace airstar::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercase alphanumeric runs, in order of appearance.
std::vector<std::string> tokenize(std::string_view s);

bool is_stopword(std::string_view token);

// Tokens with stopwords removed, deduplicated, sorted.
std::set<std::string> content_tokens(std::string_view s);

std::size_t overlap(const std::set<std::string>& a,
                    const std::set<std::string>& b);

}  // namespace airstar::text
