#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prunesearch::text {

// Lowercases ASCII, maps punctuation to spaces and drops apostrophes.
// Input is expected to be NFC UTF-8; multi-byte sequences pass through
// untouched and are treated as word characters.
std::string normalize(std::string_view raw);

// Splits a normalized string on whitespace.
std::vector<std::string> split_words(std::string_view normalized);

bool is_stop_word(std::string_view word);

// Porter suffix-stripping stemmer. Expects a lowercase word.
std::string stem(std::string_view word);

// normalize -> split -> drop stop words -> stem. Duplicates are kept;
// callers that need counts aggregate themselves.
std::vector<std::string> pipeline(std::string_view raw);

} // namespace prunesearch::text
