#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace convogen {

std::string trim(std::string_view s);

std::string ascii_lower(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

// Replaces every occurrence of `from` (plain substring match).
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

// Simultaneous whole-word substitution. A word is a maximal run of ASCII
// alphanumerics or bytes >= 0x80; substring hits ("Madeleines") are left alone.
std::string replace_words(std::string_view s, const std::map<std::string, std::string>& mapping);

// Tokenizer used for MTLD, utterance lengths, and repetition checks:
// lowercase, split on non-alphanumeric runs (bytes >= 0x80 count as word bytes).
std::vector<std::string> tokenize_words(std::string_view s);

// Splits on '.', '?' or '!' runs followed by whitespace or end of text.
// Abbreviations are not special-cased.
std::vector<std::string> split_sentences(std::string_view s);

int count_sentences(std::string_view s);

// Uppercases the first letter after every sentence boundary.
std::string capitalize_sentences(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

}  // namespace convogen
