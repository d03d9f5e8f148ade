#include "convogen/text.hpp"

#include <cctype>

namespace convogen {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Word bytes: ASCII alphanumerics plus anything outside ASCII, so UTF-8
// sequences stay inside one token.
bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

std::string replace_all(std::string_view s, std::string_view from, std::string_view to) {
    if (from.empty()) return std::string(s);
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    for (;;) {
        std::size_t hit = s.find(from, pos);
        if (hit == std::string_view::npos) {
            out.append(s.substr(pos));
            return out;
        }
        out.append(s.substr(pos, hit - pos));
        out.append(to);
        pos = hit + from.size();
    }
}

std::string replace_words(std::string_view s, const std::map<std::string, std::string>& mapping) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_byte(static_cast<unsigned char>(s[i]))) {
            out.push_back(s[i]);
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
        std::string word(s.substr(i, j - i));
        auto it = mapping.find(word);
        out.append(it != mapping.end() ? it->second : word);
        i = j;
    }
    return out;
}

std::vector<std::string> tokenize_words(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && !is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) tokens.push_back(ascii_lower(s.substr(i, j - i)));
        i = j;
    }
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> sentences;
    std::string current;
    std::size_t i = 0;
    while (i < s.size()) {
        current.push_back(s[i]);
        if (is_terminal(s[i])) {
            // absorb the punctuation run ("?!", "...")
            while (i + 1 < s.size() && is_terminal(s[i + 1])) {
                ++i;
                current.push_back(s[i]);
            }
            bool boundary = i + 1 >= s.size() || is_space(static_cast<unsigned char>(s[i + 1]));
            if (boundary) {
                std::string t = trim(current);
                if (!t.empty()) sentences.push_back(std::move(t));
                current.clear();
            }
        }
        ++i;
    }
    std::string t = trim(current);
    if (!t.empty()) sentences.push_back(std::move(t));
    return sentences;
}

int count_sentences(std::string_view s) {
    return static_cast<int>(split_sentences(s).size());
}

std::string capitalize_sentences(std::string_view s) {
    std::string out(s);
    bool at_start = true;
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(out[i]);
        if (at_start && std::isalpha(c)) {
            out[i] = static_cast<char>(std::toupper(c));
            at_start = false;
        } else if (std::isalnum(c)) {
            at_start = false;
        } else if (is_terminal(out[i])) {
            at_start = true;
        }
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t nl = s.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.emplace_back(s.substr(pos));
            break;
        }
        std::string line(s.substr(pos, nl - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        pos = nl + 1;
    }
    return lines;
}

}  // namespace convogen
