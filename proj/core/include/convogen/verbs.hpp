#pragma once

#include <string>
#include <string_view>

namespace convogen {

struct PastTenseFlags {
    // Set when "be" was inflected with the default singular "was"; subject
    // number is not recoverable from a bare verb phrase, so this is surfaced
    // as a record diagnostic downstream.
    bool be_singular_default = false;
};

// Inflects the first verb of a short verb phrase to past tense: a leading
// infinitive "to " is stripped, then an irregular-verb table is consulted
// before the suffix heuristic (-e -> -ed, consonant+y -> -ied, else -ed).
// Phrases whose first word is already a past form in the irregular table are
// returned unchanged. Throws DataError on an empty phrase.
std::string past_tense(std::string_view phrase, PastTenseFlags* flags = nullptr);

// Lookup into the built-in irregular table (lowercase base form).
bool is_irregular_past_form(std::string_view word);

}  // namespace convogen
