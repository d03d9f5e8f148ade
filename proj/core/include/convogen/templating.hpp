#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "convogen/knowledge.hpp"
#include "convogen/verbs.hpp"

namespace convogen {

struct SentenceForm {
    std::string text;       // no PersonX/PersonY tokens; every sentence ends with '.'
    std::string triple_id;
    NameMap name_map;

    bool operator==(const SentenceForm&) const = default;
};

enum class QuestionKind { Head, RelationTail };

struct ValidationQuestion {
    QuestionKind kind = QuestionKind::Head;
    std::string text;

    // Fixed three-way choice set, in this order.
    static const std::array<std::string, 3>& choices();

    bool operator==(const ValidationQuestion&) const = default;
};

// Per-relation template strings. Placeholders: [Head], [Tail],
// [Tail in past tense]; PersonX/PersonY are substituted with assigned names.
// Defaults are compiled in; a JSON override file supports experimentation:
//   {"sentence": {"xReact": "..."}, "head_question": "...",
//    "relation_tail_question": {"xNeed": "..."}}
class TemplateSet {
public:
    static TemplateSet defaults();
    static TemplateSet with_overrides(const std::filesystem::path& path);

    const std::string& sentence_template(Relation r) const;
    const std::string& head_question_template() const;
    const std::string& relation_tail_question_template(Relation r) const;

private:
    std::array<std::string, 6> sentence_;
    std::string head_question_;
    std::array<std::string, 6> relation_tail_;
};

// Renders the relation's sentence template with names substituted, sentence
// starts capitalized, one terminal period per sentence.
// Throws DataError when the name map misses a needed person variable.
SentenceForm to_sentence(const Triple& triple, const NameMap& names,
                         const TemplateSet& templates = TemplateSet::defaults(),
                         PastTenseFlags* flags = nullptr);

// Head questions use the uniform "[Head], is this true?" shape; relation-tail
// questions use the per-relation templates with the same tense rules as the
// sentence templates.
ValidationQuestion build_validation_question(const Triple& triple, const NameMap& names,
                                             QuestionKind kind,
                                             const TemplateSet& templates = TemplateSet::defaults());

}  // namespace convogen
