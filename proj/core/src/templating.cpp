#include "convogen/templating.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

constexpr std::size_t kRelationCount = 6;

std::size_t index_of(Relation r) { return static_cast<std::size_t>(r); }

// Relation order must match the Relation enum: xAttr, xEffect, xIntent,
// xNeed, xReact, xWant.
constexpr const char* kSentenceTemplates[kRelationCount] = {
    "PersonX is [Tail]. [Head].",                 // xAttr
    "[Head]. Now PersonX [Tail].",                // xEffect
    "[Head] because PersonX wants [Tail].",       // xIntent
    "PersonX [Tail in past tense]. [Head].",      // xNeed
    "[Head]. Now PersonX feels [Tail].",          // xReact
    "[Head]. Now PersonX wants [Tail].",          // xWant
};

constexpr const char* kHeadQuestionTemplate = "[Head], is this true?";

constexpr const char* kRelationTailQuestionTemplates[kRelationCount] = {
    "Can PersonX be considered [Tail] when [Head]?",          // xAttr
    "[Head]. As a result, PersonX [Tail]. Is this true?",     // xEffect
    "Does PersonX intend [Tail] when [Head]?",                // xIntent
    "PersonX [Tail in past tense]. Is this true when [Head]?", // xNeed
    "Does PersonX feel [Tail] after [Head]?",                 // xReact
    "Does PersonX want [Tail] after [Head]?",                 // xWant
};

std::string strip_terminal_period(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '.')) s.pop_back();
    return s;
}

// Substitutes PersonX/PersonY with assigned names; missing variables are a
// caller error.
std::string substitute_names(const std::string& text, const NameMap& names) {
    std::string out = replace_all(text, "PersonX", names.x);
    if (out.find("PersonY") != std::string::npos) {
        if (!names.y) throw DataError("name map has no entry for PersonY");
        out = replace_all(out, "PersonY", *names.y);
    }
    return out;
}

std::string render(const std::string& tmpl, const Triple& triple, const NameMap& names,
                   PastTenseFlags* flags) {
    std::string head = strip_terminal_period(trim(triple.head));
    std::string tail = strip_terminal_period(trim(triple.tail));

    std::string out = tmpl;
    if (out.find("[Tail in past tense]") != std::string::npos) {
        out = replace_all(out, "[Tail in past tense]", past_tense(tail, flags));
    }
    out = replace_all(out, "[Head]", head);
    out = replace_all(out, "[Tail]", tail);
    out = substitute_names(out, names);
    return capitalize_sentences(out);
}

}  // namespace

const std::array<std::string, 3>& ValidationQuestion::choices() {
    static const std::array<std::string, 3> c = {"yes", "no", "unknown"};
    return c;
}

TemplateSet TemplateSet::defaults() {
    TemplateSet t;
    for (std::size_t i = 0; i < kRelationCount; ++i) {
        t.sentence_[i] = kSentenceTemplates[i];
        t.relation_tail_[i] = kRelationTailQuestionTemplates[i];
    }
    t.head_question_ = kHeadQuestionTemplate;
    return t;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template override file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("template override file is not valid JSON: " + std::string(e.what()));
    }

    TemplateSet t = defaults();
    auto apply = [&](const char* key, std::array<std::string, kRelationCount>& slot) {
        if (!j.contains(key)) return;
        for (const auto& [rel_name, tmpl] : j[key].items()) {
            auto rel = relation_from_string(rel_name);
            if (!rel) throw ConfigError("template override names unknown relation: " + rel_name);
            slot[index_of(*rel)] = tmpl.get<std::string>();
        }
    };
    apply("sentence", t.sentence_);
    apply("relation_tail_question", t.relation_tail_);
    if (j.contains("head_question")) t.head_question_ = j["head_question"].get<std::string>();
    return t;
}

const std::string& TemplateSet::sentence_template(Relation r) const {
    return sentence_[index_of(r)];
}

const std::string& TemplateSet::head_question_template() const { return head_question_; }

const std::string& TemplateSet::relation_tail_question_template(Relation r) const {
    return relation_tail_[index_of(r)];
}

SentenceForm to_sentence(const Triple& triple, const NameMap& names,
                         const TemplateSet& templates, PastTenseFlags* flags) {
    std::string text = render(templates.sentence_template(triple.relation), triple, names, flags);
    if (!text.empty() && text.back() != '.') text.push_back('.');

    SentenceForm sf;
    sf.text = std::move(text);
    sf.triple_id = triple.id;
    sf.name_map = names;
    return sf;
}

ValidationQuestion build_validation_question(const Triple& triple, const NameMap& names,
                                             QuestionKind kind, const TemplateSet& templates) {
    const std::string& tmpl = kind == QuestionKind::Head
                                  ? templates.head_question_template()
                                  : templates.relation_tail_question_template(triple.relation);
    ValidationQuestion q;
    q.kind = kind;
    q.text = render(tmpl, triple, names, nullptr);
    return q;
}

}  // namespace convogen
