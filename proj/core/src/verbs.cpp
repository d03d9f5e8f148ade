#include "convogen/verbs.hpp"

#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

struct VerbEntry {
    const char* base;
    const char* past;
};

// Common irregular verbs (simple past). Tails are short verb phrases, so this
// plus the suffix heuristic covers the practical inventory; misses show up in
// goldens rather than silently corrupting data.
constexpr VerbEntry kIrregular[] = {
    {"arise", "arose"},       {"awake", "awoke"},       {"be", "was"},
    {"bear", "bore"},         {"beat", "beat"},         {"become", "became"},
    {"begin", "began"},       {"bend", "bent"},         {"bet", "bet"},
    {"bind", "bound"},        {"bite", "bit"},          {"bleed", "bled"},
    {"blow", "blew"},         {"break", "broke"},       {"breed", "bred"},
    {"bring", "brought"},     {"broadcast", "broadcast"}, {"build", "built"},
    {"burn", "burned"},       {"burst", "burst"},       {"buy", "bought"},
    {"cast", "cast"},         {"catch", "caught"},      {"choose", "chose"},
    {"cling", "clung"},       {"come", "came"},         {"cost", "cost"},
    {"creep", "crept"},       {"cut", "cut"},           {"deal", "dealt"},
    {"dig", "dug"},           {"dive", "dove"},         {"do", "did"},
    {"draw", "drew"},         {"dream", "dreamed"},     {"drink", "drank"},
    {"drive", "drove"},       {"dwell", "dwelt"},       {"eat", "ate"},
    {"fall", "fell"},         {"feed", "fed"},          {"feel", "felt"},
    {"fight", "fought"},      {"find", "found"},        {"fit", "fit"},
    {"flee", "fled"},         {"fling", "flung"},       {"fly", "flew"},
    {"forbid", "forbade"},    {"forecast", "forecast"}, {"forget", "forgot"},
    {"forgive", "forgave"},   {"forsake", "forsook"},   {"freeze", "froze"},
    {"get", "got"},           {"give", "gave"},         {"go", "went"},
    {"grind", "ground"},      {"grow", "grew"},         {"hang", "hung"},
    {"have", "had"},          {"hear", "heard"},        {"hide", "hid"},
    {"hit", "hit"},           {"hold", "held"},         {"hurt", "hurt"},
    {"keep", "kept"},         {"kneel", "knelt"},       {"knit", "knit"},
    {"know", "knew"},         {"lay", "laid"},          {"lead", "led"},
    {"lean", "leaned"},       {"leap", "leaped"},       {"learn", "learned"},
    {"leave", "left"},        {"lend", "lent"},         {"let", "let"},
    {"lie", "lay"},           {"light", "lit"},         {"lose", "lost"},
    {"make", "made"},         {"mean", "meant"},        {"meet", "met"},
    {"mistake", "mistook"},   {"mow", "mowed"},         {"overcome", "overcame"},
    {"overtake", "overtook"}, {"pay", "paid"},          {"plead", "pleaded"},
    {"prove", "proved"},      {"put", "put"},           {"quit", "quit"},
    {"read", "read"},         {"rid", "rid"},           {"ride", "rode"},
    {"ring", "rang"},         {"rise", "rose"},         {"run", "ran"},
    {"say", "said"},          {"see", "saw"},           {"seek", "sought"},
    {"sell", "sold"},         {"send", "sent"},         {"set", "set"},
    {"sew", "sewed"},         {"shake", "shook"},       {"shave", "shaved"},
    {"shear", "sheared"},     {"shed", "shed"},         {"shine", "shone"},
    {"shoot", "shot"},        {"show", "showed"},       {"shrink", "shrank"},
    {"shut", "shut"},         {"sing", "sang"},         {"sink", "sank"},
    {"sit", "sat"},           {"slay", "slew"},         {"sleep", "slept"},
    {"slide", "slid"},        {"sling", "slung"},       {"slit", "slit"},
    {"smell", "smelled"},     {"sow", "sowed"},         {"speak", "spoke"},
    {"speed", "sped"},        {"spell", "spelled"},     {"spend", "spent"},
    {"spill", "spilled"},     {"spin", "spun"},         {"spit", "spat"},
    {"split", "split"},       {"spoil", "spoiled"},     {"spread", "spread"},
    {"spring", "sprang"},     {"stand", "stood"},       {"steal", "stole"},
    {"stick", "stuck"},       {"sting", "stung"},       {"stink", "stank"},
    {"stride", "strode"},     {"strike", "struck"},     {"string", "strung"},
    {"strive", "strove"},     {"swear", "swore"},       {"sweep", "swept"},
    {"swell", "swelled"},     {"swim", "swam"},         {"swing", "swung"},
    {"take", "took"},         {"teach", "taught"},      {"tear", "tore"},
    {"tell", "told"},         {"think", "thought"},     {"throw", "threw"},
    {"thrust", "thrust"},     {"tread", "trod"},        {"undergo", "underwent"},
    {"understand", "understood"}, {"undertake", "undertook"}, {"undo", "undid"},
    {"upset", "upset"},       {"wake", "woke"},         {"wear", "wore"},
    {"weave", "wove"},        {"weep", "wept"},         {"win", "won"},
    {"wind", "wound"},        {"withdraw", "withdrew"}, {"withstand", "withstood"},
    {"wring", "wrung"},       {"write", "wrote"},
};

const std::unordered_map<std::string, std::string>& base_to_past() {
    static const auto* map = [] {
        auto* m = new std::unordered_map<std::string, std::string>();
        for (const auto& e : kIrregular) (*m)[e.base] = e.past;
        return m;
    }();
    return *map;
}

const std::unordered_set<std::string>& past_forms() {
    static const auto* set = [] {
        auto* s = new std::unordered_set<std::string>();
        for (const auto& e : kIrregular) s->insert(e.past);
        // "were" never appears as a mapped value ("be" defaults to singular)
        // but must still be recognized as already-past.
        s->insert("were");
        return s;
    }();
    return *set;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::string inflect_regular(const std::string& lower) {
    if (lower.empty()) return lower;
    if (lower.back() == 'e') return lower + "d";
    if (lower.size() >= 2 && lower.back() == 'y' && !is_vowel(lower[lower.size() - 2])) {
        return lower.substr(0, lower.size() - 1) + "ied";
    }
    return lower + "ed";
}

// Keeps the original capitalization of the first letter.
std::string match_case(const std::string& original, std::string inflected) {
    if (!original.empty() && !inflected.empty() &&
        std::isupper(static_cast<unsigned char>(original[0]))) {
        inflected[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(inflected[0])));
    }
    return inflected;
}

}  // namespace

bool is_irregular_past_form(std::string_view word) {
    return past_forms().count(ascii_lower(word)) > 0;
}

std::string past_tense(std::string_view phrase, PastTenseFlags* flags) {
    std::string text = trim(phrase);
    if (text.empty()) throw DataError("past_tense: empty phrase");

    if (starts_with_ci(text, "to ")) text = trim(text.substr(3));
    if (text.empty()) throw DataError("past_tense: phrase is a bare infinitive marker");

    std::size_t space = text.find(' ');
    std::string first = space == std::string::npos ? text : text.substr(0, space);
    std::string rest = space == std::string::npos ? "" : text.substr(space);

    std::string lower = ascii_lower(first);
    if (past_forms().count(lower) > 0) return text;  // already past

    std::string past;
    auto it = base_to_past().find(lower);
    if (it != base_to_past().end()) {
        past = it->second;
        if (lower == "be" && flags) flags->be_singular_default = true;
    } else {
        past = inflect_regular(lower);
    }
    return match_case(first, std::move(past)) + rest;
}

}  // namespace convogen
