#include "convogen/knowledge.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

constexpr std::array<std::pair<std::string_view, Relation>, 6> kRelations = {{
    {"xAttr", Relation::xAttr},
    {"xEffect", Relation::xEffect},
    {"xIntent", Relation::xIntent},
    {"xNeed", Relation::xNeed},
    {"xReact", Relation::xReact},
    {"xWant", Relation::xWant},
}};

// Relations present in the source graph family but excluded here (physical
// and event-centered commonsense, and other-person inferences).
const std::unordered_set<std::string>& out_of_scope_relations() {
    static const std::unordered_set<std::string> set = {
        "isAfter",   "isBefore",  "isFilledBy", "HinderedBy", "HasSubEvent",
        "Causes",    "xReason",   "oEffect",    "oReact",     "oWant",
        "AtLocation", "ObjectUse", "CapableOf",  "Desires",    "MadeUpOf",
        "NotDesires",
    };
    return set;
}

std::string synth_id(std::size_t line) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "t%06zu", line);
    return buf;
}

// Shared by the TSV and JSONL loaders once fields are extracted.
void validate_and_append(TripleLoadResult& result, std::size_t line, std::string id,
                         std::string head, std::string relation, std::string tail) {
    head = trim(head);
    tail = trim(tail);
    relation = trim(relation);
    if (head.empty() || relation.empty() || tail.empty()) {
        result.diagnostics.push_back({line, "MissingField", "head, relation and tail must be non-empty"});
        return;
    }
    auto rel = relation_from_string(relation);
    if (!rel) {
        if (is_known_out_of_scope_relation(relation)) {
            result.diagnostics.push_back({line, "RelationOutOfScope", relation});
        } else {
            result.diagnostics.push_back({line, "UnknownRelation", relation});
        }
        return;
    }
    if (head.find("PersonX") == std::string::npos) {
        result.diagnostics.push_back({line, "MissingPersonX", "head does not mention PersonX"});
        return;
    }
    result.triples.push_back(Triple{std::move(id), std::move(head), *rel, std::move(tail)});
}

}  // namespace

std::optional<Relation> relation_from_string(std::string_view s) {
    for (const auto& [name, rel] : kRelations) {
        if (name == s) return rel;
    }
    return std::nullopt;
}

std::string_view to_string(Relation r) {
    for (const auto& [name, rel] : kRelations) {
        if (rel == r) return name;
    }
    return "?";
}

const std::vector<Relation>& all_relations() {
    static const std::vector<Relation> rels = {Relation::xAttr,   Relation::xEffect,
                                               Relation::xIntent, Relation::xNeed,
                                               Relation::xReact,  Relation::xWant};
    return rels;
}

bool is_social_relation(std::string_view relation) {
    return relation_from_string(relation).has_value();
}

bool is_known_out_of_scope_relation(std::string_view relation) {
    return out_of_scope_relations().count(std::string(relation)) > 0;
}

bool Triple::mentions_person_y() const {
    // PersonY may appear only in the tail; both fields are scanned.
    return head.find("PersonY") != std::string::npos ||
           tail.find("PersonY") != std::string::npos;
}

bool NamePool::contains(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

TripleLoadResult load_triples(const std::filesystem::path& path, TripleFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triple file: " + path.string());

    TripleLoadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        if (format == TripleFormat::tsv) {
            std::vector<std::string> fields;
            std::size_t pos = 0;
            while (true) {
                std::size_t tab = line.find('\t', pos);
                if (tab == std::string::npos) {
                    fields.push_back(line.substr(pos));
                    break;
                }
                fields.push_back(line.substr(pos, tab - pos));
                pos = tab + 1;
            }
            if (fields.size() < 3) {
                result.diagnostics.push_back({line_no, "MissingField", "expected head<TAB>relation<TAB>tail"});
                continue;
            }
            validate_and_append(result, line_no, synth_id(line_no), fields[0], fields[1], fields[2]);
        } else {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                result.diagnostics.push_back({line_no, "MalformedRecord", "invalid JSON object"});
                continue;
            }
            if (!j.contains("head") || !j.contains("relation") || !j.contains("tail")) {
                result.diagnostics.push_back({line_no, "MissingField", "head/relation/tail required"});
                continue;
            }
            std::string id = j.value("id", synth_id(line_no));
            validate_and_append(result, line_no, std::move(id), j["head"].get<std::string>(),
                                j["relation"].get<std::string>(), j["tail"].get<std::string>());
        }
    }
    return result;
}

NamePool load_names(const std::filesystem::path& path, std::size_t limit) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open name file: " + path.string());

    std::vector<std::string> names;
    std::unordered_set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string name = line;
        std::size_t comma = name.find(',');
        if (comma != std::string::npos) name = name.substr(0, comma);
        name = trim(name);
        if (name.empty() || name[0] == '#') continue;
        if (seen.insert(name).second) names.push_back(std::move(name));
    }
    if (names.empty()) throw DataError("name file is empty: " + path.string());
    if (limit == 0) throw DataError("name pool limit must be positive");
    if (limit > names.size()) {
        throw DataError("name pool limit " + std::to_string(limit) + " exceeds " +
                        std::to_string(names.size()) + " unique names in " + path.string());
    }
    names.resize(limit);

    NamePool pool;
    pool.names = std::move(names);
    pool.size_class = limit <= 1000 ? NamePool::SizeClass::Top1K : NamePool::SizeClass::Top10K;
    return pool;
}

NameMap assign_names(const Triple& triple, const NamePool& pool, Rng& rng) {
    if (pool.names.empty()) throw DataError("name pool is empty");

    NameMap map;
    map.x = pool.names[rng.uniform_index(pool.names.size())];
    if (triple.mentions_person_y()) {
        if (pool.names.size() < 2) {
            throw DataError("triple " + triple.id + " needs two names but pool has one");
        }
        // re-draw until distinct from PersonX
        do {
            map.y = pool.names[rng.uniform_index(pool.names.size())];
        } while (*map.y == map.x);
    }
    return map;
}

}  // namespace convogen
