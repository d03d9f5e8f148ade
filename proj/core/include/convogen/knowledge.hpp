#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convogen/random.hpp"

namespace convogen {

// The six social relations. Everything else in the source graph (event and
// physical commonsense) is out of scope for this pipeline.
enum class Relation { xAttr, xEffect, xIntent, xNeed, xReact, xWant };

std::optional<Relation> relation_from_string(std::string_view s);
std::string_view to_string(Relation r);
const std::vector<Relation>& all_relations();

// True for the six x-relations above.
bool is_social_relation(std::string_view relation);

// True for relation names we recognize from the source graph but deliberately
// exclude (isBefore, oEffect, ...). Anything neither social nor recognized is
// reported as an unknown relation string.
bool is_known_out_of_scope_relation(std::string_view relation);

struct Triple {
    std::string id;      // opaque; synthesized from the line number when absent
    std::string head;    // contains the literal token "PersonX"
    Relation relation;
    std::string tail;

    bool operator==(const Triple&) const = default;

    bool mentions_person_y() const;
};

struct NamePool {
    enum class SizeClass { Top1K, Top10K };

    std::vector<std::string> names;
    SizeClass size_class = SizeClass::Top1K;

    bool contains(std::string_view name) const;
};

enum class TripleFormat { tsv, jsonl };

// Per-record ingestion diagnostic; records failing validation are reported,
// never silently dropped.
struct RecordDiagnostic {
    std::size_t line = 0;
    std::string code;    // RelationOutOfScope, UnknownRelation, MissingField, ...
    std::string detail;

    bool operator==(const RecordDiagnostic&) const = default;
};

struct TripleLoadResult {
    std::vector<Triple> triples;           // order-preserving over valid records
    std::vector<RecordDiagnostic> diagnostics;
};

// TSV: head<TAB>relation<TAB>tail. JSONL: {"head":..,"relation":..,"tail":..}
// with an optional "id". Throws DataError if the file cannot be read.
TripleLoadResult load_triples(const std::filesystem::path& path, TripleFormat format);

// One name per line; lines with commas are treated as CSV and the first field
// is taken (the SSN export carries frequency columns we ignore). Names are
// deduplicated case-sensitively before truncation to `limit`.
// Throws DataError on an empty file or when limit exceeds the unique names.
NamePool load_names(const std::filesystem::path& path, std::size_t limit);

struct NameMap {
    std::string x;
    std::optional<std::string> y;

    bool operator==(const NameMap&) const = default;
};

// Uniform draw from the pool; PersonY (detected in head or tail) gets a second
// name distinct from PersonX. Deterministic for a given rng state.
// Throws DataError when the pool cannot supply the required names.
NameMap assign_names(const Triple& triple, const NamePool& pool, Rng& rng);

}  // namespace convogen
