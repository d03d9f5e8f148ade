#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "convogen/random.hpp"
#include "convogen/record.hpp"

namespace convogen {

inline constexpr int kDatasetSchemaVersion = 1;

// JSON wire codecs. Key order is canonical (sorted) and float formatting is
// fixed by the serializer, so writing the same records twice is byte-identical.
nlohmann::json record_to_json(const DialogueRecord& record);
DialogueRecord record_from_json(const nlohmann::json& j);

// Uniform, injective renaming of every detected personal name, applied
// consistently across narrative, speakers, prefixes, and utterances.
// Names are detected as the union of the assigned names and pool members
// occurring as whole capitalized tokens; free-text roles are left alone.
// The pool index is built once, so one instance serves a whole run.
class NameMitigator {
public:
    explicit NameMitigator(const NamePool& pool);

    std::vector<std::string> detect(const DialogueRecord& record) const;
    DialogueRecord apply(const DialogueRecord& record, Rng& rng) const;

private:
    std::vector<std::string> names_;
    std::unordered_set<std::string> index_;
};

// One-shot conveniences over NameMitigator.
DialogueRecord mitigate_names(const DialogueRecord& record, const NamePool& pool, Rng& rng);
std::vector<std::string> detect_names(const DialogueRecord& record, const NamePool& pool);

struct DatasetManifest {
    int schema_version = kDatasetSchemaVersion;
    std::size_t record_count = 0;
    std::map<std::string, std::size_t> relation_counts;
    std::map<std::string, std::size_t> failure_counts;  // reason -> count, filled by the run

    nlohmann::json to_json() const;
};

// Streaming dataset writer: validates and appends one record at a time so
// million-scale runs never hold the dataset in memory.
class DatasetWriter {
public:
    explicit DatasetWriter(const std::filesystem::path& path);

    // Throws DataError when the record is incomplete or carries a failed verdict.
    void write(const DialogueRecord& record);

    DatasetManifest finish();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    DatasetManifest manifest_;
};

// JSONL, one schema-versioned record per line. Records must be complete with
// all verdicts passed; read(write(x)) == x. Throws DataError on violations.
DatasetManifest write_dataset(const std::vector<DialogueRecord>& records,
                              const std::filesystem::path& path);

// Throws DataError naming the line on corruption or schema-version mismatch.
std::vector<DialogueRecord> read_dataset(const std::filesystem::path& path);

}  // namespace convogen
