#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "convogen/analytics.hpp"
#include "convogen/curation.hpp"
#include "convogen/exporter.hpp"
#include "convogen/filters.hpp"
#include "convogen/genbackend.hpp"
#include "convogen/record.hpp"

namespace convogen {

inline constexpr const char* kPipelineVersion = "0.1.0";

struct BackendConfig {
    std::string kind = "mock";  // mock | http
    std::filesystem::path mock_script;
    std::string endpoint;
    std::string completion_path = "/v1/completions";
    std::string model;
    std::string auth_env = "CONVOGEN_API_TOKEN";
    int max_in_flight = 4;
    int requests_per_minute = 600;
    std::size_t max_prompt_chars = 16000;
    int retry_max_attempts = 3;
    int retry_initial_delay_ms = 200;
    double retry_multiplier = 2.0;
};

struct SafetyConfig {
    std::string kind = "keyword";  // keyword | http
    std::filesystem::path keywords;
    std::string endpoint;
    std::string path = "/assess";
    bool unsafe_skip = false;  // watermarks every output record when set
};

struct StageParams {
    GenParams narrative;     // Appendix defaults: 0.9 / 0.95 / 1.0 / 0.6 / 1024
    GenParams speaker;       // 0 / 1.0 / 0 / 0 / 16
    GenParams conversation;  // same as narrative

    StageParams();
};

struct PipelineConfig {
    std::filesystem::path triples_path;
    TripleFormat triples_format = TripleFormat::tsv;
    std::filesystem::path names_top1k_path;
    std::size_t names_top1k_limit = 1000;
    std::filesystem::path names_top10k_path;
    std::size_t names_top10k_limit = 10000;
    std::filesystem::path lexicon_path;
    std::filesystem::path cache_dir;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> template_overrides;

    BackendConfig backend;
    SafetyConfig safety;
    StageParams params;
    FilterConfig filters;
    ExportConfig export_config;

    int workers = 4;
    std::uint64_t seed = 0;

    // Parses the JSON config; relative paths resolve against the config file's
    // directory. Throws ConfigError on any validation failure.
    static PipelineConfig load(const std::filesystem::path& path);

    void validate() const;

    // Hash over the semantic fields (inputs, backend identity, params,
    // filters, export, seed). Worker counts, rate limits and output locations
    // do not affect results and are excluded.
    std::string config_hash() const;
};

struct StageCounts {
    std::size_t input = 0;
    std::size_t output = 0;
    std::map<std::string, std::size_t> rejected;  // reason -> count
    std::size_t quarantined = 0;

    std::size_t rejected_total() const;
};

struct StageManifest {
    std::string stage;
    std::string pipeline_version = kPipelineVersion;
    std::string config_hash;
    std::uint64_t seed = 0;
    StageCounts counts;
    nlohmann::json metadata;  // stage-specific knobs worth recording

    nlohmann::json to_json() const;
    static StageManifest from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& path) const;
    static StageManifest read(const std::filesystem::path& path);
};

// Orchestrates the stage chain over one run directory. Each stage reads the
// previous stage's JSONL artifact (refusing mismatched config hashes), writes
// its own plus a manifest, and is deterministic under the mock backend.
class Pipeline {
public:
    // backend_override replaces the configured base backend (tests inject a
    // counting mock); retry and cache wrappers still apply on top.
    Pipeline(PipelineConfig config, std::filesystem::path run_dir, bool resume = false,
             std::shared_ptr<GenBackend> backend_override = nullptr);

    StageCounts ingest();
    StageCounts distill();
    StageCounts filter();
    StageCounts mitigate();
    StageCounts export_examples();
    DatasetStats stats(const std::optional<std::filesystem::path>& emotion_labels = std::nullopt);

    const std::filesystem::path& run_dir() const { return run_dir_; }
    const PipelineConfig& config() const { return config_; }

    // Artifact locations inside the run directory.
    std::filesystem::path ingested_path() const { return run_dir_ / "ingested.jsonl"; }
    std::filesystem::path distilled_path() const { return run_dir_ / "distilled.jsonl"; }
    std::filesystem::path filtered_path() const { return run_dir_ / "filtered.jsonl"; }
    std::filesystem::path dataset_path() const { return run_dir_ / "dataset.jsonl"; }
    std::filesystem::path training_path() const { return run_dir_ / "training.jsonl"; }

private:
    std::shared_ptr<GenBackend> base_backend();
    std::shared_ptr<GenBackend> stage_backend(const std::string& stage);
    std::shared_ptr<SafetyClient> safety_client();
    void check_upstream(const std::string& stage, const std::filesystem::path& manifest_path);
    StageManifest make_manifest(const std::string& stage, StageCounts counts,
                                nlohmann::json metadata = nlohmann::json::object()) const;

    PipelineConfig config_;
    std::filesystem::path run_dir_;
    std::string config_hash_;
    std::shared_ptr<GenBackend> override_;
    std::shared_ptr<GenBackend> base_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<RateLimiter> limiter_;
    std::shared_ptr<InflightGate> gate_;
};

// Default run directory for a config: <output_dir>/run-<hash prefix>.
std::filesystem::path default_run_dir(const PipelineConfig& config);

// Reads {"context","response_a","response_b"} JSONL and writes {"prompt"}
// lines for batch submission. Returns the number of prompts written.
std::size_t write_judge_prompts(const std::filesystem::path& input,
                                const std::filesystem::path& output);

// Streaming reader over a stage artifact; stages consume fixed-size batches
// so memory stays bounded at million-record scale.
class StageRecordReader {
public:
    explicit StageRecordReader(const std::filesystem::path& path);

    // Refills `batch` with up to `limit` records, preserving file order.
    // Returns false once the artifact is exhausted and the batch is empty.
    bool next_batch(std::vector<DialogueRecord>& batch, std::size_t limit);

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

// Stage-artifact helpers shared by the CLI and tests.
std::vector<DialogueRecord> read_stage_records(const std::filesystem::path& path);
void write_stage_records(const std::vector<DialogueRecord>& records,
                         const std::filesystem::path& path);

}  // namespace convogen
