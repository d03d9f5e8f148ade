#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/hash.hpp"
#include "convogen/pipeline.hpp"

namespace convogen {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) return path.lexically_normal();
    return (base / path).lexically_normal();
}

GenParams params_from_json(const nlohmann::json& j, const GenParams& defaults) {
    GenParams p = defaults;
    p.temperature = j.value("temperature", defaults.temperature);
    p.top_p = j.value("top_p", defaults.top_p);
    p.frequency_penalty = j.value("frequency_penalty", defaults.frequency_penalty);
    p.presence_penalty = j.value("presence_penalty", defaults.presence_penalty);
    p.max_tokens = j.value("max_tokens", defaults.max_tokens);
    return p;
}

nlohmann::json params_to_json(const GenParams& p) {
    return {{"temperature", p.temperature},
            {"top_p", p.top_p},
            {"frequency_penalty", p.frequency_penalty},
            {"presence_penalty", p.presence_penalty},
            {"max_tokens", p.max_tokens}};
}

}  // namespace

StageParams::StageParams() {
    narrative = GenParams{0.9, 0.95, 1.0, 0.6, 1024};
    speaker = GenParams{0.0, 1.0, 0.0, 0.0, 16};
    conversation = GenParams{0.9, 0.95, 1.0, 0.6, 1024};
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }

    const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
    PipelineConfig c;
    c.seed = j.value("seed", 0ull);
    c.workers = j.value("workers", 4);

    if (!j.contains("paths")) throw ConfigError("config requires a \"paths\" section");
    const auto& paths = j["paths"];
    auto require_path = [&](const char* key) {
        if (!paths.contains(key)) throw ConfigError(std::string("config paths.") + key + " is required");
        return resolve(base, paths[key].get<std::string>());
    };
    c.triples_path = require_path("triples");
    std::string format = paths.value("triples_format", "tsv");
    if (format == "tsv") c.triples_format = TripleFormat::tsv;
    else if (format == "jsonl") c.triples_format = TripleFormat::jsonl;
    else throw ConfigError("paths.triples_format must be tsv or jsonl");
    c.names_top1k_path = require_path("names_top1k");
    c.names_top1k_limit = paths.value("names_top1k_limit", 1000ull);
    c.names_top10k_path = require_path("names_top10k");
    c.names_top10k_limit = paths.value("names_top10k_limit", 10000ull);
    c.lexicon_path = require_path("lexicon");
    c.cache_dir = resolve(base, paths.value("cache_dir", "cache"));
    c.output_dir = resolve(base, paths.value("output_dir", "runs"));
    if (paths.contains("template_overrides")) {
        c.template_overrides = resolve(base, paths["template_overrides"].get<std::string>());
    }

    if (j.contains("backend")) {
        const auto& b = j["backend"];
        c.backend.kind = b.value("kind", "mock");
        if (b.contains("mock_script")) {
            c.backend.mock_script = resolve(base, b["mock_script"].get<std::string>());
        }
        c.backend.endpoint = b.value("endpoint", "");
        c.backend.completion_path = b.value("completion_path", "/v1/completions");
        c.backend.model = b.value("model", "");
        c.backend.auth_env = b.value("auth_env", "CONVOGEN_API_TOKEN");
        c.backend.max_in_flight = b.value("max_in_flight", 4);
        c.backend.requests_per_minute = b.value("requests_per_minute", 600);
        c.backend.max_prompt_chars = b.value("max_prompt_chars", 16000ull);
        if (b.contains("retry")) {
            const auto& r = b["retry"];
            c.backend.retry_max_attempts = r.value("max_attempts", 3);
            c.backend.retry_initial_delay_ms = r.value("initial_delay_ms", 200);
            c.backend.retry_multiplier = r.value("multiplier", 2.0);
        }
    }
    // Secrets and deployment endpoints may be supplied via the environment so
    // they never land in config files or manifests.
    if (const char* endpoint = std::getenv("CONVOGEN_BACKEND_ENDPOINT")) {
        c.backend.endpoint = endpoint;
    }

    if (j.contains("safety")) {
        const auto& s = j["safety"];
        c.safety.kind = s.value("kind", "keyword");
        if (s.contains("keywords")) c.safety.keywords = resolve(base, s["keywords"].get<std::string>());
        c.safety.endpoint = s.value("endpoint", "");
        c.safety.path = s.value("path", "/assess");
        c.safety.unsafe_skip = s.value("unsafe_skip", false);
    }

    StageParams defaults;
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (p.contains("narrative")) c.params.narrative = params_from_json(p["narrative"], defaults.narrative);
        if (p.contains("speaker")) c.params.speaker = params_from_json(p["speaker"], defaults.speaker);
        if (p.contains("conversation")) {
            c.params.conversation = params_from_json(p["conversation"], defaults.conversation);
        }
    }

    if (j.contains("filters")) {
        const auto& f = j["filters"];
        c.filters.min_turns = f.value("min_turns", 4);
        c.filters.max_turns = f.value("max_turns", 20);
        c.filters.max_speakers = f.value("max_speakers", 2);
        c.filters.toxicity_threshold = f.value("toxicity_threshold", 0.5);
        c.filters.repetition_window = f.value("repetition_window", 12);
        c.filters.repetition_min_repeats = f.value("repetition_min_repeats", 3);
        c.filters.pmi_length_normalize = f.value("pmi_length_normalize", false);
    }

    if (j.contains("export")) {
        const auto& e = j["export"];
        c.export_config.separator = e.value("separator", "<SEP>");
        c.export_config.turn_indicator = e.value("turn_indicator", "<TURN>");
        c.export_config.p_drop_narrative = e.value("p_drop_narrative", 0.3);
        c.export_config.p_drop_instruction = e.value("p_drop_instruction", 0.5);
    }

    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    params.narrative.validate();
    params.speaker.validate();
    params.conversation.validate();
    if (workers <= 0) throw ConfigError("workers must be positive");
    if (backend.kind != "mock" && backend.kind != "http") {
        throw ConfigError("backend.kind must be mock or http");
    }
    if (backend.kind == "mock" && backend.mock_script.empty()) {
        throw ConfigError("mock backend requires backend.mock_script");
    }
    if (backend.kind == "http" && backend.endpoint.empty()) {
        throw ConfigError("http backend requires backend.endpoint");
    }
    if (safety.kind != "keyword" && safety.kind != "http") {
        throw ConfigError("safety.kind must be keyword or http");
    }
    if (safety.kind == "keyword" && !safety.unsafe_skip && safety.keywords.empty()) {
        throw ConfigError("keyword safety client requires safety.keywords");
    }
    if (safety.kind == "http" && !safety.unsafe_skip && safety.endpoint.empty()) {
        throw ConfigError("http safety client requires safety.endpoint");
    }
    if (filters.min_turns < 1 || filters.max_turns < filters.min_turns) {
        throw ConfigError("filter turn bounds are inconsistent");
    }
    if (filters.toxicity_threshold < 0 || filters.toxicity_threshold > 1) {
        throw ConfigError("toxicity threshold must be in [0, 1]");
    }
    if (export_config.p_drop_narrative < 0 || export_config.p_drop_narrative > 1 ||
        export_config.p_drop_instruction < 0 || export_config.p_drop_instruction > 1) {
        throw ConfigError("dropout probabilities must be in [0, 1]");
    }
    if (export_config.separator.empty() || export_config.turn_indicator.empty()) {
        throw ConfigError("separator tokens must be non-empty");
    }
}

std::string PipelineConfig::config_hash() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["triples"] = triples_path.string();
    j["triples_format"] = triples_format == TripleFormat::tsv ? "tsv" : "jsonl";
    j["names_top1k"] = names_top1k_path.string();
    j["names_top1k_limit"] = names_top1k_limit;
    j["names_top10k"] = names_top10k_path.string();
    j["names_top10k_limit"] = names_top10k_limit;
    j["lexicon"] = lexicon_path.string();
    j["templates"] = template_overrides ? template_overrides->string() : "";
    j["backend"] = {{"kind", backend.kind},
                    {"mock_script", backend.mock_script.string()},
                    {"endpoint", backend.endpoint},
                    {"model", backend.model}};
    j["safety"] = {{"kind", safety.kind},
                   {"keywords", safety.keywords.string()},
                   {"endpoint", safety.endpoint},
                   {"unsafe_skip", safety.unsafe_skip}};
    j["params"] = {{"narrative", params_to_json(params.narrative)},
                   {"speaker", params_to_json(params.speaker)},
                   {"conversation", params_to_json(params.conversation)}};
    j["filters"] = {{"min_turns", filters.min_turns},
                    {"max_turns", filters.max_turns},
                    {"max_speakers", filters.max_speakers},
                    {"toxicity_threshold", filters.toxicity_threshold},
                    {"repetition_window", filters.repetition_window},
                    {"repetition_min_repeats", filters.repetition_min_repeats},
                    {"pmi_length_normalize", filters.pmi_length_normalize}};
    // Export parameters are deliberately not hashed: they only shape the
    // training-example artifact (and may be overridden from the CLI), never
    // the upstream stages; the export manifest records them instead.
    return hash_hex(j.dump());
}

std::size_t StageCounts::rejected_total() const {
    std::size_t total = 0;
    for (const auto& [_, count] : rejected) total += count;
    return total;
}

nlohmann::json StageManifest::to_json() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["pipeline_version"] = pipeline_version;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["counts"] = {{"input", counts.input},
                   {"output", counts.output},
                   {"rejected", counts.rejected},
                   {"quarantined", counts.quarantined}};
    if (!metadata.empty()) j["metadata"] = metadata;
    return j;
}

StageManifest StageManifest::from_json(const nlohmann::json& j) {
    StageManifest m;
    m.stage = j.value("stage", "");
    m.pipeline_version = j.value("pipeline_version", "");
    m.config_hash = j.value("config_hash", "");
    m.seed = j.value("seed", 0ull);
    if (j.contains("counts")) {
        const auto& c = j["counts"];
        m.counts.input = c.value("input", 0ull);
        m.counts.output = c.value("output", 0ull);
        m.counts.quarantined = c.value("quarantined", 0ull);
        if (c.contains("rejected")) {
            m.counts.rejected = c["rejected"].get<std::map<std::string, std::size_t>>();
        }
    }
    if (j.contains("metadata")) m.metadata = j["metadata"];
    return m;
}

void StageManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << to_json().dump(2) << '\n';
}

StageManifest StageManifest::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamArtifactError("missing manifest: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UpstreamArtifactError("malformed manifest: " + path.string());
    return from_json(j);
}

std::filesystem::path default_run_dir(const PipelineConfig& config) {
    return config.output_dir / ("run-" + config.config_hash().substr(0, 12));
}

}  // namespace convogen
