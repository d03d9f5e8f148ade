#include "convogen/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

// Index-dispatched worker pool; results land in input order so parallel runs
// are byte-identical to sequential ones. The first worker exception is
// rethrown after the queue drains.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                next.store(n);  // stop dispatching new work; in-flight items drain
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Records processed per parallel batch; bounds stage memory.
constexpr std::size_t kBatchSize = 512;

struct RecordOutcome {
    std::optional<DialogueRecord> record;   // survivor
    std::optional<Failure> rejection;       // first failing reason
    std::optional<std::string> quarantine;  // scoring error detail
    DialogueRecord original;                // for rejected/quarantine reporting
};

void write_rejected_line(std::ofstream& out, const DialogueRecord& record,
                         const std::string& stage, const std::string& reason,
                         const std::string& detail) {
    nlohmann::json j;
    j["stage"] = stage;
    j["reason"] = reason;
    if (!detail.empty()) j["detail"] = detail;
    j["record"] = record_to_json(record);
    out << j.dump() << '\n';
}

}  // namespace

StageRecordReader::StageRecordReader(const std::filesystem::path& path)
    : path_(path), in_(path) {
    if (!in_) throw UpstreamArtifactError("missing stage artifact: " + path.string());
}

bool StageRecordReader::next_batch(std::vector<DialogueRecord>& batch, std::size_t limit) {
    batch.clear();
    std::string line;
    while (batch.size() < limit && std::getline(in_, line)) {
        ++line_no_;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw UpstreamArtifactError(path_.string() + " line " + std::to_string(line_no_) +
                                        ": malformed JSON");
        }
        if (j.value("schema_version", -1) != kDatasetSchemaVersion) {
            throw UpstreamArtifactError(path_.string() + " line " + std::to_string(line_no_) +
                                        ": schema version mismatch");
        }
        try {
            batch.push_back(record_from_json(j));
        } catch (const std::exception& e) {
            throw UpstreamArtifactError(path_.string() + " line " + std::to_string(line_no_) +
                                        ": " + e.what());
        }
    }
    return !batch.empty();
}

std::vector<DialogueRecord> read_stage_records(const std::filesystem::path& path) {
    StageRecordReader reader(path);
    std::vector<DialogueRecord> records;
    std::vector<DialogueRecord> batch;
    while (reader.next_batch(batch, 4096)) {
        for (auto& record : batch) records.push_back(std::move(record));
    }
    return records;
}

void write_stage_records(const std::vector<DialogueRecord>& records,
                         const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write stage artifact: " + path.string());
    for (const auto& record : records) out << record_to_json(record).dump() << '\n';
}

Pipeline::Pipeline(PipelineConfig config, std::filesystem::path run_dir, bool resume,
                   std::shared_ptr<GenBackend> backend_override)
    : config_(std::move(config)), run_dir_(std::move(run_dir)), override_(std::move(backend_override)) {
    config_.validate();
    config_hash_ = config_.config_hash();

    if (!resume && std::filesystem::exists(run_dir_)) {
        for (const auto& entry : std::filesystem::directory_iterator(run_dir_)) {
            if (entry.path().extension() == ".jsonl") {
                throw ConfigError("run directory " + run_dir_.string() +
                                  " already holds artifacts; pass --resume or choose a fresh directory");
            }
        }
    }
    std::filesystem::create_directories(run_dir_);

    if (!config_.cache_dir.empty()) {
        cache_ = std::make_shared<ResponseCache>(config_.cache_dir);
    }
    limiter_ = std::make_shared<RateLimiter>(config_.backend.requests_per_minute,
                                             std::chrono::milliseconds(60000));
    gate_ = std::make_shared<InflightGate>(config_.backend.max_in_flight);
}

std::shared_ptr<GenBackend> Pipeline::base_backend() {
    if (base_) return base_;
    if (override_) {
        base_ = override_;
    } else if (config_.backend.kind == "mock") {
        base_ = MockBackend::from_file(config_.backend.mock_script);
    } else {
        HttpBackendConfig http;
        http.base_url = config_.backend.endpoint;
        http.completion_path = config_.backend.completion_path;
        http.model = config_.backend.model;
        http.auth_env = config_.backend.auth_env;
        base_ = std::make_shared<HttpBackend>(http);
    }
    return base_;
}

std::shared_ptr<GenBackend> Pipeline::stage_backend(const std::string& stage) {
    RetryPolicy policy;
    policy.max_attempts = config_.backend.retry_max_attempts;
    policy.initial_delay = std::chrono::milliseconds(config_.backend.retry_initial_delay_ms);
    policy.multiplier = config_.backend.retry_multiplier;

    std::shared_ptr<GenBackend> backend = std::make_shared<RetryingBackend>(
        base_backend(), policy, limiter_, gate_, config_.backend.max_prompt_chars);
    if (cache_) backend = std::make_shared<CachingBackend>(backend, cache_, stage);
    return backend;
}

std::shared_ptr<SafetyClient> Pipeline::safety_client() {
    if (config_.safety.kind == "keyword") {
        return KeywordSafetyClient::load(config_.safety.keywords);
    }
    return std::make_shared<HttpSafetyClient>(config_.safety.endpoint, config_.safety.path);
}

void Pipeline::check_upstream(const std::string& stage, const std::filesystem::path& manifest_path) {
    StageManifest upstream = StageManifest::read(manifest_path);
    if (upstream.config_hash != config_hash_) {
        throw UpstreamArtifactError(stage + ": upstream artifact was produced under config " +
                                    upstream.config_hash + " but current config is " + config_hash_ +
                                    "; artifacts from mismatched hashes do not combine");
    }
}

StageManifest Pipeline::make_manifest(const std::string& stage, StageCounts counts,
                                      nlohmann::json metadata) const {
    StageManifest m;
    m.stage = stage;
    m.config_hash = config_hash_;
    m.seed = config_.seed;
    m.counts = std::move(counts);
    m.metadata = std::move(metadata);
    return m;
}

StageCounts Pipeline::ingest() {
    TripleLoadResult loaded = load_triples(config_.triples_path, config_.triples_format);
    NamePool pool = load_names(config_.names_top1k_path, config_.names_top1k_limit);
    TemplateSet templates = config_.template_overrides
                                ? TemplateSet::with_overrides(*config_.template_overrides)
                                : TemplateSet::defaults();

    StageCounts counts;
    counts.input = loaded.triples.size() + loaded.diagnostics.size();

    std::ofstream rejected(run_dir_ / "ingest.rejected.jsonl", std::ios::trunc);
    for (const auto& diag : loaded.diagnostics) {
        nlohmann::json j;
        j["line"] = diag.line;
        j["code"] = diag.code;
        j["detail"] = diag.detail;
        rejected << j.dump() << '\n';
        counts.rejected[diag.code] += 1;
    }

    std::vector<DialogueRecord> records;
    records.reserve(loaded.triples.size());
    for (const auto& triple : loaded.triples) {
        Rng rng(Rng::derive(config_.seed, "names:" + triple.id));
        NameMap names = assign_names(triple, pool, rng);

        PastTenseFlags flags;
        DialogueRecord record;
        record.triple = triple;
        record.name_map = names;
        record.sentence_form = to_sentence(triple, names, templates, &flags);
        record.annotations.past_tense_be_singular_default = flags.be_singular_default;
        if (triple.relation == Relation::xReact) {
            record.annotations.emotion = EmotionAnnotation{names.x, triple.tail, triple.head};
        }
        record.provenance.seed = config_.seed;
        record.provenance.pipeline_version = kPipelineVersion;
        record.provenance.config_hash = config_hash_;
        records.push_back(std::move(record));
    }
    write_stage_records(records, ingested_path());
    counts.output = records.size();

    make_manifest("ingest", counts).write(run_dir_ / "ingest.manifest.json");
    return counts;
}

StageCounts Pipeline::distill() {
    check_upstream("distill", run_dir_ / "ingest.manifest.json");
    StageRecordReader reader(ingested_path());

    auto narrative_backend = stage_backend("narrative");
    auto speaker_backend = stage_backend("speakers");
    auto conversation_backend = stage_backend("conversation");

    StageCounts counts;
    std::ofstream out(distilled_path(), std::ios::trunc);
    if (!out) throw DataError("cannot write stage artifact: " + distilled_path().string());
    std::ofstream rejected(run_dir_ / "distill.rejected.jsonl", std::ios::trunc);

    std::vector<DialogueRecord> inputs;
    while (reader.next_batch(inputs, kBatchSize)) {
    counts.input += inputs.size();
    std::vector<RecordOutcome> outcomes(inputs.size());
    parallel_for(inputs.size(), config_.workers, [&](std::size_t i) {
        DialogueRecord record = inputs[i];
        RecordOutcome& outcome = outcomes[i];

        auto reject = [&](const Failure& failure) {
            outcome.rejection = failure;
            outcome.original = record;
        };

        std::string n_prompt = narrative_prompt(record.sentence_form);
        record.provenance.prompt_hashes["narrative"] = ResponseCache::completion_key(
            "narrative", narrative_backend->name(), config_.params.narrative, n_prompt);
        Result<Narrative> narrative =
            generate_narrative(record.sentence_form, *narrative_backend, config_.params.narrative);
        if (!narrative.ok()) return reject(narrative.error());
        record.narrative = narrative.value();

        if (record.name_map.y) {
            // Two-person triples name both participants already; the backend
            // is queried only when the interlocutor is unknown.
            record.speakers = SpeakerPair{record.name_map.x, *record.name_map.y};
        } else {
            std::string s_prompt = speaker_prompt(*record.narrative, record.name_map.x);
            record.provenance.prompt_hashes["speakers"] = ResponseCache::completion_key(
                "speakers", speaker_backend->name(), config_.params.speaker, s_prompt);
            Result<SpeakerPair> speakers = infer_speakers(*record.narrative, record.name_map.x,
                                                          *speaker_backend, config_.params.speaker);
            if (!speakers.ok()) return reject(speakers.error());
            record.speakers = speakers.value();
        }

        std::string c_prompt = conversation_prompt(*record.narrative, *record.speakers);
        record.provenance.prompt_hashes["conversation"] = ResponseCache::completion_key(
            "conversation", conversation_backend->name(), config_.params.conversation, c_prompt);
        Result<std::string> raw = generate_conversation(*record.narrative, *record.speakers,
                                                        *conversation_backend,
                                                        config_.params.conversation);
        if (!raw.ok()) return reject(raw.error());
        record.raw_conversation = raw.value();

        Result<Conversation> parsed = parse_conversation(*record.raw_conversation, *record.speakers);
        if (!parsed.ok()) return reject(parsed.error());
        record.conversation = parsed.value();
        outcome.record = std::move(record);
    });

    // ordered flush by record index
    for (const auto& outcome : outcomes) {
        if (outcome.record) {
            out << record_to_json(*outcome.record).dump() << '\n';
            counts.output += 1;
        } else if (outcome.rejection) {
            counts.rejected[outcome.rejection->code] += 1;
            write_rejected_line(rejected, outcome.original, "distill", outcome.rejection->code,
                                outcome.rejection->detail);
        }
    }
    }

    make_manifest("distill", counts).write(run_dir_ / "distill.manifest.json");
    return counts;
}

StageCounts Pipeline::filter() {
    check_upstream("filter", run_dir_ / "distill.manifest.json");
    StageRecordReader reader(distilled_path());

    auto probe_backend = stage_backend("nonhuman");
    auto scoring_backend = stage_backend("commonsense");
    if (!scoring_backend->supports_scoring()) {
        throw ConfigError("commonsense filtering requires a scoring backend; configure one or "
                          "disable the stage explicitly");
    }
    NamePool pool = load_names(config_.names_top1k_path, config_.names_top1k_limit);
    NameIndex name_index(pool);
    HumanLexicon lexicon = HumanLexicon::load(config_.lexicon_path);
    TemplateSet templates = config_.template_overrides
                                ? TemplateSet::with_overrides(*config_.template_overrides)
                                : TemplateSet::defaults();
    std::shared_ptr<SafetyClient> safety = config_.safety.unsafe_skip ? nullptr : safety_client();

    FilterChainDeps deps;
    deps.names = &name_index;
    deps.lexicon = &lexicon;
    deps.probe_backend = probe_backend.get();
    deps.scoring_backend = scoring_backend.get();
    deps.safety = safety.get();  // null when unsafe_skip is set
    deps.templates = &templates;
    deps.config = config_.filters;

    StageCounts counts;
    std::ofstream out(filtered_path(), std::ios::trunc);
    if (!out) throw DataError("cannot write stage artifact: " + filtered_path().string());
    std::ofstream rejected(run_dir_ / "filter.rejected.jsonl", std::ios::trunc);
    std::ofstream quarantine(run_dir_ / "filter.quarantine.jsonl", std::ios::trunc);

    std::vector<DialogueRecord> inputs;
    while (reader.next_batch(inputs, kBatchSize)) {
    counts.input += inputs.size();
    std::vector<RecordOutcome> outcomes(inputs.size());
    parallel_for(inputs.size(), config_.workers, [&](std::size_t i) {
        DialogueRecord record = inputs[i];
        RecordOutcome& outcome = outcomes[i];

        try {
            // A SafetyClientError escaping here halts the whole stage.
            FilterChainResult chain = run_filter_chain(record.triple, record.name_map,
                                                       *record.narrative, *record.conversation, deps);
            record.annotations.verdicts = chain.verdicts;
            if (chain.head && chain.relation_tail) {
                record.annotations.mcq =
                    McqAnnotation{*chain.head, *chain.relation_tail, chain.fully_encapsulating};
            }
            record.annotations.unsafe_skip_safety = chain.safety_skipped;
            if (chain.rejection) {
                outcome.rejection = Failure{*chain.rejection->reason, chain.rejection->detail};
                outcome.original = record;
                return;
            }
        } catch (const BackendError& e) {
            outcome.quarantine = e.what();
            outcome.original = record;
            return;
        }
        outcome.record = std::move(record);
    });

    for (const auto& outcome : outcomes) {
        if (outcome.record) {
            out << record_to_json(*outcome.record).dump() << '\n';
            counts.output += 1;
        } else if (outcome.rejection) {
            counts.rejected[outcome.rejection->code] += 1;
            write_rejected_line(rejected, outcome.original, "filter", outcome.rejection->code,
                                outcome.rejection->detail);
        } else if (outcome.quarantine) {
            counts.quarantined += 1;
            nlohmann::json j;
            j["error"] = *outcome.quarantine;
            j["record"] = record_to_json(outcome.original);
            quarantine << j.dump() << '\n';
        }
    }
    }

    nlohmann::json metadata;
    metadata["pmi_null_prompt"] = "question-only";
    metadata["pmi_length_normalize"] = config_.filters.pmi_length_normalize;
    metadata["toxicity_threshold"] = config_.filters.toxicity_threshold;
    metadata["safety_client"] = config_.safety.unsafe_skip ? "skipped" : config_.safety.kind;
    make_manifest("filter", counts, metadata).write(run_dir_ / "filter.manifest.json");
    return counts;
}

StageCounts Pipeline::mitigate() {
    check_upstream("mitigate", run_dir_ / "filter.manifest.json");
    StageRecordReader reader(filtered_path());
    NamePool pool = load_names(config_.names_top10k_path, config_.names_top10k_limit);
    NameMitigator mitigator(pool);

    StageCounts counts;
    DatasetWriter writer(dataset_path());
    std::vector<DialogueRecord> inputs;
    while (reader.next_batch(inputs, kBatchSize)) {
        counts.input += inputs.size();
        std::vector<DialogueRecord> outputs(inputs.size());
        parallel_for(inputs.size(), config_.workers, [&](std::size_t i) {
            Rng rng(Rng::derive(config_.seed, "mitigate:" + inputs[i].triple.id));
            DialogueRecord record = mitigator.apply(inputs[i], rng);
            record.raw_conversation.reset();  // distill artifact, not part of the dataset
            outputs[i] = std::move(record);
        });
        for (const auto& record : outputs) {
            writer.write(record);
            counts.output += 1;
        }
    }
    DatasetManifest dataset_manifest = writer.finish();

    // Fold the run's per-reason failure counts into the dataset manifest.
    for (const char* stage : {"ingest", "distill", "filter"}) {
        StageManifest m = StageManifest::read(run_dir_ / (std::string(stage) + ".manifest.json"));
        for (const auto& [reason, count] : m.counts.rejected) {
            dataset_manifest.failure_counts[reason] += count;
        }
    }
    {
        std::ofstream out(run_dir_ / "dataset.manifest.json", std::ios::trunc);
        out << dataset_manifest.to_json().dump(2) << '\n';
    }

    nlohmann::json metadata;
    metadata["rewrites_narratives"] = true;
    make_manifest("mitigate", counts, metadata).write(run_dir_ / "mitigate.manifest.json");
    return counts;
}

StageCounts Pipeline::export_examples() {
    check_upstream("export", run_dir_ / "mitigate.manifest.json");
    StageRecordReader reader(dataset_path());

    StageCounts counts;
    std::ofstream out(training_path(), std::ios::trunc);
    if (!out) throw DataError("cannot write training examples");

    std::vector<DialogueRecord> inputs;
    while (reader.next_batch(inputs, kBatchSize)) {
        counts.input += inputs.size();
        std::vector<std::vector<TrainingExample>> all(inputs.size());
        parallel_for(inputs.size(), config_.workers, [&](std::size_t i) {
            Rng rng(Rng::derive(config_.seed, "export:" + inputs[i].triple.id));
            all[i] = build_examples(inputs[i], rng, config_.export_config);
        });
        for (const auto& examples : all) {
            for (const auto& example : examples) {
                nlohmann::json j;
                j["input"] = example.input;
                j["target"] = example.target;
                j["meta"] = {{"record_id", example.meta.record_id},
                             {"turn_index", example.meta.turn_index},
                             {"narrative_dropped", example.meta.narrative_dropped},
                             {"instruction_dropped", example.meta.instruction_dropped},
                             {"dropout_mode", example.meta.dropout_mode}};
                out << j.dump() << '\n';
                counts.output += 1;
            }
        }
    }

    nlohmann::json metadata;
    metadata["separator"] = config_.export_config.separator;
    metadata["turn_indicator"] = config_.export_config.turn_indicator;
    metadata["p_drop_narrative"] = config_.export_config.p_drop_narrative;
    metadata["p_drop_instruction"] = config_.export_config.p_drop_instruction;
    make_manifest("export", counts, metadata).write(run_dir_ / "export.manifest.json");
    return counts;
}

DatasetStats Pipeline::stats(const std::optional<std::filesystem::path>& emotion_labels) {
    StageRecordReader reader(dataset_path());
    StatsAccumulator accumulator;
    std::vector<DialogueRecord> batch;
    while (reader.next_batch(batch, kBatchSize)) {
        for (const auto& record : batch) accumulator.add(record);
    }

    // Retention denominator: conversations that entered filtering.
    std::optional<std::size_t> input_count;
    auto distill_manifest = run_dir_ / "distill.manifest.json";
    if (std::filesystem::exists(distill_manifest)) {
        input_count = StageManifest::read(distill_manifest).counts.output;
    }
    DatasetStats stats = accumulator.finalize(input_count);

    nlohmann::json report = stats.to_json();
    std::string table = stats.to_table();
    if (emotion_labels) {
        std::ifstream in(*emotion_labels);
        if (!in) throw DataError("cannot open emotion label file: " + emotion_labels->string());
        std::vector<std::string> labels;
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("label")) {
                throw DataError("emotion label lines must be {\"utterance_id\":...,\"label\":...}");
            }
            labels.push_back(j["label"].get<std::string>());
        }
        auto distribution = emotion_distribution(labels);
        nlohmann::json dist = nlohmann::json::array();
        table += "emotion distribution\n";
        for (const auto& [label, pct] : distribution) {
            dist.push_back({{"label", label}, {"percent", pct}});
            char buf[64];
            std::snprintf(buf, sizeof(buf), "  %-14s %6.2f%%\n", label.c_str(), pct);
            table += buf;
        }
        report["emotion_distribution"] = std::move(dist);
    }

    {
        std::ofstream out(run_dir_ / "stats.json", std::ios::trunc);
        out << report.dump(2) << '\n';
    }
    {
        std::ofstream out(run_dir_ / "stats.txt", std::ios::trunc);
        out << table;
    }
    return stats;
}

std::size_t write_judge_prompts(const std::filesystem::path& input,
                                const std::filesystem::path& output) {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open judge-prompt input: " + input.string());
    std::ofstream out(output, std::ios::trunc);
    if (!out) throw DataError("cannot write judge prompts: " + output.string());

    std::size_t written = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("context") || !j.contains("response_a") ||
            !j.contains("response_b")) {
            throw DataError("judge-prompt input line " + std::to_string(line_no) +
                            ": expected {\"context\",\"response_a\",\"response_b\"}");
        }
        nlohmann::json prompt;
        prompt["prompt"] = judge_prompt(j["context"].get<std::string>(),
                                        j["response_a"].get<std::string>(),
                                        j["response_b"].get<std::string>());
        out << prompt.dump() << '\n';
        ++written;
    }
    return written;
}

}  // namespace convogen
