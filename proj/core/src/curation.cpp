#include "convogen/curation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

nlohmann::json verdict_to_json(const FilterVerdict& v) {
    nlohmann::json j;
    j["passed"] = v.passed;
    j["stage"] = std::string(to_string(v.stage));
    if (v.reason) j["reason"] = *v.reason;
    if (!v.detail.empty()) j["detail"] = v.detail;
    return j;
}

FilterVerdict verdict_from_json(const nlohmann::json& j) {
    FilterVerdict v;
    v.passed = j.value("passed", false);
    v.stage = filter_stage_from_string(j.value("stage", "Basic"));
    if (j.contains("reason")) v.reason = j["reason"].get<std::string>();
    v.detail = j.value("detail", "");
    return v;
}

nlohmann::json mcq_answer_to_json(const McqAnswer& a) {
    nlohmann::json j;
    j["choice"] = std::string(to_string(a.choice));
    j["pmi"] = a.pmi;
    return j;
}

McqAnswer mcq_answer_from_json(const nlohmann::json& j) {
    McqAnswer a;
    a.choice = mcq_choice_from_string(j.value("choice", "unknown"));
    if (j.contains("pmi")) a.pmi = j["pmi"].get<std::map<std::string, double>>();
    return a;
}

bool is_upper_initial(const std::string& word) {
    return !word.empty() && std::isupper(static_cast<unsigned char>(word[0])) != 0;
}

void collect_capitalized_pool_tokens(const std::string& text,
                                     const std::unordered_set<std::string>& pool_index,
                                     std::unordered_set<std::string>& found) {
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (!(std::isalnum(c) || c >= 0x80)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size()) {
            unsigned char b = static_cast<unsigned char>(text[j]);
            if (!(std::isalnum(b) || b >= 0x80)) break;
            ++j;
        }
        std::string word = text.substr(i, j - i);
        if (is_upper_initial(word) && pool_index.count(word) > 0) found.insert(word);
        i = j;
    }
}

}  // namespace

bool RecordAnnotations::all_passed() const {
    if (verdicts.empty()) return false;
    return std::all_of(verdicts.begin(), verdicts.end(),
                       [](const FilterVerdict& v) { return v.passed; });
}

nlohmann::json record_to_json(const DialogueRecord& record) {
    nlohmann::json j;
    j["schema_version"] = kDatasetSchemaVersion;
    j["triple"] = {{"id", record.triple.id},
                   {"head", record.triple.head},
                   {"relation", std::string(to_string(record.triple.relation))},
                   {"tail", record.triple.tail}};
    j["name_map"]["x"] = record.name_map.x;
    if (record.name_map.y) j["name_map"]["y"] = *record.name_map.y;
    j["sentence_form"] = record.sentence_form.text;

    if (record.narrative) {
        j["narrative"] = {{"text", record.narrative->text},
                          {"sentence_count", record.narrative->sentence_count}};
    }
    if (record.speakers) {
        j["speakers"] = {{"x", record.speakers->x_speaker},
                         {"other", record.speakers->other_speaker}};
    }
    if (record.raw_conversation) j["raw_conversation"] = *record.raw_conversation;
    if (record.conversation) {
        nlohmann::json turns = nlohmann::json::array();
        for (const auto& turn : record.conversation->turns) {
            turns.push_back({{"speaker", turn.speaker}, {"utterance", turn.utterance}});
        }
        j["conversation"] = std::move(turns);
    }

    nlohmann::json ann;
    if (!record.annotations.verdicts.empty()) {
        nlohmann::json verdicts = nlohmann::json::array();
        for (const auto& v : record.annotations.verdicts) verdicts.push_back(verdict_to_json(v));
        ann["verdicts"] = std::move(verdicts);
    }
    if (record.annotations.mcq) {
        ann["mcq"] = {{"head", mcq_answer_to_json(record.annotations.mcq->head)},
                      {"relation_tail", mcq_answer_to_json(record.annotations.mcq->relation_tail)},
                      {"fully_encapsulating", record.annotations.mcq->fully_encapsulating}};
    }
    if (record.annotations.emotion) {
        ann["emotion"] = {{"experiencer", record.annotations.emotion->experiencer},
                          {"emotion", record.annotations.emotion->emotion},
                          {"cause", record.annotations.emotion->cause}};
    }
    if (record.annotations.unsafe_skip_safety) ann["unsafe_skip_safety"] = true;
    if (record.annotations.past_tense_be_singular_default) {
        ann["past_tense_be_singular_default"] = true;
    }
    if (!record.annotations.notes.empty()) ann["notes"] = record.annotations.notes;
    if (!ann.empty()) j["annotations"] = std::move(ann);

    nlohmann::json prov;
    prov["seed"] = record.provenance.seed;
    prov["pipeline_version"] = record.provenance.pipeline_version;
    prov["config_hash"] = record.provenance.config_hash;
    if (!record.provenance.prompt_hashes.empty()) {
        prov["prompt_hashes"] = record.provenance.prompt_hashes;
    }
    if (!record.provenance.name_mitigation.empty()) {
        prov["name_mitigation"] = record.provenance.name_mitigation;
    }
    j["provenance"] = std::move(prov);
    return j;
}

DialogueRecord record_from_json(const nlohmann::json& j) {
    DialogueRecord r;
    const auto& t = j.at("triple");
    r.triple.id = t.at("id").get<std::string>();
    r.triple.head = t.at("head").get<std::string>();
    auto rel = relation_from_string(t.at("relation").get<std::string>());
    if (!rel) throw DataError("record has unknown relation: " + t.at("relation").get<std::string>());
    r.triple.relation = *rel;
    r.triple.tail = t.at("tail").get<std::string>();

    r.name_map.x = j.at("name_map").at("x").get<std::string>();
    if (j.at("name_map").contains("y")) r.name_map.y = j.at("name_map").at("y").get<std::string>();
    r.sentence_form.text = j.at("sentence_form").get<std::string>();
    r.sentence_form.triple_id = r.triple.id;
    r.sentence_form.name_map = r.name_map;

    if (j.contains("narrative")) {
        Narrative n;
        n.text = j.at("narrative").at("text").get<std::string>();
        n.sentence_count = j.at("narrative").at("sentence_count").get<int>();
        r.narrative = std::move(n);
    }
    if (j.contains("speakers")) {
        r.speakers = SpeakerPair{j.at("speakers").at("x").get<std::string>(),
                                 j.at("speakers").at("other").get<std::string>()};
    }
    if (j.contains("raw_conversation")) {
        r.raw_conversation = j.at("raw_conversation").get<std::string>();
    }
    if (j.contains("conversation")) {
        Conversation conv;
        for (const auto& turn : j.at("conversation")) {
            conv.turns.push_back(Turn{turn.at("speaker").get<std::string>(),
                                      turn.at("utterance").get<std::string>()});
        }
        for (const auto& turn : conv.turns) {
            if (std::find(conv.speakers.begin(), conv.speakers.end(), turn.speaker) ==
                conv.speakers.end()) {
                conv.speakers.push_back(turn.speaker);
            }
        }
        r.conversation = std::move(conv);
    }

    if (j.contains("annotations")) {
        const auto& ann = j.at("annotations");
        if (ann.contains("verdicts")) {
            for (const auto& v : ann.at("verdicts")) {
                r.annotations.verdicts.push_back(verdict_from_json(v));
            }
        }
        if (ann.contains("mcq")) {
            McqAnnotation mcq;
            mcq.head = mcq_answer_from_json(ann.at("mcq").at("head"));
            mcq.relation_tail = mcq_answer_from_json(ann.at("mcq").at("relation_tail"));
            mcq.fully_encapsulating = ann.at("mcq").value("fully_encapsulating", false);
            r.annotations.mcq = std::move(mcq);
        }
        if (ann.contains("emotion")) {
            r.annotations.emotion =
                EmotionAnnotation{ann.at("emotion").at("experiencer").get<std::string>(),
                                  ann.at("emotion").at("emotion").get<std::string>(),
                                  ann.at("emotion").at("cause").get<std::string>()};
        }
        r.annotations.unsafe_skip_safety = ann.value("unsafe_skip_safety", false);
        r.annotations.past_tense_be_singular_default =
            ann.value("past_tense_be_singular_default", false);
        if (ann.contains("notes")) {
            r.annotations.notes = ann.at("notes").get<std::map<std::string, std::string>>();
        }
    }

    const auto& prov = j.at("provenance");
    r.provenance.seed = prov.value("seed", 0ull);
    r.provenance.pipeline_version = prov.value("pipeline_version", "");
    r.provenance.config_hash = prov.value("config_hash", "");
    if (prov.contains("prompt_hashes")) {
        r.provenance.prompt_hashes = prov.at("prompt_hashes").get<std::map<std::string, std::string>>();
    }
    if (prov.contains("name_mitigation")) {
        r.provenance.name_mitigation =
            prov.at("name_mitigation").get<std::map<std::string, std::string>>();
    }
    return r;
}

NameMitigator::NameMitigator(const NamePool& pool)
    : names_(pool.names), index_(pool.names.begin(), pool.names.end()) {
    if (names_.empty()) throw DataError("mitigation pool is empty");
}

std::vector<std::string> NameMitigator::detect(const DialogueRecord& record) const {
    std::unordered_set<std::string> found;

    // assigned names are always subject to replacement
    found.insert(record.name_map.x);
    if (record.name_map.y) found.insert(*record.name_map.y);

    collect_capitalized_pool_tokens(record.sentence_form.text, index_, found);
    if (record.narrative) collect_capitalized_pool_tokens(record.narrative->text, index_, found);
    if (record.speakers) {
        collect_capitalized_pool_tokens(record.speakers->x_speaker, index_, found);
        collect_capitalized_pool_tokens(record.speakers->other_speaker, index_, found);
    }
    if (record.conversation) {
        for (const auto& turn : record.conversation->turns) {
            collect_capitalized_pool_tokens(turn.speaker, index_, found);
            collect_capitalized_pool_tokens(turn.utterance, index_, found);
        }
    }

    // deterministic order for sampling
    std::vector<std::string> names(found.begin(), found.end());
    std::sort(names.begin(), names.end());
    return names;
}

DialogueRecord NameMitigator::apply(const DialogueRecord& record, Rng& rng) const {
    std::vector<std::string> old_names = detect(record);
    std::unordered_set<std::string> excluded(old_names.begin(), old_names.end());

    std::size_t available = 0;
    for (const auto& name : names_) {
        if (excluded.count(name) == 0) ++available;
    }
    if (available < old_names.size()) {
        throw DataError("mitigation pool exhausted: " + std::to_string(old_names.size()) +
                        " names needed, " + std::to_string(available) + " available");
    }

    // uniform draw without replacement, by rejection: old names are a sliver
    // of the pool, so retries are rare
    std::map<std::string, std::string> mapping;
    std::unordered_set<std::string> used;
    for (const auto& old_name : old_names) {
        std::string pick;
        do {
            pick = names_[rng.uniform_index(names_.size())];
        } while (excluded.count(pick) > 0 || used.count(pick) > 0);
        used.insert(pick);
        mapping[old_name] = pick;
    }

    auto rename = [&](const std::string& text) { return replace_words(text, mapping); };

    DialogueRecord out = record;
    out.name_map.x = rename(record.name_map.x);
    if (record.name_map.y) out.name_map.y = rename(*record.name_map.y);
    out.sentence_form.text = rename(record.sentence_form.text);
    out.sentence_form.name_map = out.name_map;
    if (record.narrative) out.narrative->text = rename(record.narrative->text);
    if (record.speakers) {
        out.speakers->x_speaker = rename(record.speakers->x_speaker);
        out.speakers->other_speaker = rename(record.speakers->other_speaker);
    }
    if (record.raw_conversation) out.raw_conversation = rename(*record.raw_conversation);
    if (record.conversation) {
        for (auto& turn : out.conversation->turns) {
            turn.speaker = rename(turn.speaker);
            turn.utterance = rename(turn.utterance);
        }
        for (auto& speaker : out.conversation->speakers) speaker = rename(speaker);
    }
    if (record.annotations.emotion) {
        out.annotations.emotion->experiencer = rename(record.annotations.emotion->experiencer);
    }
    out.provenance.name_mitigation = mapping;
    return out;
}

DialogueRecord mitigate_names(const DialogueRecord& record, const NamePool& pool, Rng& rng) {
    return NameMitigator(pool).apply(record, rng);
}

std::vector<std::string> detect_names(const DialogueRecord& record, const NamePool& pool) {
    return NameMitigator(pool).detect(record);
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw DataError("cannot open dataset for writing: " + path.string());
}

void DatasetWriter::write(const DialogueRecord& record) {
    if (!record.complete()) {
        throw DataError("record " + record.triple.id + " is incomplete");
    }
    if (!record.annotations.all_passed()) {
        throw DataError("record " + record.triple.id + " carries a failed filter verdict");
    }
    out_ << record_to_json(record).dump() << '\n';
    manifest_.record_count += 1;
    manifest_.relation_counts[std::string(to_string(record.triple.relation))] += 1;
}

DatasetManifest DatasetWriter::finish() {
    out_.flush();
    if (!out_) throw DataError("failed writing dataset: " + path_.string());
    return manifest_;
}

DatasetManifest write_dataset(const std::vector<DialogueRecord>& records,
                              const std::filesystem::path& path) {
    DatasetWriter writer(path);
    for (const auto& record : records) writer.write(record);
    return writer.finish();
}

std::vector<DialogueRecord> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path.string());

    std::vector<DialogueRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw DataError("dataset line " + std::to_string(line_no) + ": malformed JSON");
        }
        int version = j.value("schema_version", -1);
        if (version != kDatasetSchemaVersion) {
            throw DataError("dataset line " + std::to_string(line_no) + ": schema version " +
                            std::to_string(version) + " does not match " +
                            std::to_string(kDatasetSchemaVersion));
        }
        try {
            records.push_back(record_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["record_count"] = record_count;
    j["relation_counts"] = relation_counts;
    j["failure_counts"] = failure_counts;
    return j;
}

}  // namespace convogen
