#include <doctest.h>

#include <cstdlib>
#include <map>

#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/pipeline.hpp"
#include "test_util.hpp"

using namespace convogen;
using convogen::testing::TempDir;
using convogen::testing::read_file;
using convogen::testing::write_file;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 20240311;
const std::filesystem::path kFixtures = CONVOGEN_FIXTURE_DIR;
const std::filesystem::path kLexicon = CONVOGEN_LEXICON_PATH;

json fixture_config_json(const TempDir& dir, std::uint64_t seed = kSeed) {
    json config;
    config["seed"] = seed;
    config["workers"] = 3;
    config["paths"] = {{"triples", (kFixtures / "e2e_triples.tsv").string()},
                       {"triples_format", "tsv"},
                       {"names_top1k", (kFixtures / "names_top1k.txt").string()},
                       {"names_top1k_limit", 26},
                       {"names_top10k", (kFixtures / "names_top10k.txt").string()},
                       {"names_top10k_limit", 127},
                       {"lexicon", kLexicon.string()},
                       {"cache_dir", (dir.path() / "cache").string()},
                       {"output_dir", (dir.path() / "runs").string()}};
    config["backend"] = {{"kind", "mock"},
                         {"mock_script", (kFixtures / "mock_script.json").string()},
                         {"requests_per_minute", 1000000},
                         {"max_in_flight", 8},
                         {"retry", {{"max_attempts", 3}, {"initial_delay_ms", 1}, {"multiplier", 2.0}}}};
    config["safety"] = {{"kind", "keyword"},
                        {"keywords", (kFixtures / "safety_keywords.txt").string()}};
    return config;
}

PipelineConfig fixture_config(const TempDir& dir, std::uint64_t seed = kSeed) {
    auto path = write_file(dir.file("config.json"), fixture_config_json(dir, seed).dump(2));
    return PipelineConfig::load(path);
}

std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
    std::map<std::string, std::string> contents;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            contents[std::filesystem::relative(entry.path(), root).string()] =
                read_file(entry.path());
        }
    }
    return contents;
}

}  // namespace

TEST_CASE("config defaults pin the documented sampling parameters") {
    TempDir dir;
    // paths only; params section omitted entirely
    json j = fixture_config_json(dir);
    j.erase("backend");
    j["backend"] = {{"kind", "mock"}, {"mock_script", (kFixtures / "mock_script.json").string()}};
    auto path = write_file(dir.file("minimal.json"), j.dump());
    PipelineConfig config = PipelineConfig::load(path);

    CHECK(config.params.narrative.temperature == doctest::Approx(0.9));
    CHECK(config.params.narrative.top_p == doctest::Approx(0.95));
    CHECK(config.params.narrative.frequency_penalty == doctest::Approx(1.0));
    CHECK(config.params.narrative.presence_penalty == doctest::Approx(0.6));
    CHECK(config.params.narrative.max_tokens == 1024);

    CHECK(config.params.speaker.temperature == doctest::Approx(0.0));
    CHECK(config.params.speaker.top_p == doctest::Approx(1.0));
    CHECK(config.params.speaker.frequency_penalty == doctest::Approx(0.0));
    CHECK(config.params.speaker.presence_penalty == doctest::Approx(0.0));
    CHECK(config.params.speaker.max_tokens == 16);

    CHECK(config.params.conversation == config.params.narrative);

    CHECK(config.filters.min_turns == 4);
    CHECK(config.filters.max_turns == 20);
    CHECK(config.filters.toxicity_threshold == doctest::Approx(0.5));
    CHECK(config.export_config.p_drop_narrative == doctest::Approx(0.3));
    CHECK(config.export_config.p_drop_instruction == doctest::Approx(0.5));
}

TEST_CASE("config hash is stable and seed-sensitive") {
    TempDir dir;
    PipelineConfig a = fixture_config(dir);
    PipelineConfig b = fixture_config(dir);
    CHECK(a.config_hash() == b.config_hash());

    PipelineConfig c = fixture_config(dir, kSeed + 1);
    CHECK(a.config_hash() != c.config_hash());

    // worker count is not semantic
    PipelineConfig d = fixture_config(dir);
    d.workers = 16;
    CHECK(a.config_hash() == d.config_hash());

    // export parameters shape only the training artifact and may be
    // overridden from the CLI without orphaning upstream artifacts
    PipelineConfig e = fixture_config(dir);
    e.export_config.p_drop_narrative = 0.9;
    e.export_config.separator = "[S]";
    CHECK(a.config_hash() == e.config_hash());
}

TEST_CASE("config validation rejects bad values") {
    TempDir dir;
    json j = fixture_config_json(dir);
    j["params"] = {{"narrative", {{"top_p", 1.5}}}};
    auto path = write_file(dir.file("bad1.json"), j.dump());
    CHECK_THROWS_AS(PipelineConfig::load(path), ConfigError);

    json k = fixture_config_json(dir);
    k["backend"] = {{"kind", "mock"}};  // missing mock_script
    CHECK_THROWS_AS(PipelineConfig::load(write_file(dir.file("bad2.json"), k.dump())), ConfigError);

    json m = fixture_config_json(dir);
    m["paths"].erase("triples");
    CHECK_THROWS_AS(PipelineConfig::load(write_file(dir.file("bad3.json"), m.dump())), ConfigError);
}

TEST_CASE("full pipeline run matches the designed per-stage outcomes") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    Pipeline pipeline(config, dir.path() / "runs" / "main");

    StageCounts ingest = pipeline.ingest();
    CHECK(ingest.input == 20);
    CHECK(ingest.output == 20);
    CHECK(ingest.rejected_total() == 0);

    StageCounts distill = pipeline.distill();
    CHECK(distill.input == 20);
    CHECK(distill.output == 17);
    CHECK(distill.rejected.at("EmptyNarrative") == 1);
    CHECK(distill.rejected.at("TooLong") == 1);
    CHECK(distill.rejected.at("SameSpeaker") == 1);

    StageCounts filter = pipeline.filter();
    CHECK(filter.input == 17);
    CHECK(filter.output == 9);
    CHECK(filter.rejected.at("TooFewTurns") == 1);
    CHECK(filter.rejected.at("TooManyTurns") == 1);
    CHECK(filter.rejected.at("TooManySpeakers") == 1);
    CHECK(filter.rejected.at("Repetition") == 1);
    CHECK(filter.rejected.at("NonHumanSpeaker") == 1);
    CHECK(filter.rejected.at("ToxicityThreshold") == 1);
    CHECK(filter.rejected.at("LacksHeadEvent") == 2);
    CHECK(filter.quarantined == 0);

    StageCounts mitigate = pipeline.mitigate();
    CHECK(mitigate.input == 9);
    CHECK(mitigate.output == 9);

    StageCounts exported = pipeline.export_examples();
    CHECK(exported.input == 9);
    CHECK(exported.output == 41);  // sum over records of (turns - 1)

    DatasetStats stats = pipeline.stats();
    CHECK(stats.n_dialogues == 9);
    CHECK(stats.filter_retention == doctest::Approx(9.0 / 17.0));

    // every dataset record passed all four stages and carries provenance
    auto records = read_dataset(pipeline.dataset_path());
    REQUIRE(records.size() == 9);
    for (const auto& record : records) {
        CHECK(record.annotations.verdicts.size() == 4);
        CHECK(record.annotations.all_passed());
        CHECK(record.provenance.config_hash == config.config_hash());
        CHECK_FALSE(record.provenance.name_mitigation.empty());
        CHECK_FALSE(record.raw_conversation.has_value());
        if (record.triple.relation == Relation::xReact) {
            REQUIRE(record.annotations.emotion.has_value());
            CHECK(record.annotations.emotion->experiencer == record.name_map.x);
        }
    }
}

TEST_CASE("resume reuses the response cache instead of the backend") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    auto mock = MockBackend::from_file(config.backend.mock_script);

    Pipeline pipeline(config, dir.path() / "runs" / "r", false, mock);
    pipeline.ingest();
    pipeline.distill();
    int first_run_calls = mock->complete_calls();
    CHECK(first_run_calls > 0);
    std::string distilled_bytes = read_file(pipeline.distilled_path());

    pipeline.filter();
    CHECK(mock->score_calls() > 0);
    std::string filtered_bytes = read_file(pipeline.filtered_path());

    // lose the stage outputs, keep the cache: rerun rebuilds identical bytes
    // without touching the backend again
    std::filesystem::remove(pipeline.distilled_path());
    std::filesystem::remove(pipeline.filtered_path());
    mock->reset_counters();
    Pipeline resumed(config, dir.path() / "runs" / "r", true, mock);
    resumed.distill();
    CHECK(mock->complete_calls() == 0);
    CHECK(read_file(resumed.distilled_path()) == distilled_bytes);

    resumed.filter();
    CHECK(mock->complete_calls() == 0);  // non-human probes cached too
    CHECK(mock->score_calls() == 0);
    CHECK(read_file(resumed.filtered_path()) == filtered_bytes);
}

TEST_CASE("artifacts from mismatched config hashes refuse to combine") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    Pipeline pipeline(config, dir.path() / "runs" / "m");
    pipeline.ingest();

    PipelineConfig other = fixture_config(dir, kSeed + 7);
    Pipeline mismatched(other, dir.path() / "runs" / "m", true);
    CHECK_THROWS_AS(mismatched.distill(), UpstreamArtifactError);
}

TEST_CASE("a non-resume run refuses a populated run directory") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    Pipeline pipeline(config, dir.path() / "runs" / "p");
    pipeline.ingest();
    CHECK_THROWS_AS(Pipeline(config, dir.path() / "runs" / "p", false), ConfigError);
    CHECK_NOTHROW(Pipeline(config, dir.path() / "runs" / "p", true));
}

TEST_CASE("unsafe-skip-safety watermarks every output record") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    config.safety.unsafe_skip = true;
    Pipeline pipeline(config, dir.path() / "runs" / "u");
    pipeline.ingest();
    pipeline.distill();
    StageCounts filter = pipeline.filter();
    // the toxic fixture now passes straight through
    CHECK(filter.output == 10);
    for (const auto& record : read_stage_records(pipeline.filtered_path())) {
        CHECK(record.annotations.unsafe_skip_safety);
    }
}

TEST_CASE("worker count does not affect output bytes") {
    TempDir dir;
    PipelineConfig serial = fixture_config(dir);
    serial.workers = 1;
    PipelineConfig parallel = fixture_config(dir);
    parallel.workers = 8;

    auto run = [](PipelineConfig config, const std::filesystem::path& run_dir) {
        Pipeline p(config, run_dir);
        p.ingest();
        p.distill();
        p.filter();
        p.mitigate();
        p.export_examples();
    };
    run(serial, dir.path() / "runs" / "w1");
    run(parallel, dir.path() / "runs" / "w8");

    for (const char* artifact : {"ingested.jsonl", "distilled.jsonl", "filtered.jsonl",
                                 "dataset.jsonl", "training.jsonl"}) {
        CHECK(read_file(dir.path() / "runs" / "w1" / artifact) ==
              read_file(dir.path() / "runs" / "w8" / artifact));
    }
}

TEST_CASE("stats folds an emotion label file into the report") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    Pipeline pipeline(config, dir.path() / "runs" / "em");
    pipeline.ingest();
    pipeline.distill();
    pipeline.filter();
    pipeline.mitigate();

    std::string labels;
    for (int i = 0; i < 6; ++i) labels += R"({"utterance_id":"u)" + std::to_string(i) +
                                          R"(","label":"curiosity"})" "\n";
    for (int i = 6; i < 10; ++i) labels += R"({"utterance_id":"u)" + std::to_string(i) +
                                           R"(","label":"joy"})" "\n";
    auto label_path = write_file(dir.file("labels.jsonl"), labels);

    pipeline.stats(label_path);
    json report = json::parse(read_file(dir.path() / "runs" / "em" / "stats.json"));
    REQUIRE(report.contains("emotion_distribution"));
    CHECK(report["emotion_distribution"][0]["label"] == "curiosity");
    CHECK(report["emotion_distribution"][0]["percent"].get<double>() == doctest::Approx(60.0));
    std::string table = read_file(dir.path() / "runs" / "em" / "stats.txt");
    CHECK(table.find("emotion distribution") != std::string::npos);
}

TEST_CASE("two identical runs produce byte-identical trees") {
    TempDir dir_a, dir_b;
    PipelineConfig config_a = fixture_config(dir_a);
    PipelineConfig config_b = fixture_config(dir_b);

    auto run_all = [](PipelineConfig config, const std::filesystem::path& run_dir) {
        Pipeline p(config, run_dir);
        p.ingest();
        p.distill();
        p.filter();
        p.mitigate();
        p.export_examples();
        p.stats();
    };
    run_all(config_a, dir_a.path() / "tree");
    run_all(config_b, dir_b.path() / "tree");

    auto tree_a = tree_contents(dir_a.path() / "tree");
    auto tree_b = tree_contents(dir_b.path() / "tree");
    REQUIRE(tree_a.size() == tree_b.size());
    for (const auto& [name, bytes] : tree_a) {
        REQUIRE(tree_b.count(name) == 1);
        CHECK(tree_b.at(name) == bytes);
    }
}

TEST_CASE("stages stream correctly across batch boundaries") {
    TempDir dir;
    PipelineConfig config = fixture_config(dir);
    Pipeline pipeline(config, dir.path() / "runs" / "big");

    // synthesize a filtered artifact larger than one processing batch
    const int n = 1200;
    std::vector<DialogueRecord> records;
    records.reserve(n);
    for (int i = 0; i < n; ++i) {
        DialogueRecord r;
        char id[16];
        std::snprintf(id, sizeof(id), "s%05d", i);
        r.triple = Triple{id, "PersonX tends the garden", all_relations()[i % 6], "to relax"};
        r.name_map.x = "Madeleine";
        r.sentence_form = SentenceForm{"Madeleine tends the garden.", id, r.name_map};
        r.narrative = Narrative{"Madeleine tended the garden all morning.", 1};
        r.speakers = SpeakerPair{"Madeleine", "Riley"};
        Conversation conv;
        conv.turns = {Turn{"Madeleine", "Row " + std::to_string(i) + " is done."},
                      Turn{"Riley", "Already? Impressive."},
                      Turn{"Madeleine", "The weather helped."},
                      Turn{"Riley", "Lunch, then."}};
        conv.speakers = {"Madeleine", "Riley"};
        r.conversation = conv;
        for (FilterStage stage : {FilterStage::Basic, FilterStage::NonHuman, FilterStage::Safety,
                                  FilterStage::Commonsense}) {
            r.annotations.verdicts.push_back(FilterVerdict::pass(stage));
        }
        r.provenance.seed = config.seed;
        r.provenance.pipeline_version = kPipelineVersion;
        r.provenance.config_hash = config.config_hash();
        records.push_back(std::move(r));
    }
    write_stage_records(records, pipeline.filtered_path());

    auto fake_manifest = [&](const std::string& stage, std::size_t output) {
        StageManifest m;
        m.stage = stage;
        m.config_hash = config.config_hash();
        m.seed = config.seed;
        m.counts.input = output;
        m.counts.output = output;
        m.write(dir.path() / "runs" / "big" / (stage + ".manifest.json"));
    };
    fake_manifest("ingest", n);
    fake_manifest("distill", n);
    fake_manifest("filter", n);

    StageCounts mitigate = pipeline.mitigate();
    CHECK(mitigate.input == n);
    CHECK(mitigate.output == n);

    // order preserved across batches
    auto dataset = read_dataset(pipeline.dataset_path());
    REQUIRE(dataset.size() == n);
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "s%05d", i);
        CHECK(dataset[static_cast<std::size_t>(i)].triple.id == id);
    }

    StageCounts exported = pipeline.export_examples();
    CHECK(exported.input == n);
    CHECK(exported.output == n * 3);  // 4 turns -> 3 examples each

    DatasetStats stats = pipeline.stats();
    CHECK(stats.n_dialogues == n);
    CHECK(stats.avg_turns == doctest::Approx(4.0));
}

TEST_CASE("judge prompt files round through the verbatim template") {
    TempDir dir;
    auto input = write_file(dir.file("pairs.jsonl"),
                            R"({"context":"A: hi\nB: hello","response_a":"resp one","response_b":"resp two"})"
                            "\n");
    auto output = dir.file("prompts.jsonl");
    CHECK(write_judge_prompts(input, output) == 1);
    std::string line = read_file(output);
    json j = json::parse(line);
    std::string prompt = j["prompt"].get<std::string>();
    CHECK(prompt.find("You are a response evaluator.") == 0);
    CHECK(prompt.find("1) resp one") != std::string::npos);
    CHECK(prompt.find("2) resp two") != std::string::npos);
}

TEST_CASE("cli drives the full pipeline with documented exit codes") {
    TempDir dir;
    json config_json = fixture_config_json(dir);
    auto config_path = write_file(dir.file("cli_config.json"), config_json.dump(2));
    std::string run_dir = (dir.path() / "runs" / "cli").string();
    std::string cli = CONVOGEN_CLI_PATH;
    std::string base = cli + " %s --config " + config_path.string() + " --run-dir " + run_dir +
                       " >/dev/null 2>&1";

    auto run = [&](const std::string& subcommand, const std::string& extra = "") {
        char buf[1024];
        std::snprintf(buf, sizeof(buf), (base + extra).c_str(), subcommand.c_str());
        int status = std::system(buf);
        return WEXITSTATUS(status);
    };

    CHECK(run("ingest") == 0);
    CHECK(run("distill") == 0);
    CHECK(run("filter") == 0);
    CHECK(run("mitigate") == 0);
    CHECK(run("export") == 0);
    CHECK(run("stats") == 0);

    // standalone stats over the dataset artifact
    std::string stats_cmd = cli + " stats --input " + run_dir + "/dataset.jsonl >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(stats_cmd.c_str())) == 0);

    // export accepts separator/probability overrides without orphaning the run
    std::string export_cmd = cli + " export --config " + config_path.string() + " --run-dir " +
                             run_dir + " --separator [SEPX] --p-drop-narrative 0 "
                             ">/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(export_cmd.c_str())) == 0);
    CHECK(read_file(run_dir + "/training.jsonl").find("[SEPX]") != std::string::npos);

    // judge prompts
    auto pairs = write_file(dir.file("pairs.jsonl"),
                            R"({"context":"c","response_a":"a","response_b":"b"})" "\n");
    std::string judge_cmd = cli + " judge-prompts --input " + pairs.string() + " --output " +
                            (dir.path() / "prompts.jsonl").string() + " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(judge_cmd.c_str())) == 0);

    // exit code 1: config error
    auto bad_config = write_file(dir.file("bad.json"), "{}");
    std::string bad_cmd = cli + " ingest --config " + bad_config.string() + " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(bad_cmd.c_str())) == 1);

    // exit code 2: missing upstream artifact
    std::string fresh_dir = (dir.path() / "runs" / "fresh").string();
    std::string upstream_cmd = cli + " distill --config " + config_path.string() + " --run-dir " +
                               fresh_dir + " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(upstream_cmd.c_str())) == 2);
}
