// convogen: distills narrative-grounded social dialogues from commonsense
// triples through a pluggable text-generation backend, then filters, curates,
// and exports the result.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "convogen/errors.hpp"
#include "convogen/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string run_dir;
    bool resume = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool unsafe_skip_safety = false;
    std::optional<double> p_drop_narrative;
    std::optional<double> p_drop_instruction;
    std::optional<std::string> separator;
    std::optional<std::string> turn_indicator;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
    auto* config = cmd->add_option("--config", opts.config_path, "pipeline config JSON");
    if (needs_config) config->required();
    cmd->add_option("--run-dir", opts.run_dir, "run directory (default: <output_dir>/run-<hash>)");
    cmd->add_flag("--resume", opts.resume, "reuse an existing run directory and response cache");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--workers", opts.workers, "override the worker count");
}

convogen::Pipeline make_pipeline(const CommonOptions& opts) {
    convogen::PipelineConfig config = convogen::PipelineConfig::load(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    if (opts.workers) config.workers = *opts.workers;
    if (opts.unsafe_skip_safety) config.safety.unsafe_skip = true;
    if (opts.p_drop_narrative) config.export_config.p_drop_narrative = *opts.p_drop_narrative;
    if (opts.p_drop_instruction) config.export_config.p_drop_instruction = *opts.p_drop_instruction;
    if (opts.separator) config.export_config.separator = *opts.separator;
    if (opts.turn_indicator) config.export_config.turn_indicator = *opts.turn_indicator;
    config.validate();

    std::filesystem::path run_dir =
        opts.run_dir.empty() ? convogen::default_run_dir(config) : std::filesystem::path(opts.run_dir);
    return convogen::Pipeline(std::move(config), run_dir, opts.resume);
}

void print_counts(const std::string& stage, const convogen::StageCounts& counts) {
    std::printf("%s: %zu in, %zu out", stage.c_str(), counts.input, counts.output);
    if (counts.rejected_total() > 0) {
        std::printf(", %zu rejected (", counts.rejected_total());
        bool first = true;
        for (const auto& [reason, count] : counts.rejected) {
            std::printf("%s%s=%zu", first ? "" : ", ", reason.c_str(), count);
            first = false;
        }
        std::printf(")");
    }
    if (counts.quarantined > 0) std::printf(", %zu quarantined", counts.quarantined);
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"convogen: commonsense-grounded dialogue distillation pipeline"};
    app.require_subcommand(1);

    CommonOptions ingest_opts, distill_opts, filter_opts, mitigate_opts, export_opts, stats_opts;
    std::string stats_input, stats_emotions, judge_input, judge_output;

    auto* ingest = app.add_subcommand("ingest", "load triples, assign names, build sentence forms");
    add_common(ingest, ingest_opts);

    auto* distill = app.add_subcommand("distill", "generate narratives, speakers, and conversations");
    add_common(distill, distill_opts);

    auto* filter = app.add_subcommand("filter", "run the basic/non-human/safety/commonsense chain");
    add_common(filter, filter_opts);
    filter->add_flag("--unsafe-skip-safety", filter_opts.unsafe_skip_safety,
                     "skip the safety classifier; watermarks every output record");

    auto* mitigate = app.add_subcommand("mitigate", "re-sample names and write the final dataset");
    add_common(mitigate, mitigate_opts);

    auto* exporter = app.add_subcommand("export", "emit seq2seq training examples");
    add_common(exporter, export_opts);
    exporter->add_option("--p-drop-narrative", export_opts.p_drop_narrative,
                         "narrative dropout probability (default from config, 0.3)");
    exporter->add_option("--p-drop-instruction", export_opts.p_drop_instruction,
                         "instruction dropout probability (default from config, 0.5)");
    exporter->add_option("--separator", export_opts.separator, "component separator token");
    exporter->add_option("--turn-indicator", export_opts.turn_indicator, "turn separator token");

    auto* stats = app.add_subcommand("stats", "dataset statistics report");
    add_common(stats, stats_opts, false);
    stats->add_option("--input", stats_input, "dataset JSONL (standalone mode, no config needed)");
    stats->add_option("--emotions", stats_emotions, "per-utterance emotion label JSONL");

    auto* judge = app.add_subcommand("judge-prompts", "build head-to-head judge prompts");
    judge->add_option("--input", judge_input, "JSONL with context/response_a/response_b")->required();
    judge->add_option("--output", judge_output, "output JSONL")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            print_counts("ingest", make_pipeline(ingest_opts).ingest());
        } else if (distill->parsed()) {
            distill_opts.resume = true;  // stage reads the same run directory
            print_counts("distill", make_pipeline(distill_opts).distill());
        } else if (filter->parsed()) {
            filter_opts.resume = true;
            print_counts("filter", make_pipeline(filter_opts).filter());
        } else if (mitigate->parsed()) {
            mitigate_opts.resume = true;
            print_counts("mitigate", make_pipeline(mitigate_opts).mitigate());
        } else if (exporter->parsed()) {
            export_opts.resume = true;
            print_counts("export", make_pipeline(export_opts).export_examples());
        } else if (stats->parsed()) {
            std::optional<std::filesystem::path> emotions;
            if (!stats_emotions.empty()) emotions = stats_emotions;
            if (!stats_input.empty()) {
                auto records = convogen::read_dataset(stats_input);
                convogen::DatasetStats result = convogen::dataset_stats(records);
                std::cout << result.to_table();
                std::cout << result.to_json().dump(2) << "\n";
            } else if (!stats_opts.config_path.empty()) {
                stats_opts.resume = true;
                convogen::DatasetStats result = make_pipeline(stats_opts).stats(emotions);
                std::cout << result.to_table();
            } else {
                std::cerr << "stats requires --input or --config\n";
                return 1;
            }
        } else if (judge->parsed()) {
            std::size_t n = convogen::write_judge_prompts(judge_input, judge_output);
            std::printf("judge-prompts: %zu prompts written to %s\n", n, judge_output.c_str());
        }
    } catch (const convogen::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const convogen::UpstreamArtifactError& e) {
        std::cerr << "upstream artifact error: " << e.what() << "\n";
        return 2;
    } catch (const convogen::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const convogen::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
