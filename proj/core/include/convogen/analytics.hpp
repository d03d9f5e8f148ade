#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convogen/record.hpp"

namespace convogen {

inline constexpr double kMtldTtrThreshold = 0.72;

// Measure of Textual Lexical Diversity: mean factor length over forward and
// backward passes. A factor closes when the running type-token ratio drops to
// the threshold or below; the tail contributes a partial factor
// (1 - TTR_remaining) / (1 - threshold). Returns nullopt (undefined) when both
// directions close zero factors, e.g. short all-distinct input.
std::optional<double> mtld(const std::vector<std::string>& tokens,
                           double ttr_threshold = kMtldTtrThreshold);

struct DatasetStats {
    std::size_t n_dialogues = 0;
    double avg_turns = 0.0;
    double avg_utterance_length = 0.0;  // tokens, documented tokenizer
    double mtld_mean = 0.0;             // over dialogues with defined MTLD
    std::size_t mtld_skipped = 0;       // dialogues with undefined MTLD
    std::map<std::string, double> relation_ratios;
    double filter_retention = 1.0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

// Shardable accumulator: merge(a, b) over shards equals stats over the
// concatenation (counts and sums are carried, means derived at the end).
struct StatsAccumulator {
    std::size_t n_dialogues = 0;
    std::size_t total_turns = 0;
    std::size_t total_utterances = 0;
    std::size_t total_utterance_tokens = 0;
    double mtld_sum = 0.0;
    std::size_t mtld_defined = 0;
    std::size_t mtld_skipped = 0;
    std::map<std::string, std::size_t> relation_counts;

    void add(const DialogueRecord& record);
    void merge(const StatsAccumulator& other);
    DatasetStats finalize(std::optional<std::size_t> input_count = std::nullopt) const;
};

DatasetStats dataset_stats(const std::vector<DialogueRecord>& records,
                           std::optional<std::size_t> input_count = std::nullopt);

// The fixed 27-label emotion vocabulary used for distribution reports.
const std::vector<std::string>& emotion_vocabulary();

// Percentages over the label multiset, summing to 100, sorted descending
// (ties broken by label). Throws DataError on empty input or unknown labels.
std::vector<std::pair<std::string, double>> emotion_distribution(
    const std::vector<std::string>& labels);

// Head-to-head judge prompt for batch response evaluation; byte-stable.
std::string judge_prompt(const std::string& context, const std::string& response_a,
                         const std::string& response_b);

// Two-proportion z-score for win-rate tables.
double two_proportion_z(std::size_t wins_a, std::size_t n_a, std::size_t wins_b, std::size_t n_b);

}  // namespace convogen
