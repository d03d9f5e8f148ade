#include "convogen/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

// One directional pass; nullopt when no factor (full or partial) accrues.
std::optional<double> mtld_directional(const std::vector<std::string>& tokens,
                                       double threshold) {
    double factors = 0.0;
    std::unordered_set<std::string> types;
    std::size_t segment_tokens = 0;

    for (const auto& token : tokens) {
        types.insert(token);
        ++segment_tokens;
        double ttr = static_cast<double>(types.size()) / static_cast<double>(segment_tokens);
        if (ttr <= threshold) {
            factors += 1.0;
            types.clear();
            segment_tokens = 0;
        }
    }
    if (segment_tokens > 0) {
        double ttr = static_cast<double>(types.size()) / static_cast<double>(segment_tokens);
        factors += (1.0 - ttr) / (1.0 - threshold);
    }
    if (factors == 0.0) return std::nullopt;
    return static_cast<double>(tokens.size()) / factors;
}

std::vector<std::string> dialogue_tokens(const DialogueRecord& record) {
    std::vector<std::string> tokens;
    for (const auto& turn : record.conversation->turns) {
        std::vector<std::string> t = tokenize_words(turn.utterance);
        tokens.insert(tokens.end(), t.begin(), t.end());
    }
    return tokens;
}

}  // namespace

std::optional<double> mtld(const std::vector<std::string>& tokens, double ttr_threshold) {
    if (tokens.empty()) throw DataError("mtld: empty token list");
    if (ttr_threshold <= 0.0 || ttr_threshold >= 1.0) {
        throw ConfigError("mtld threshold must be in (0, 1)");
    }

    std::optional<double> forward = mtld_directional(tokens, ttr_threshold);
    std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
    std::optional<double> backward = mtld_directional(reversed, ttr_threshold);

    if (!forward && !backward) return std::nullopt;
    if (forward && backward) return (*forward + *backward) / 2.0;
    return forward ? forward : backward;
}

void StatsAccumulator::add(const DialogueRecord& record) {
    if (!record.conversation) throw DataError("stats over incomplete record " + record.triple.id);
    n_dialogues += 1;
    total_turns += record.conversation->turns.size();
    for (const auto& turn : record.conversation->turns) {
        total_utterances += 1;
        total_utterance_tokens += tokenize_words(turn.utterance).size();
    }
    std::vector<std::string> tokens = dialogue_tokens(record);
    if (tokens.empty()) {
        mtld_skipped += 1;
    } else if (auto value = mtld(tokens)) {
        mtld_sum += *value;
        mtld_defined += 1;
    } else {
        mtld_skipped += 1;
    }
    relation_counts[std::string(to_string(record.triple.relation))] += 1;
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
    n_dialogues += other.n_dialogues;
    total_turns += other.total_turns;
    total_utterances += other.total_utterances;
    total_utterance_tokens += other.total_utterance_tokens;
    mtld_sum += other.mtld_sum;
    mtld_defined += other.mtld_defined;
    mtld_skipped += other.mtld_skipped;
    for (const auto& [relation, count] : other.relation_counts) {
        relation_counts[relation] += count;
    }
}

DatasetStats StatsAccumulator::finalize(std::optional<std::size_t> input_count) const {
    if (n_dialogues == 0) throw DataError("stats over an empty record set");

    DatasetStats stats;
    stats.n_dialogues = n_dialogues;
    stats.avg_turns = static_cast<double>(total_turns) / static_cast<double>(n_dialogues);
    stats.avg_utterance_length =
        total_utterances == 0
            ? 0.0
            : static_cast<double>(total_utterance_tokens) / static_cast<double>(total_utterances);
    stats.mtld_mean = mtld_defined == 0 ? 0.0 : mtld_sum / static_cast<double>(mtld_defined);
    stats.mtld_skipped = mtld_skipped;
    for (const auto& [relation, count] : relation_counts) {
        stats.relation_ratios[relation] =
            static_cast<double>(count) / static_cast<double>(n_dialogues);
    }
    if (input_count && *input_count > 0) {
        stats.filter_retention =
            static_cast<double>(n_dialogues) / static_cast<double>(*input_count);
    }
    return stats;
}

DatasetStats dataset_stats(const std::vector<DialogueRecord>& records,
                           std::optional<std::size_t> input_count) {
    StatsAccumulator acc;
    for (const auto& record : records) acc.add(record);
    return acc.finalize(input_count);
}

nlohmann::json DatasetStats::to_json() const {
    nlohmann::json j;
    j["n_dialogues"] = n_dialogues;
    j["avg_turns"] = avg_turns;
    j["avg_utterance_length"] = avg_utterance_length;
    j["mtld_mean"] = mtld_mean;
    j["mtld_skipped"] = mtld_skipped;
    j["relation_ratios"] = relation_ratios;
    j["filter_retention"] = filter_retention;
    return j;
}

std::string DatasetStats::to_table() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "dialogues              " << n_dialogues << "\n"
       << "avg turns              " << avg_turns << "\n"
       << "avg utterance length   " << avg_utterance_length << "\n"
       << "lexical diversity      " << mtld_mean << " (MTLD, " << mtld_skipped << " undefined skipped)\n"
       << "filter retention       " << filter_retention * 100.0 << "%\n"
       << "relation ratios\n";
    for (const auto& [relation, ratio] : relation_ratios) {
        os << "  " << relation << "  " << ratio * 100.0 << "%\n";
    }
    return os.str();
}

const std::vector<std::string>& emotion_vocabulary() {
    static const std::vector<std::string> vocab = {
        "admiration", "amusement",  "anger",       "annoyance",  "approval",
        "caring",     "confusion",  "curiosity",   "desire",     "disappointed",
        "disapproval", "disgust",   "embarrassed", "excitement", "fear",
        "gratitude",  "grief",      "joy",         "love",       "nervousness",
        "optimism",   "pride",      "realization", "relief",     "remorse",
        "sadness",    "surprise",
    };
    return vocab;
}

std::vector<std::pair<std::string, double>> emotion_distribution(
    const std::vector<std::string>& labels) {
    if (labels.empty()) throw DataError("emotion_distribution: empty label list");

    std::unordered_set<std::string> vocab(emotion_vocabulary().begin(), emotion_vocabulary().end());
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& label : labels) {
        if (vocab.count(label) == 0) throw DataError("unknown emotion label: " + label);
        counts[label] += 1;
    }

    std::vector<std::pair<std::string, double>> distribution;
    distribution.reserve(counts.size());
    for (const auto& [label, count] : counts) {
        distribution.emplace_back(label, 100.0 * static_cast<double>(count) /
                                             static_cast<double>(labels.size()));
    }
    std::sort(distribution.begin(), distribution.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return distribution;
}

std::string judge_prompt(const std::string& context, const std::string& response_a,
                         const std::string& response_b) {
    if (context.empty() || response_a.empty() || response_b.empty()) {
        throw DataError("judge_prompt: all inputs must be non-empty");
    }
    return "You are a response evaluator. Your task is to choose the overall better response out of "
           "the two given the following context. You should consider naturalness, specificity, "
           "naturalness, and consistency.\n\nContext:\n" +
           context + "\n\n1) " + response_a + "\n2) " + response_b +
           "\n\nQuestion: Which response is better in terms of overall quality?\nAnswer: Response ";
}

double two_proportion_z(std::size_t wins_a, std::size_t n_a, std::size_t wins_b, std::size_t n_b) {
    if (n_a == 0 || n_b == 0) throw DataError("two_proportion_z: empty sample");
    double pa = static_cast<double>(wins_a) / static_cast<double>(n_a);
    double pb = static_cast<double>(wins_b) / static_cast<double>(n_b);
    double pooled = static_cast<double>(wins_a + wins_b) / static_cast<double>(n_a + n_b);
    double se = std::sqrt(pooled * (1.0 - pooled) *
                          (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b)));
    if (se == 0.0) return 0.0;
    return (pa - pb) / se;
}

}  // namespace convogen
