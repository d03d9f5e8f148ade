#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "convogen/analytics.hpp"
#include "convogen/errors.hpp"
#include "convogen/random.hpp"
#include "test_util.hpp"

using namespace convogen;

namespace {

// Independent MTLD reference: recomputes the running TTR from scratch at
// every step with a std::set, no shared code with the implementation.
std::optional<double> reference_mtld_directional(const std::vector<std::string>& tokens,
                                                 double threshold) {
    double factors = 0.0;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::set<std::string> distinct(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        double ttr = static_cast<double>(distinct.size()) / static_cast<double>(i - start + 1);
        if (ttr <= threshold) {
            factors += 1.0;
            start = i + 1;
        }
        ++i;
    }
    if (start < tokens.size()) {
        std::set<std::string> distinct(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                       tokens.end());
        double ttr = static_cast<double>(distinct.size()) /
                     static_cast<double>(tokens.size() - start);
        factors += (1.0 - ttr) / (1.0 - threshold);
    }
    if (factors == 0.0) return std::nullopt;
    return static_cast<double>(tokens.size()) / factors;
}

std::optional<double> reference_mtld(const std::vector<std::string>& tokens, double threshold) {
    auto fwd = reference_mtld_directional(tokens, threshold);
    std::vector<std::string> rev(tokens.rbegin(), tokens.rend());
    auto bwd = reference_mtld_directional(rev, threshold);
    if (!fwd && !bwd) return std::nullopt;
    if (fwd && bwd) return (*fwd + *bwd) / 2.0;
    return fwd ? fwd : bwd;
}

DialogueRecord make_record(const std::string& id, Relation relation,
                           const std::vector<std::string>& utterances) {
    DialogueRecord r;
    r.triple = Triple{id, "PersonX does something", relation, "tail"};
    r.name_map.x = "Ana";
    r.sentence_form = SentenceForm{"Ana does something.", id, r.name_map};
    r.narrative = Narrative{"Ana does something with care.", 1};
    r.speakers = SpeakerPair{"Ana", "Bo"};
    Conversation conv;
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        conv.turns.push_back(Turn{i % 2 == 0 ? "Ana" : "Bo", utterances[i]});
    }
    conv.speakers = {"Ana", "Bo"};
    r.conversation = conv;
    return r;
}

}  // namespace

TEST_CASE("mtld hand-walked golden: nine identical tokens") {
    std::vector<std::string> tokens(9, "a");
    auto value = mtld(tokens);
    REQUIRE(value.has_value());
    CHECK(*value == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("mtld is undefined for short all-distinct input") {
    std::vector<std::string> tokens;
    for (int i = 0; i < 10; ++i) tokens.push_back("tok" + std::to_string(i));
    CHECK_FALSE(mtld(tokens).has_value());
    CHECK_THROWS_AS(mtld({}), DataError);
}

TEST_CASE("mtld equals the independent reference walker on random inputs") {
    Rng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t length = 5 + rng.uniform_index(496);
        std::size_t alphabet = 1 + rng.uniform_index(50);
        std::vector<std::string> tokens;
        tokens.reserve(length);
        for (std::size_t i = 0; i < length; ++i) {
            tokens.push_back("w" + std::to_string(rng.uniform_index(alphabet)));
        }
        auto ours = mtld(tokens);
        auto reference = reference_mtld(tokens, kMtldTtrThreshold);
        REQUIRE(ours.has_value() == reference.has_value());
        if (ours) CHECK(std::abs(*ours - *reference) <= 1e-9);
    }
}

TEST_CASE("mtld is invariant under token relabeling") {
    Rng rng(77);
    std::vector<std::string> tokens;
    for (int i = 0; i < 120; ++i) tokens.push_back("t" + std::to_string(rng.uniform_index(9)));
    auto original = mtld(tokens);

    std::vector<std::string> relabeled;
    for (const auto& t : tokens) relabeled.push_back("XX_" + t + "_YY");
    auto mapped = mtld(relabeled);
    REQUIRE(original.has_value());
    REQUIRE(mapped.has_value());
    CHECK(*original == doctest::Approx(*mapped).epsilon(1e-12));
}

TEST_CASE("bidirectional mtld is symmetric under reversal") {
    Rng rng(78);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> tokens;
        std::size_t length = 20 + rng.uniform_index(100);
        for (std::size_t i = 0; i < length; ++i) {
            tokens.push_back("t" + std::to_string(rng.uniform_index(7)));
        }
        std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
        auto a = mtld(tokens);
        auto b = mtld(reversed);
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
    }
}

TEST_CASE("dataset_stats simple averages") {
    std::vector<DialogueRecord> records;
    records.push_back(make_record("r1", Relation::xNeed,
                                  {"one two", "three", "four five six", "seven"}));
    records.push_back(make_record("r2", Relation::xReact,
                                  {"a b c", "d", "e f", "g h i j", "k", "l m"}));
    DatasetStats stats = dataset_stats(records);
    CHECK(stats.n_dialogues == 2);
    CHECK(stats.avg_turns == doctest::Approx(5.0));

    std::vector<DialogueRecord> single;
    single.push_back(make_record("r3", Relation::xWant, {"one two three", "one two three four five"}));
    DatasetStats s2 = dataset_stats(single);
    CHECK(s2.avg_utterance_length == doctest::Approx(4.0));
}

TEST_CASE("dataset_stats matches an independent recomputation on a 50-record fixture") {
    Rng rng(91);
    std::vector<DialogueRecord> records;
    const auto& relations = all_relations();
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> utterances;
        std::size_t turns = 2 + rng.uniform_index(9);
        for (std::size_t t = 0; t < turns; ++t) {
            std::string u;
            std::size_t words = 1 + rng.uniform_index(12);
            for (std::size_t w = 0; w < words; ++w) {
                if (w) u += " ";
                u += "word" + std::to_string(rng.uniform_index(30));
            }
            utterances.push_back(u);
        }
        records.push_back(make_record("r" + std::to_string(i),
                                      relations[rng.uniform_index(relations.size())], utterances));
    }

    DatasetStats stats = dataset_stats(records);

    // independent straightforward loops
    std::size_t turns = 0, utts = 0, toks = 0;
    double mtld_sum = 0.0;
    std::size_t mtld_n = 0;
    std::map<std::string, std::size_t> rel_counts;
    for (const auto& r : records) {
        turns += r.conversation->turns.size();
        std::vector<std::string> all_tokens;
        for (const auto& turn : r.conversation->turns) {
            utts += 1;
            std::size_t count = 0;
            std::string word;
            for (char ch : turn.utterance + " ") {
                if (std::isalnum(static_cast<unsigned char>(ch))) {
                    word += static_cast<char>(std::tolower(ch));
                } else if (!word.empty()) {
                    ++count;
                    all_tokens.push_back(word);
                    word.clear();
                }
            }
            toks += count;
        }
        if (auto v = reference_mtld(all_tokens, kMtldTtrThreshold)) {
            mtld_sum += *v;
            mtld_n += 1;
        }
    }
    for (const auto& r : records) rel_counts[std::string(to_string(r.triple.relation))] += 1;

    CHECK(stats.avg_turns == doctest::Approx(double(turns) / 50.0).epsilon(1e-12));
    CHECK(stats.avg_utterance_length == doctest::Approx(double(toks) / double(utts)).epsilon(1e-12));
    CHECK(stats.mtld_mean == doctest::Approx(mtld_sum / double(mtld_n)).epsilon(1e-9));
    CHECK(stats.mtld_skipped == 50 - mtld_n);
    for (const auto& [rel, count] : rel_counts) {
        CHECK(stats.relation_ratios.at(rel) == doctest::Approx(double(count) / 50.0));
    }
}

TEST_CASE("stats aggregation is associative across shards") {
    std::vector<DialogueRecord> shard_a, shard_b;
    Rng rng(123);
    for (int i = 0; i < 12; ++i) {
        std::vector<std::string> utterances;
        for (std::size_t t = 0; t < 3 + rng.uniform_index(4); ++t) {
            utterances.push_back("alpha beta gamma delta " + std::to_string(rng.uniform_index(5)));
        }
        auto record = make_record("s" + std::to_string(i), Relation::xAttr, utterances);
        (i % 2 ? shard_a : shard_b).push_back(record);
    }

    StatsAccumulator merged;
    StatsAccumulator a, b;
    for (const auto& r : shard_a) a.add(r);
    for (const auto& r : shard_b) b.add(r);
    merged.merge(a);
    merged.merge(b);

    StatsAccumulator whole;
    for (const auto& r : shard_b) whole.add(r);
    for (const auto& r : shard_a) whole.add(r);

    DatasetStats lhs = merged.finalize();
    DatasetStats rhs = whole.finalize();
    CHECK(lhs.n_dialogues == rhs.n_dialogues);
    CHECK(lhs.avg_turns == doctest::Approx(rhs.avg_turns).epsilon(1e-12));
    CHECK(lhs.avg_utterance_length == doctest::Approx(rhs.avg_utterance_length).epsilon(1e-12));
    CHECK(lhs.mtld_mean == doctest::Approx(rhs.mtld_mean).epsilon(1e-12));
}

TEST_CASE("emotion distribution percentages") {
    std::vector<std::string> labels = {"curiosity", "curiosity", "curiosity", "curiosity",
                                       "joy", "joy", "anger", "fear", "love", "pride"};
    auto dist = emotion_distribution(labels);
    REQUIRE_FALSE(dist.empty());
    CHECK(dist[0].first == "curiosity");
    CHECK(dist[0].second == doctest::Approx(40.0));

    double total = 0.0;
    for (const auto& [_, pct] : dist) total += pct;
    CHECK(total == doctest::Approx(100.0).epsilon(1e-9));

    CHECK_THROWS_AS(emotion_distribution({}), DataError);
    CHECK_THROWS_AS(emotion_distribution({"not_an_emotion"}), DataError);
}

TEST_CASE("judge prompt golden and slot symmetry") {
    std::string prompt = judge_prompt("CTX", "AAA", "BBB");
    CHECK(prompt ==
          "You are a response evaluator. Your task is to choose the overall better response out of "
          "the two given the following context. You should consider naturalness, specificity, "
          "naturalness, and consistency.\n\nContext:\nCTX\n\n1) AAA\n2) BBB\n\nQuestion: Which "
          "response is better in terms of overall quality?\nAnswer: Response ");
    CHECK(prompt.find("Which response is better in terms of overall quality?") != std::string::npos);

    std::string swapped = judge_prompt("CTX", "BBB", "AAA");
    CHECK(swapped.find("1) BBB") != std::string::npos);
    CHECK(swapped.find("2) AAA") != std::string::npos);
    // identical except the numbered slots
    CHECK(prompt.substr(0, prompt.find("1)")) == swapped.substr(0, swapped.find("1)")));

    CHECK(judge_prompt("CTX", "AAA", "BBB") == prompt);  // byte-stable
    CHECK_THROWS_AS(judge_prompt("", "a", "b"), DataError);
}

TEST_CASE("two-proportion z-score basics") {
    CHECK(two_proportion_z(50, 100, 50, 100) == doctest::Approx(0.0));
    CHECK(two_proportion_z(70, 100, 30, 100) > 3.0);
    CHECK_THROWS_AS(two_proportion_z(1, 0, 1, 1), DataError);
}
