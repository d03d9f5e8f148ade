#include <doctest.h>

#include "convogen/errors.hpp"
#include "convogen/knowledge.hpp"
#include "test_util.hpp"

using namespace convogen;
using convogen::testing::TempDir;
using convogen::testing::write_file;

TEST_CASE("load_triples tsv keeps valid rows and reports the rest") {
    TempDir dir;
    auto path = write_file(dir.file("triples.tsv"),
        "PersonX moves a step closer to the goal\txNeed\tto take the first step\n"
        "PersonX sleeps early\tisBefore\tPersonX wakes up\n"
        "PersonX eats lunch\tnotARelation\tfull\n"
        "no tabs on this line\n"
        "someone does a thing\txAttr\tkind\n"
        "PersonX hugs PersonY\txReact\thappy\n");

    TripleLoadResult result = load_triples(path, TripleFormat::tsv);
    REQUIRE(result.triples.size() == 2);
    CHECK(result.triples[0].head == "PersonX moves a step closer to the goal");
    CHECK(result.triples[0].relation == Relation::xNeed);
    CHECK(result.triples[0].tail == "to take the first step");
    // order-preserving: second valid row follows the first
    CHECK(result.triples[1].relation == Relation::xReact);
    CHECK(result.triples[1].mentions_person_y());

    REQUIRE(result.diagnostics.size() == 4);
    CHECK(result.diagnostics[0].code == "RelationOutOfScope");
    CHECK(result.diagnostics[0].line == 2);
    CHECK(result.diagnostics[1].code == "UnknownRelation");
    CHECK(result.diagnostics[2].code == "MissingField");
    CHECK(result.diagnostics[3].code == "MissingPersonX");
}

TEST_CASE("load_triples jsonl") {
    TempDir dir;
    auto path = write_file(dir.file("triples.jsonl"),
        R"({"id":"a1","head":"PersonX runs a marathon","relation":"xNeed","tail":"to train hard"})" "\n"
        R"({"head":"PersonX smiles","relation":"xReact","tail":"happy"})" "\n"
        R"({"head":"PersonX helps","relation":"xWant"})" "\n"
        "{not json\n");

    TripleLoadResult result = load_triples(path, TripleFormat::jsonl);
    REQUIRE(result.triples.size() == 2);
    CHECK(result.triples[0].id == "a1");
    CHECK(result.triples[1].id == "t000002");  // synthesized from line number
    REQUIRE(result.diagnostics.size() == 2);
    CHECK(result.diagnostics[0].code == "MissingField");
    CHECK(result.diagnostics[1].code == "MalformedRecord");
}

TEST_CASE("load_triples empty file gives empty list, zero diagnostics") {
    TempDir dir;
    auto path = write_file(dir.file("empty.tsv"), "");
    TripleLoadResult result = load_triples(path, TripleFormat::tsv);
    CHECK(result.triples.empty());
    CHECK(result.diagnostics.empty());
}

TEST_CASE("load_triples missing file throws") {
    CHECK_THROWS_AS(load_triples("/nonexistent/triples.tsv", TripleFormat::tsv), DataError);
}

TEST_CASE("load_names dedups case-sensitively before truncation") {
    TempDir dir;
    auto path = write_file(dir.file("names.txt"), "Alice\nBob\nAlice\nCara\n");

    NamePool two = load_names(path, 2);
    REQUIRE(two.names.size() == 2);
    CHECK(two.names[0] == "Alice");
    CHECK(two.names[1] == "Bob");
    CHECK(two.size_class == NamePool::SizeClass::Top1K);

    NamePool three = load_names(path, 3);
    CHECK(three.names == std::vector<std::string>{"Alice", "Bob", "Cara"});

    // only 3 unique names available
    CHECK_THROWS_AS(load_names(path, 4), DataError);
}

TEST_CASE("load_names accepts csv rows and rejects empty files") {
    TempDir dir;
    auto csv = write_file(dir.file("names.csv"), "Mary,F,7065\nJohn,M,9655\n");
    NamePool pool = load_names(csv, 2);
    CHECK(pool.names == std::vector<std::string>{"Mary", "John"});

    auto empty = write_file(dir.file("empty.txt"), "\n\n");
    CHECK_THROWS_AS(load_names(empty, 1), DataError);
}

TEST_CASE("assign_names draws distinct names deterministically") {
    NamePool pool;
    pool.names = {"Alice", "Bob", "Cara", "Dean", "Elle"};

    Triple x_only{"t1", "PersonX goes home", Relation::xEffect, "tired"};
    Triple with_y{"t2", "PersonX thanks PersonY", Relation::xIntent, "to be polite"};

    Rng rng1(99);
    NameMap m1 = assign_names(x_only, pool, rng1);
    CHECK_FALSE(m1.y.has_value());
    CHECK(pool.contains(m1.x));

    Rng rng2(99);
    NameMap m2 = assign_names(x_only, pool, rng2);
    CHECK(m1 == m2);  // same seed, same map

    Rng rng3(7);
    NameMap m3 = assign_names(with_y, pool, rng3);
    REQUIRE(m3.y.has_value());
    CHECK(m3.x != *m3.y);

    NamePool single;
    single.names = {"Alice"};
    Rng rng4(1);
    CHECK_THROWS_AS(assign_names(with_y, single, rng4), DataError);
}

TEST_CASE("assign_names never produces colliding names across many seeds") {
    NamePool pool;
    pool.names = {"Alice", "Bob"};
    Triple with_y{"t", "PersonX waves at PersonY", Relation::xAttr, "friendly"};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        NameMap m = assign_names(with_y, pool, rng);
        REQUIRE(m.y.has_value());
        CHECK(m.x != *m.y);
    }
}

TEST_CASE("social-relation filtering is idempotent") {
    std::vector<std::string> relations = {"xNeed", "isBefore", "xReact", "oEffect",
                                          "gibberish", "xAttr", "HinderedBy", "xWant"};
    auto filter = [](const std::vector<std::string>& in) {
        std::vector<std::string> out;
        for (const auto& r : in) {
            if (is_social_relation(r)) out.push_back(r);
        }
        return out;
    };
    auto once = filter(relations);
    auto twice = filter(once);
    CHECK(once == twice);
    CHECK(once == std::vector<std::string>{"xNeed", "xReact", "xAttr", "xWant"});
}

TEST_CASE("out-of-scope relations are distinguished from unknown strings") {
    CHECK(is_known_out_of_scope_relation("isBefore"));
    CHECK(is_known_out_of_scope_relation("oWant"));
    CHECK_FALSE(is_known_out_of_scope_relation("xNeed"));
    CHECK_FALSE(is_known_out_of_scope_relation("madeUp"));
}
