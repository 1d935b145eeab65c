#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cgqa/ingest.hpp"

using namespace cgqa;

namespace {

TableSource einstein_table() {
    TableSource t;
    t.header = {"name", "born in city", "Time"};
    t.records = {{"Albert Einstein", "Ulm", "14 March 1879"}};
    return t;
}

bool has_triple(const ConditionGraph& g, const std::string& n1, const std::string& n2,
                const Condition& c) {
    for (const auto& t : g.triples())
        if (t.node1 == n1 && t.node2 == n2 && t.condition == c) return true;
    return false;
}

} // namespace

TEST(TranslateTable, EinsteinExample) {
    ConditionGraph g;
    translate_table(einstein_table(), g);
    EXPECT_EQ(g.triple_count(), 6u); // 2 * (2-1) * 3
    EXPECT_TRUE(has_triple(g, "line_2", "name", {}));
    EXPECT_TRUE(has_triple(g, "name", "Albert Einstein", {"line_2"}));
    EXPECT_TRUE(has_triple(g, "Time", "14 March 1879", {"line_2"}));
}

TEST(TranslateTable, HeaderOnlyEmitsNothing) {
    TableSource t;
    t.header = {"a", "b"};
    ConditionGraph g;
    translate_table(t, g);
    EXPECT_EQ(g.triple_count(), 0u);
}

TEST(TranslateTable, CountFormulaFourByFive) {
    TableSource t;
    t.header = {"c1", "c2", "c3", "c4", "c5"};
    for (int r = 0; r < 4; ++r) {
        std::vector<std::string> row;
        for (int c = 0; c < 5; ++c)
            row.push_back("v" + std::to_string(r) + "_" + std::to_string(c));
        t.records.push_back(row);
    }
    ConditionGraph g;
    translate_table(t, g);
    // oracle: enumerate what the contract says must be emitted
    size_t expected = 0;
    for (int r = 0; r < 4; ++r) expected += 2 * 5;
    EXPECT_EQ(expected, 40u);
    EXPECT_EQ(g.triple_count(), expected);
    for (int r = 0; r < 4; ++r) {
        std::string line = "line_" + std::to_string(r + 2);
        for (int c = 0; c < 5; ++c) {
            std::string header = "c" + std::to_string(c + 1);
            EXPECT_TRUE(has_triple(g, line, header, {}));
            EXPECT_TRUE(
                has_triple(g, header, "v" + std::to_string(r) + "_" + std::to_string(c), {line}));
        }
    }
}

TEST(TranslateTable, RaggedRecordFails) {
    TableSource t;
    t.header = {"a", "b"};
    t.records = {{"only one"}};
    ConditionGraph g;
    try {
        translate_table(t, g);
        FAIL() << "expected RaggedTable";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ragged_table);
    }
}

TEST(TranslateTable, DuplicateHeadersSuffixed) {
    TableSource t;
    t.header = {"x", "x", "x"};
    t.records = {{"1", "2", "3"}};
    ConditionGraph g;
    translate_table(t, g);
    EXPECT_TRUE(has_triple(g, "x", "1", {"line_2"}));
    EXPECT_TRUE(has_triple(g, "x#2", "2", {"line_2"}));
    EXPECT_TRUE(has_triple(g, "x#3", "3", {"line_2"}));
}

TEST(TranslateTable, PrefixedMarkers) {
    ConditionGraph g;
    translate_table(einstein_table(), g, "t3");
    EXPECT_TRUE(has_triple(g, "name", "Albert Einstein", {"t3:line_2"}));
}

TEST(TranslateKg, EinsteinExample) {
    KgSource kg;
    kg.facts = {{"Albert Einstein", "born in city", "Ulm"}};
    ConditionGraph g;
    translate_kg(kg, g);
    EXPECT_EQ(g.triple_count(), 2u);
    EXPECT_TRUE(has_triple(g, "Albert Einstein", "born in city", {}));
    EXPECT_TRUE(has_triple(g, "born in city", "Ulm", {"Albert Einstein"}));
}

TEST(TranslateKg, EmptySourceLeavesGraphUnchanged) {
    ConditionGraph g;
    translate_kg(KgSource{}, g);
    EXPECT_EQ(g.triple_count(), 0u);
}

TEST(TranslateKg, SharedHeadRelationCollapses) {
    KgSource kg;
    kg.facts = {{"A", "r", "B"}, {"A", "r", "C"}, {"A", "r", "D"}};
    ConditionGraph g;
    translate_kg(kg, g);
    EXPECT_EQ(g.triple_count(), 4u); // one (A, r, []) plus three tails
}

TEST(TranslateTkg, IntervalExpansion) {
    TkgSource tkg;
    tkg.quintuples = {{"h", "r", "t", 2000, 2003}};
    ConditionGraph g;
    translate_tkg(tkg, g);
    EXPECT_EQ(g.triple_count(), 8u); // 2 base + start + end + 4 time steps
    EXPECT_TRUE(has_triple(g, "start time", "2000", {"h", "r", "t"}));
    EXPECT_TRUE(has_triple(g, "end time", "2003", {"h", "r", "t"}));
    for (int y = 2000; y <= 2003; ++y)
        EXPECT_TRUE(has_triple(g, "time", std::to_string(y), {"h", "r", "t"}));
}

TEST(TranslateTkg, DegenerateInterval) {
    TkgSource tkg;
    tkg.quintuples = {{"h", "r", "t", 2002, 2002}};
    ConditionGraph g;
    translate_tkg(tkg, g);
    EXPECT_EQ(g.triple_count(), 5u);
    g.freeze();
    EXPECT_TRUE(g.contains_node("start time"));
    EXPECT_TRUE(g.contains_node("end time"));
    EXPECT_TRUE(g.contains_node("time"));
}

TEST(TranslateTkg, InvalidIntervalFails) {
    TkgSource tkg;
    tkg.quintuples = {{"h", "r", "t", 2003, 2000}};
    ConditionGraph g;
    try {
        translate_tkg(tkg, g);
        FAIL() << "expected InvalidInterval";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_interval);
    }
}

TEST(TranslateTkg, PathologicalExpansionCapped) {
    TkgSource tkg;
    tkg.quintuples = {{"h", "r", "t", 0, 2'000'000}};
    ConditionGraph g;
    try {
        translate_tkg(tkg, g);
        FAIL() << "expected IntervalTooLarge";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::interval_too_large);
    }
}

TEST(Ingest, EveryCellValueBecomesANode) {
    ConditionGraph g;
    translate_table(einstein_table(), g);
    g.freeze();
    for (const char* v : {"Albert Einstein", "Ulm", "14 March 1879", "name", "line_2"})
        EXPECT_TRUE(g.contains_node(v)) << v;
}

TEST(Ingest, SourceOrderIrrelevant) {
    KgSource kg;
    kg.facts = {{"A", "likes", "B"}};
    TkgSource tkg;
    tkg.quintuples = {{"A", "works at", "C", 2001, 2002}};
    ConditionGraph ab, ba;
    translate_kg(kg, ab);
    translate_tkg(tkg, ab);
    translate_tkg(tkg, ba);
    translate_kg(kg, ba);
    ab.freeze();
    ba.freeze();
    EXPECT_TRUE(ab == ba);
}

TEST(LoadCsv, TwoLineFile) {
    std::stringstream ss("a,b\n1,2\n");
    auto t = load_csv(ss);
    EXPECT_EQ(t.row_count(), 2u);
    EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(t.records[0], (std::vector<std::string>{"1", "2"}));
}

TEST(LoadCsv, QuotingRules) {
    std::stringstream ss("name,notes\n\"Smith, John\",\"said \"\"hi\"\"\"\n");
    auto t = load_csv(ss);
    EXPECT_EQ(t.records[0][0], "Smith, John");
    EXPECT_EQ(t.records[0][1], "said \"hi\"");
}

TEST(LoadCsv, UnterminatedQuoteFails) {
    std::stringstream ss("a\n\"oops\n");
    EXPECT_THROW(load_csv(ss), Error);
}

TEST(LoadTriples, TabSeparated) {
    std::stringstream ss("A\tr\tB\n");
    auto kg = load_triples(ss);
    ASSERT_EQ(kg.facts.size(), 1u);
    EXPECT_EQ(kg.facts[0].head, "A");
    EXPECT_EQ(kg.facts[0].relation, "r");
    EXPECT_EQ(kg.facts[0].tail, "B");
}

TEST(LoadTriples, ReportsLineNumbers) {
    std::stringstream ss("A\tr\tB\nbroken line\n");
    try {
        load_triples(ss);
        FAIL() << "expected ParseError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::parse_error);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(LoadQuintuples, BadIntervalSurfacesAtTranslateTime) {
    std::stringstream ss("h\tr\tt\t2003\t2000\n");
    auto tkg = load_quintuples(ss); // loads fine
    ASSERT_EQ(tkg.quintuples.size(), 1u);
    ConditionGraph g;
    EXPECT_THROW(translate_tkg(tkg, g), Error);
}

TEST(LoadQuintuples, NonIntegerTimestampFails) {
    std::stringstream ss("h\tr\tt\tlate\t2000\n");
    EXPECT_THROW(load_quintuples(ss), Error);
}
