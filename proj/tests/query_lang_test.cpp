#include <gtest/gtest.h>

#include <random>

#include "cgqa/query_lang.hpp"

using namespace cgqa;

TEST(Parse, TwoStepProgramWithReference) {
    auto p = parse_program(
        "Step1: Find the pole positions for round 20\n"
        "Query1: \"get_information(relation='Pole Position', tail_entity='round 20')\"\n"
        "Step2: Calculate the count of output_of_query1\n"
        "Query2: \"count(set='output_of_query1')\"\n");
    ASSERT_EQ(p.steps.size(), 2u);
    EXPECT_EQ(p.steps[0].call.name, "get_information");
    ASSERT_EQ(p.steps[0].call.args.size(), 2u);
    EXPECT_EQ(p.steps[0].call.args[0].name, "relation");
    EXPECT_EQ(p.steps[0].call.args[0].literal(), "Pole Position");
    EXPECT_EQ(p.steps[1].call.name, "count");
    ASSERT_TRUE(p.steps[1].call.args[0].is_ref());
    EXPECT_EQ(p.steps[1].call.args[0].ref().index, 1);
    EXPECT_EQ(p.steps[0].step_text, "Find the pole positions for round 20");
}

TEST(Parse, OperatorBetweenNameAndValue) {
    auto p = parse_program("Query1: \"get_information(relation='Goal', tail_entity>'15')\"");
    const auto& arg = p.steps[0].call.args[1];
    EXPECT_EQ(arg.name, "tail_entity");
    EXPECT_EQ(arg.op, ComparisonOp::greater);
    EXPECT_EQ(arg.literal(), "15");
}

TEST(Parse, GreaterEqualAndUnquotedRefWithOperator) {
    auto p = parse_program(
        "Query1: \"get_information(relation='Rank', tail_entity>='7')\"\n"
        "Query2: \"keep(set='output_of_query1', value<output_of_query1)\"");
    EXPECT_EQ(p.steps[0].call.args[1].op, ComparisonOp::greater_eq);
    const auto& keep_value = p.steps[1].call.args[1];
    EXPECT_EQ(keep_value.op, ComparisonOp::less);
    ASSERT_TRUE(keep_value.is_ref());
    EXPECT_EQ(keep_value.ref().index, 1);
}

TEST(Parse, NoQueryLines) {
    try {
        parse_program("Step1: thinking aloud with no queries\n");
        FAIL() << "expected NoQueryFound";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::no_query_found);
    }
}

TEST(Parse, UnknownFunctionKeptVerbatim) {
    auto p = parse_program("Query1: \"compare(\"A's score\", \"B's score\")\"");
    EXPECT_FALSE(p.steps[0].call.known);
    EXPECT_EQ(p.steps[0].call.name, "compare");
    EXPECT_EQ(p.steps[0].call.raw, "compare(\"A's score\", \"B's score\")");
}

TEST(Parse, ApostropheInsideQuotedValue) {
    auto p = parse_program(
        "Query1: \"get_information(relation='written_by', head_entity='Taxidermia')\"\n"
        "Query2: \"set_difference(set1='output_of_query1', set2='The Don't Amityville Curse')\"");
    EXPECT_EQ(p.steps[1].call.args[1].literal(), "The Don't Amityville Curse");
}

TEST(Parse, RefSpellings) {
    auto p = parse_program(
        "Query1: \"get_information(key='time')\"\n"
        "Query2: \"max(set='Output_of_query1')\"\n"
        "Query3: \"min(set='output_of_query_2')\"");
    EXPECT_EQ(p.steps[1].call.args[0].ref().index, 1);
    EXPECT_EQ(p.steps[2].call.args[0].ref().index, 2);
}

TEST(Parse, ForwardReferenceRejected) {
    try {
        parse_program("Query1: \"count(set='output_of_query1')\"");
        FAIL() << "expected ForwardReference";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::forward_reference);
    }
}

TEST(Parse, LabelsMustRunFromOne) {
    EXPECT_THROW(parse_program("Query2: \"count(set='x')\""), Error);
    EXPECT_THROW(parse_program("Query1: \"count(set='x')\"\nQuery3: \"count(set='y')\""), Error);
}

TEST(Parse, OperatorOnlyOnTailEntityAndValue) {
    try {
        parse_program("Query1: \"get_information(relation>'Goal')\"");
        FAIL() << "expected MalformedCall";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::malformed_call);
    }
}

TEST(Parse, UnknownArgumentNameRejected) {
    EXPECT_THROW(parse_program("Query1: \"count(bucket='x')\""), Error);
}

TEST(Parse, ProseAndHeadersIgnored) {
    auto p = parse_program(
        "## Target type: {number}\n"
        "## Query:\n"
        "Some explanation the model wrote.\n"
        "Query1: \"get_information(key='time')\"");
    EXPECT_EQ(p.steps.size(), 1u);
}

TEST(Parse, RefZeroRejected) {
    EXPECT_THROW(parse_program("Query1: \"count(set='output_of_query0')\""), Error);
}

TEST(Parse, TrailingQuoteTypoTolerated) {
    auto p = parse_program("Query1: get_information(relation='in_language', head_entity='X')\"");
    EXPECT_EQ(p.steps[0].call.name, "get_information");
}

TEST(Render, CanonicalForms) {
    auto p = parse_program(
        "Query1: \"get_information(relation='Goal', tail_entity>'15')\"\n"
        "Query2: \"count(set='output_of_query1')\"");
    EXPECT_EQ(render_program(p),
              "Query1: \"get_information(relation='Goal', tail_entity>'15')\"\n"
              "Query2: \"count(set='output_of_query1')\"");
}

TEST(Render, UnknownStepVerbatim) {
    auto p = parse_program("Query1: \"llm_magic(arg1, arg2)\"");
    EXPECT_EQ(render_program(p), "Query1: \"llm_magic(arg1, arg2)\"");
}

TEST(Render, RationaleTextIsNotStructure) {
    auto with_steps = parse_program(
        "Step1: Find things\nQuery1: \"get_information(key='time')\"");
    auto without = parse_program("Query1: \"get_information(key='time')\"");
    EXPECT_TRUE(with_steps == without);
    EXPECT_EQ(render_program(with_steps), render_program(without));
}

// --- round-trip property ------------------------------------------------------

namespace {

LlmQueryProgram random_program(std::mt19937& rng) {
    std::uniform_int_distribution<int> len(1, 5);
    std::uniform_int_distribution<int> fn(0, 5);
    std::uniform_int_distribution<int> word(0, 25);
    auto literal = [&] {
        std::string s;
        int n = 1 + word(rng) % 3;
        for (int i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += std::string(1, char('a' + word(rng)));
            s += std::to_string(word(rng));
        }
        return s;
    };
    std::string text;
    int steps = len(rng);
    for (int i = 1; i <= steps; ++i) {
        std::uniform_int_distribution<int> ref_pick(1, std::max(1, i - 1));
        auto ref = [&]() -> std::string {
            return "output_of_query" + std::to_string(ref_pick(rng));
        };
        std::string call;
        switch (fn(rng)) {
            case 0:
                call = "get_information(relation='" + literal() + "', tail_entity>'" +
                       std::to_string(word(rng)) + "')";
                break;
            case 1:
                call = "get_information(head_entity='" + literal() + "', key='" + literal() + "')";
                break;
            case 2:
                call = i > 1 ? "count(set='" + ref() + "')"
                             : "get_information(key='" + literal() + "')";
                break;
            case 3:
                call = i > 1 ? "set_intersection(set1='" + ref() + "', set2='" + ref() + "')"
                             : "get_information(relation='" + literal() + "')";
                break;
            case 4:
                call = i > 1 ? "keep(set='" + ref() + "', value<'" + std::to_string(word(rng)) + "')"
                             : "get_information(head_entity='" + literal() + "')";
                break;
            default:
                call = "mystery_fn('" + literal() + "')";
                break;
        }
        text += "Query" + std::to_string(i) + ": \"" + call + "\"\n";
    }
    return parse_program(text);
}

} // namespace

TEST(RoundTrip, ParseRenderParse) {
    std::mt19937 rng(99);
    for (int i = 0; i < 300; ++i) {
        auto p = random_program(rng);
        auto again = parse_program(render_program(p));
        EXPECT_TRUE(p == again) << render_program(p);
        EXPECT_EQ(render_program(p), render_program(again));
    }
}

TEST(RoundTrip, EveryRefSurvives) {
    std::mt19937 rng(123);
    for (int i = 0; i < 100; ++i) {
        auto p = random_program(rng);
        size_t refs = 0;
        for (const auto& s : p.steps)
            for (const auto& a : s.call.args)
                if (a.is_ref()) ++refs;
        std::string rendered = render_program(p);
        size_t occurrences = 0;
        size_t pos = 0;
        while ((pos = rendered.find("output_of_query", pos)) != std::string::npos) {
            ++occurrences;
            pos += 15;
        }
        EXPECT_EQ(refs, occurrences);
    }
}
