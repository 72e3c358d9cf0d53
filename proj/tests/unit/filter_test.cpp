#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "rd/errors.hpp"
#include "rd/filter.hpp"

using namespace rd;
using namespace rd::filter;
using rd::testing::make_example;

namespace {

class ScriptedVerifier final : public tools::VerifierClient {
public:
    std::string greedy = "Instagram";
    double lp_with = std::log(0.5);
    double lp_without = std::log(0.2);
    int score_calls = 0;
    std::optional<std::string> seen_rationale;

    std::string greedy_answer(const ImageRef&, std::string_view, const std::optional<std::string>& r) override {
        seen_rationale = r;
        return greedy;
    }
    double answer_logprob(const ImageRef&, std::string_view, std::string_view,
                          const std::optional<std::string>& r) override {
        ++score_calls;
        return r ? lp_with : lp_without;
    }
};

class FailingVerifier final : public tools::VerifierClient {
public:
    std::string greedy_answer(const ImageRef&, std::string_view, const std::optional<std::string>&) override {
        throw ToolFailure("verifier", "HTTP 500", 4);
    }
    double answer_logprob(const ImageRef&, std::string_view, std::string_view,
                          const std::optional<std::string>&) override {
        return 0;
    }
};

CategorizedExample item(const std::string& id, Category c) {
    CategorizedExample e;
    e.example_id = id;
    e.image = make_example(id).image;
    e.question = "Q";
    e.rationale = Rationale::text("r");
    e.category = c;
    e.effective_answer = c == Category::Irrelevant ? "None" : "A";
    return e;
}

std::vector<CategorizedExample> profile(std::size_t none, std::size_t bad, std::size_t good) {
    std::vector<CategorizedExample> out;
    for (std::size_t i = 0; i < none; ++i) out.push_back(item("n" + std::to_string(i), Category::Irrelevant));
    for (std::size_t i = 0; i < bad; ++i) out.push_back(item("b" + std::to_string(i), Category::RelevantNotUseful));
    for (std::size_t i = 0; i < good; ++i) out.push_back(item("g" + std::to_string(i), Category::Useful));
    return out;
}

}  // namespace

TEST(Categorize, WrongGreedyAnswerIsIrrelevant) {
    ScriptedVerifier v;
    v.greedy = "Paris";
    const auto ex = make_example("e", 400, 400, "Which platform?", "Instagram");
    const auto c = categorize(ex, Rationale::text("no gold here"), v, {});
    EXPECT_EQ(c.category, Category::Irrelevant);
    EXPECT_EQ(c.effective_answer, "None");
    EXPECT_EQ(v.score_calls, 0);
    EXPECT_FALSE(c.scores.logp_with);
    EXPECT_EQ(*v.seen_rationale, "no gold here");
}

TEST(Categorize, UsefulnessInequality) {
    const auto ex = make_example("e", 400, 400, "Which platform?", "Instagram");
    ScriptedVerifier v;
    v.lp_with = std::log(0.5);
    v.lp_without = std::log(0.2);
    EXPECT_EQ(categorize(ex, Rationale::text("r"), v, {}).category, Category::Useful);
    v.lp_with = std::log(0.3);
    const auto c = categorize(ex, Rationale::text("r"), v, {});
    EXPECT_EQ(c.category, Category::RelevantNotUseful);
    EXPECT_EQ(c.effective_answer, "Instagram");
}

TEST(Categorize, GreedyComparisonTrimsButKeepsCase) {
    const auto ex = make_example("e", 400, 400, "Q", "Instagram");
    ScriptedVerifier v;
    v.greedy = "  Instagram ";
    EXPECT_NE(categorize(ex, Rationale::text("r"), v, {}).category, Category::Irrelevant);
    v.greedy = "instagram";
    EXPECT_EQ(categorize(ex, Rationale::text("r"), v, {}).category, Category::Irrelevant);
}

TEST(Categorize, LogSpaceUsesTheProseInequality) {
    FilterConfig log_cfg{2.0, ScoreSpace::Log};
    EXPECT_TRUE(rationale_is_useful(std::log(0.3), std::log(0.2), log_cfg));   // -1.20 >= -3.22
    EXPECT_FALSE(rationale_is_useful(std::log(0.3), std::log(0.2), {}));       // 0.3 < 0.4
    // In log space a larger factor makes the test easier, the opposite of probability space.
    EXPECT_FALSE(rationale_is_useful(std::log(0.1), std::log(0.5), {1.5, ScoreSpace::Log}));
    EXPECT_TRUE(rationale_is_useful(std::log(0.1), std::log(0.5), {4.0, ScoreSpace::Log}));
}

TEST(Categorize, ToolFailureNamesTheExample) {
    FailingVerifier v;
    try {
        categorize(make_example("crop-7"), Rationale::text("r"), v, {});
        FAIL();
    } catch (const ToolFailure& e) {
        EXPECT_NE(e.cause().find("crop-7"), std::string::npos);
        EXPECT_EQ(e.attempts(), 4);
    }
}

TEST(Categorize, ProgramRationaleIsSerializedForTheVerifier) {
    ScriptedVerifier v;
    auto ex = make_example("c", 600, 800, "Ratio?", "5");
    v.greedy = "5";
    categorize(ex, Rationale::table_program({{"a", "25"}}, "Div(25, 5)"), v, {});
    EXPECT_EQ(*v.seen_rationale, "a | 25 <program> Div(25, 5)");
}

TEST(FilterConfig, Validation) {
    EXPECT_NO_THROW(FilterConfig{}.validate());
    EXPECT_THROW((FilterConfig{1.0, ScoreSpace::Probability}.validate()), Error);
    EXPECT_THROW((FilterConfig{NAN, ScoreSpace::Log}.validate()), Error);
}

TEST(Balance, FormulaCases) {
    auto r = balance(profile(500, 100, 40), 1);
    EXPECT_EQ(r.report.n_none_kept, 60u);
    EXPECT_EQ(r.kept.size(), 200u);
    EXPECT_EQ(balance(profile(500, 30, 50), 1).report.n_none_kept, 0u);
    auto short_supply = balance(profile(25, 100, 40), 1);
    EXPECT_EQ(short_supply.report.n_none_kept, 25u);
    EXPECT_EQ(short_supply.report.n_none, 25u);
}

TEST(Balance, KeepsEveryRationaleExampleAndSortsById) {
    auto r = balance(profile(10, 7, 3), 9);
    std::size_t bad = 0, good = 0, none = 0;
    for (const auto& c : r.kept) {
        bad += c.category == Category::RelevantNotUseful;
        good += c.category == Category::Useful;
        none += c.category == Category::Irrelevant;
    }
    EXPECT_EQ(bad, 7u);
    EXPECT_EQ(good, 3u);
    EXPECT_EQ(none, 4u);
    EXPECT_TRUE(std::is_sorted(r.kept.begin(), r.kept.end(),
                               [](const auto& a, const auto& b) { return a.example_id < b.example_id; }));
}

TEST(Balance, SeededAndOrderIndependent) {
    auto input = profile(50, 30, 10);
    auto shuffled = input;
    std::mt19937 rng(4);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto ids = [](const BalanceResult& r) {
        std::vector<std::string> out;
        for (const auto& c : r.kept) out.push_back(c.example_id);
        return out;
    };
    EXPECT_EQ(ids(balance(input, 5)), ids(balance(shuffled, 5)));
    EXPECT_NE(ids(balance(input, 5)), ids(balance(input, 6)));
}

TEST(CategorizedExample, JsonRoundTrip) {
    auto c = item("x#c1", Category::Useful);
    c.scores = {"A", -0.5, -1.5};
    const auto back = categorized_from_json(to_json(c));
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    auto bad = to_json(c);
    bad["effective_answer"] = "None";
    EXPECT_THROW(categorized_from_json(bad), MalformedRecord);
}
