#include "rd/filter.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rd/errors.hpp"
#include "rd/sequence.hpp"

namespace rd::filter {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::Irrelevant: return "irrelevant";
        case Category::RelevantNotUseful: return "relevant-not-useful";
        case Category::Useful: return "useful";
    }
    return "?";
}

Category category_from_string(std::string_view s) {
    for (auto c : {Category::Irrelevant, Category::RelevantNotUseful, Category::Useful})
        if (to_string(c) == s) return c;
    throw MalformedRecord(0, "unknown category '" + std::string(s) + "'");
}

std::string_view to_string(ScoreSpace s) { return s == ScoreSpace::Probability ? "probability" : "log"; }

ScoreSpace score_space_from_string(std::string_view s) {
    if (s == "probability") return ScoreSpace::Probability;
    if (s == "log") return ScoreSpace::Log;
    throw Error("unknown score space '" + std::string(s) + "' (expected probability or log)");
}

void FilterConfig::validate() const {
    if (!std::isfinite(boost_factor)) throw Error("boost factor must be finite");
    if (space == ScoreSpace::Probability && boost_factor <= 1.0)
        throw Error("boost factor must exceed 1 in probability space");
}

bool rationale_is_useful(double logp_with, double logp_without, const FilterConfig& cfg) {
    if (cfg.space == ScoreSpace::Probability) return std::exp(logp_with) >= cfg.boost_factor * std::exp(logp_without);
    return logp_with >= cfg.boost_factor * logp_without;
}

CategorizedExample categorize(const QAExample& example, const Rationale& rationale, tools::VerifierClient& verifier,
                              const FilterConfig& cfg, const seq::TokenCounter* counter) {
    static const seq::WhitespaceCounter fallback;
    const auto& gold = example.canonical_answer();
    CategorizedExample out{example.example_id, example.image, example.question, rationale,
                           Category::Irrelevant, std::string(kNoneAnswer), {}};
    const std::string text = tools::rationale_text(rationale, counter ? *counter : fallback, example.question);

    try {
        out.scores.greedy = verifier.greedy_answer(example.image, example.question, text);
        if (trim(out.scores.greedy) != trim(gold)) return out;

        out.effective_answer = gold;
        out.scores.logp_with = verifier.answer_logprob(example.image, example.question, gold, text);
        out.scores.logp_without = verifier.answer_logprob(example.image, example.question, gold, std::nullopt);
    } catch (const ToolFailure& e) {
        throw ToolFailure(e.tool(), "example " + example.example_id + ": " + e.cause(), e.attempts());
    }
    out.category = rationale_is_useful(*out.scores.logp_with, *out.scores.logp_without, cfg)
                       ? Category::Useful
                       : Category::RelevantNotUseful;
    return out;
}

BalanceResult balance(std::vector<CategorizedExample> categorized, std::uint64_t seed) {
    BalanceResult result;
    result.report.seed = seed;

    // Sort first so the sample depends only on the set of inputs, not their order.
    std::sort(categorized.begin(), categorized.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });

    std::vector<CategorizedExample> none;
    for (auto& c : categorized) {
        switch (c.category) {
            case Category::Irrelevant:
                none.push_back(std::move(c));
                continue;
            case Category::RelevantNotUseful: ++result.report.n_bad_r; break;
            case Category::Useful: ++result.report.n_good_r; break;
        }
        result.kept.push_back(std::move(c));
    }
    result.report.n_none = none.size();

    const std::size_t target =
        result.report.n_bad_r > result.report.n_good_r ? result.report.n_bad_r - result.report.n_good_r : 0;
    const std::size_t take = std::min(target, none.size());
    result.report.n_none_kept = take;

    // Partial Fisher-Yates over indices with a fixed engine.
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(none.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < take; ++i) result.kept.push_back(std::move(none[idx[i]]));

    std::sort(result.kept.begin(), result.kept.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
    return result;
}

Json to_json(const CategorizedExample& c) {
    Json j;
    j["example_id"] = c.example_id;
    j["image"] = rd::to_json(c.image);
    j["question"] = c.question;
    j["rationale"] = rd::to_json(c.rationale);
    j["category"] = to_string(c.category);
    j["effective_answer"] = c.effective_answer;
    Json s;
    s["greedy"] = c.scores.greedy;
    s["logp_with"] = c.scores.logp_with ? Json(*c.scores.logp_with) : Json(nullptr);
    s["logp_without"] = c.scores.logp_without ? Json(*c.scores.logp_without) : Json(nullptr);
    j["scores"] = std::move(s);
    return j;
}

CategorizedExample categorized_from_json(const Json& j) {
    try {
        CategorizedExample c;
        c.example_id = j.at("example_id").get<std::string>();
        c.image = image_from_json(j.at("image"));
        c.question = j.at("question").get<std::string>();
        c.rationale = rationale_from_json(j.at("rationale"));
        c.category = category_from_string(j.at("category").get<std::string>());
        c.effective_answer = j.at("effective_answer").get<std::string>();
        const auto& s = j.at("scores");
        c.scores.greedy = s.at("greedy").get<std::string>();
        if (!s.at("logp_with").is_null()) c.scores.logp_with = s.at("logp_with").get<double>();
        if (!s.at("logp_without").is_null()) c.scores.logp_without = s.at("logp_without").get<double>();
        if ((c.category == Category::Irrelevant) != is_none_answer(c.effective_answer))
            throw MalformedRecord(0, "category and effective answer disagree for " + c.example_id);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord(0, e.what());
    }
}

Json to_json(const BalanceReport& r) {
    Json j;
    j["n_none"] = r.n_none;
    j["n_bad_r"] = r.n_bad_r;
    j["n_good_r"] = r.n_good_r;
    j["n_none_kept"] = r.n_none_kept;
    j["seed"] = r.seed;
    return j;
}

}  // namespace rd::filter
