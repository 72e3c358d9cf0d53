#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rd/data_model.hpp"
#include "rd/tools.hpp"

namespace rd::seq {
class TokenCounter;
}

namespace rd::filter {

enum class Category { Irrelevant, RelevantNotUseful, Useful };

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);

enum class ScoreSpace {
    /// p_with >= boost * p_without (the algorithm box form, default)
    Probability,
    /// log p_with >= boost * log p_without (the prose form)
    Log,
};

std::string_view to_string(ScoreSpace s);
ScoreSpace score_space_from_string(std::string_view s);

struct FilterConfig {
    double boost_factor = 2.0;
    ScoreSpace space = ScoreSpace::Probability;

    /// Throws rd::Error unless boost_factor > 1 in probability space (and finite).
    void validate() const;
};

/// Verifier outputs behind a decision. Log-probabilities are only requested
/// once the relevance check passes.
struct Scores {
    std::string greedy;
    std::optional<double> logp_with;
    std::optional<double> logp_without;
};

struct CategorizedExample {
    std::string example_id;
    ImageRef image;
    std::string question;
    Rationale rationale;
    Category category = Category::Irrelevant;
    /// Canonical gold answer, or "None" for irrelevant crops.
    std::string effective_answer;
    Scores scores;
};

struct BalanceReport {
    std::size_t n_none = 0;
    std::size_t n_bad_r = 0;
    std::size_t n_good_r = 0;
    std::size_t n_none_kept = 0;
    std::uint64_t seed = 0;
};

struct BalanceResult {
    std::vector<CategorizedExample> kept;  // sorted by example_id
    BalanceReport report;
};

/// The usefulness inequality in the configured space.
bool rationale_is_useful(double logp_with, double logp_without, const FilterConfig& cfg);

/// Relevance check (greedy answer with the rationale equals the canonical gold
/// after trimming, case-sensitive), then the usefulness check.
/// Tool failures are re-raised with the example id in the cause.
CategorizedExample categorize(const QAExample& example, const Rationale& rationale, tools::VerifierClient& verifier,
                              const FilterConfig& cfg, const seq::TokenCounter* counter = nullptr);

/// Keeps every useful and relevant-not-useful example and a seeded uniform
/// subsample of min(n_none, max(n_bad_r - n_good_r, 0)) irrelevant ones.
BalanceResult balance(std::vector<CategorizedExample> categorized, std::uint64_t seed);

Json to_json(const CategorizedExample& c);
CategorizedExample categorized_from_json(const Json& j);
Json to_json(const BalanceReport& r);

}  // namespace rd::filter
