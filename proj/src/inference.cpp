#include "rd/inference.hpp"

#include <spdlog/spdlog.h>

#include "rd/errors.hpp"
#include "rd/program.hpp"
#include "rd/sequence.hpp"

namespace rd::inference {

VoteResult vote(const std::vector<ScoredHypothesis>& hypotheses, const VoteOptions& options) {
    VoteResult result;
    std::vector<std::string> order;  // first occurrence in beam order
    std::size_t parsed = 0;
    for (const auto& h : hypotheses) {
        if (!(h.prob > 0.0)) throw Error("hypothesis probability must be positive");
        std::string answer;
        try {
            answer = seq::parse_target(h.decoded).answer;
        } catch (const Error& e) {
            spdlog::warn("skipping unparseable hypothesis ({}): {}", e.what(), h.decoded);
            continue;
        }
        if (options.use_calculator) answer = apply_calculator(h.decoded, answer);
        ++parsed;
        auto [it, inserted] = result.tally.try_emplace(answer, 0.0);
        if (inserted) order.push_back(answer);
        it->second += h.prob;
    }
    if (parsed == 0) throw Error("no parseable hypotheses");

    bool found = false;
    for (const auto& answer : order) {
        if (is_none_answer(answer)) continue;
        const double p = result.tally.at(answer);
        if (!found || p > result.aggregate_prob) {
            result.answer = answer;
            result.aggregate_prob = p;
            found = true;
        }
    }
    if (!found) throw AllNone();
    return result;
}

std::string apply_calculator(std::string_view decoded, std::string_view fallback_answer) {
    const auto at = decoded.rfind(seq::kAnswerMarker);
    const auto rationale = decoded.substr(0, at == std::string_view::npos ? decoded.size() : at);
    const auto source = seq::extract_program(rationale);
    if (!source || source->empty()) return std::string(fallback_answer);
    try {
        auto rendered = dsl::render(dsl::execute(dsl::parse(*source)));
        if (rendered) return *rendered;
    } catch (const Error&) {
        // invalid program or failed execution: keep the model's answer
    }
    return std::string(fallback_answer);
}

}  // namespace rd::inference
