#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rd/data_model.hpp"

namespace rd::inference {

struct VoteResult {
    std::string answer;
    double aggregate_prob = 0.0;
    /// Summed probability per distinct answer, None included.
    std::map<std::string, double> tally;
};

struct VoteOptions {
    /// Run the calculator on each hypothesis before tallying.
    bool use_calculator = false;
};

/// Sums hypothesis probabilities per distinct (trimmed) answer and returns the
/// best answer that is not None; ties go to the answer seen first in beam order.
/// Unparseable hypotheses are skipped with a warning. Throws AllNone.
VoteResult vote(const std::vector<ScoredHypothesis>& hypotheses, const VoteOptions& options = {});

/// Executes the program after "<program>" in the decoded rationale and returns
/// its rendered result; returns `fallback_answer` for Find, invalid programs,
/// execution errors, or when no program is present.
std::string apply_calculator(std::string_view decoded, std::string_view fallback_answer);

}  // namespace rd::inference
