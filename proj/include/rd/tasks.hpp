#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rd/data_model.hpp"
#include "rd/filter.hpp"
#include "rd/tools.hpp"

namespace rd::seq {
class TokenCounter;
}

namespace rd::tasks {

/// Whole-image tool rationale. Flagged entries (programs that never validated)
/// are kept on disk but excluded from rationale-prediction tasks.
struct RationaleEntry {
    Rationale rationale;
    bool flagged = false;
};

using RationaleMap = std::map<std::string, RationaleEntry>;

struct FoldPlan {
    std::size_t folds_per_subset = 3;
    std::uint64_t seed = 0;
    std::map<std::string, std::size_t> assignment;  // example_id -> global fold index
    std::vector<std::string> fold_subset;           // global fold index -> subset name

    std::size_t fold_count() const { return fold_subset.size(); }
    std::vector<std::string> members(std::size_t fold) const;
};

/// Independent seeded partition of each subset into `folds_per_subset` folds
/// whose sizes differ by at most one. Subsets are numbered in name order.
/// Throws SubsetTooSmall.
FoldPlan plan_folds(const std::map<std::string, std::vector<std::string>>& ids_by_subset,
                    std::size_t folds_per_subset = 3, std::uint64_t seed = 0);

/// Student model used to generate rationales for one held-out fold.
struct FoldStudent {
    std::set<std::size_t> trained_on;
    std::shared_ptr<tools::StudentRationaleClient> client;
};

/// Keyed by the fold the student generates for.
using StudentPool = std::map<std::size_t, FoldStudent>;

/// One student per fold, trained on the other folds of the same subset.
StudentPool make_fold_students(const FoldPlan& plan,
                               const std::function<std::shared_ptr<tools::StudentRationaleClient>(std::size_t)>& make);

/// Checks that the plan is a partition consistent with the examples' subsets. Throws FoldLeak.
void check_fold_plan(const FoldPlan& plan, const std::vector<QAExample>& examples);

// Builders. Outputs are ordered by example id; every counter argument may be
// null to use the whitespace counter.

/// q, tool rationale, answer on the whole image. Throws MissingRationale.
std::vector<TaskRecord> build_qra(const std::vector<QAExample>& examples, const RationaleMap& rationales,
                                  const seq::TokenCounter* counter = nullptr);

/// Three student rationales per example in the decoder input; the output is
/// "<answer> a" so the loss covers the answer only. Throws FoldLeak.
std::vector<TaskRecord> build_apr(const std::vector<QAExample>& examples, const StudentPool& students,
                                  const FoldPlan& plan, const seq::TokenCounter* counter = nullptr,
                                  int samples = tools::kStudentSamples);

/// Useful crops with the gold answer and irrelevant crops with "None".
std::vector<TaskRecord> build_qraci(const std::vector<filter::CategorizedExample>& categorized,
                                    const seq::TokenCounter* counter = nullptr);

/// Relevant-but-not-useful crops: rationale in the decoder input, answer out.
std::vector<TaskRecord> build_apraci(const std::vector<filter::CategorizedExample>& categorized,
                                     const seq::TokenCounter* counter = nullptr);

/// "q <answer> a" baseline.
std::vector<TaskRecord> build_qid(const std::vector<QAExample>& examples, const seq::TokenCounter* counter = nullptr);

/// Answer-only baseline; the output is the bare answer.
std::vector<TaskRecord> build_ans_only(const std::vector<QAExample>& examples,
                                       const seq::TokenCounter* counter = nullptr);

/// Decoder output for answer-only-loss tasks: "<answer> a".
std::string answer_output(std::string_view answer, const seq::TokenCounter& counter);

}  // namespace rd::tasks
