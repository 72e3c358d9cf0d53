#include "rd/tasks.hpp"

#include <algorithm>
#include <random>

#include <spdlog/spdlog.h>

#include "rd/errors.hpp"
#include "rd/hash.hpp"
#include "rd/sequence.hpp"

namespace rd::tasks {

namespace {

const seq::TokenCounter& use(const seq::TokenCounter* counter) {
    static const seq::WhitespaceCounter fallback;
    return counter ? *counter : fallback;
}

std::vector<const QAExample*> sorted_by_id(const std::vector<QAExample>& examples) {
    std::vector<const QAExample*> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(&e);
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->example_id < b->example_id; });
    return out;
}

std::vector<const filter::CategorizedExample*> sorted_by_id(const std::vector<filter::CategorizedExample>& items) {
    std::vector<const filter::CategorizedExample*> out;
    out.reserve(items.size());
    for (const auto& e : items) out.push_back(&e);
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->example_id < b->example_id; });
    return out;
}

}  // namespace

std::vector<std::string> FoldPlan::members(std::size_t fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : assignment)
        if (f == fold) out.push_back(id);
    return out;
}

FoldPlan plan_folds(const std::map<std::string, std::vector<std::string>>& ids_by_subset,
                    std::size_t folds_per_subset, std::uint64_t seed) {
    if (folds_per_subset == 0) throw Error("folds_per_subset must be positive");
    FoldPlan plan;
    plan.folds_per_subset = folds_per_subset;
    plan.seed = seed;

    for (const auto& [subset, raw_ids] : ids_by_subset) {
        std::vector<std::string> ids = raw_ids;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        if (ids.size() < folds_per_subset)
            throw SubsetTooSmall("subset '" + subset + "' has " + std::to_string(ids.size()) +
                                 " example(s), fewer than " + std::to_string(folds_per_subset) + " folds");

        std::mt19937_64 rng(seed ^ stable_hash({"folds", subset}));
        for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng() % i]);

        const std::size_t offset = plan.fold_subset.size();
        for (std::size_t f = 0; f < folds_per_subset; ++f) plan.fold_subset.push_back(subset);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!plan.assignment.emplace(ids[i], offset + i % folds_per_subset).second)
                throw Error("example " + ids[i] + " appears in more than one subset");
        }
    }
    return plan;
}

StudentPool make_fold_students(const FoldPlan& plan,
                               const std::function<std::shared_ptr<tools::StudentRationaleClient>(std::size_t)>& make) {
    StudentPool pool;
    for (std::size_t fold = 0; fold < plan.fold_count(); ++fold) {
        FoldStudent s;
        for (std::size_t other = 0; other < plan.fold_count(); ++other)
            if (other != fold && plan.fold_subset[other] == plan.fold_subset[fold]) s.trained_on.insert(other);
        s.client = make(fold);
        pool.emplace(fold, std::move(s));
    }
    return pool;
}

void check_fold_plan(const FoldPlan& plan, const std::vector<QAExample>& examples) {
    for (const auto& [id, fold] : plan.assignment)
        if (fold >= plan.fold_count())
            throw FoldLeak("example " + id + " is assigned to fold " + std::to_string(fold) + " outside the plan");
    for (const auto& e : examples) {
        auto it = plan.assignment.find(e.example_id);
        if (it == plan.assignment.end()) throw FoldLeak("example " + e.example_id + " is not covered by the fold plan");
        if (plan.fold_subset[it->second] != e.subset)
            throw FoldLeak("example " + e.example_id + " of subset '" + e.subset + "' is assigned to a fold of '" +
                           plan.fold_subset[it->second] + "'");
    }
}

std::string answer_output(std::string_view answer, const seq::TokenCounter& counter) {
    return std::string(seq::kAnswerMarker) + " " + seq::encode_answer(answer, counter);
}

std::vector<TaskRecord> build_qra(const std::vector<QAExample>& examples, const RationaleMap& rationales,
                                  const seq::TokenCounter* counter) {
    const auto& tc = use(counter);
    std::vector<TaskRecord> out;
    for (const auto* e : sorted_by_id(examples)) {
        auto it = rationales.find(e->example_id);
        if (it == rationales.end()) throw MissingRationale(e->example_id);
        if (it->second.flagged) {
            spdlog::info("QRA: skipping {} (flagged invalid program)", e->example_id);
            continue;
        }
        const auto& r = it->second.rationale;
        const bool empty = r.is_text() ? trim(std::get<TextEvidence>(r.body).evidence).empty()
                                       : trim(std::get<TableProgram>(r.body).program_source).empty();
        if (empty) throw MissingRationale(e->example_id);
        const auto text = tools::rationale_text(r, tc, e->question);
        out.emplace_back(TaskKind::QRA, e->example_id, e->image, "",
                         seq::encode_target(e->question, text, e->canonical_answer(), tc));
    }
    return out;
}

std::vector<TaskRecord> build_apr(const std::vector<QAExample>& examples, const StudentPool& students,
                                  const FoldPlan& plan, const seq::TokenCounter* counter, int samples) {
    check_fold_plan(plan, examples);
    const auto& tc = use(counter);
    std::vector<TaskRecord> out;
    for (const auto* e : sorted_by_id(examples)) {
        const std::size_t fold = plan.assignment.at(e->example_id);
        auto s = students.find(fold);
        if (s == students.end() || !s->second.client)
            throw Error("no student model generates rationales for fold " + std::to_string(fold));
        if (s->second.trained_on.count(fold))
            throw FoldLeak("student for fold " + std::to_string(fold) + " was trained on that fold");
        const auto rationales = s->second.client->sample_rationales(e->image, e->question, samples);
        if (static_cast<int>(rationales.size()) != samples)
            throw ToolFailure("student", "expected " + std::to_string(samples) + " rationales for " + e->example_id);
        for (const auto& r : rationales) {
            out.emplace_back(TaskKind::APR, e->example_id, e->image, seq::encode_prefix(e->question, r, tc),
                             answer_output(e->canonical_answer(), tc));
        }
    }
    return out;
}

std::vector<TaskRecord> build_qraci(const std::vector<filter::CategorizedExample>& categorized,
                                    const seq::TokenCounter* counter) {
    const auto& tc = use(counter);
    std::vector<TaskRecord> out;
    for (const auto* c : sorted_by_id(categorized)) {
        if (c->category == filter::Category::RelevantNotUseful) continue;
        const std::string answer =
            c->category == filter::Category::Irrelevant ? std::string(kNoneAnswer) : c->effective_answer;
        const auto text = tools::rationale_text(c->rationale, tc, c->question);
        out.emplace_back(TaskKind::QRACI, c->example_id, c->image, "", seq::encode_target(c->question, text, answer, tc));
    }
    return out;
}

std::vector<TaskRecord> build_apraci(const std::vector<filter::CategorizedExample>& categorized,
                                     const seq::TokenCounter* counter) {
    const auto& tc = use(counter);
    std::vector<TaskRecord> out;
    for (const auto* c : sorted_by_id(categorized)) {
        if (c->category != filter::Category::RelevantNotUseful) continue;
        const auto text = tools::rationale_text(c->rationale, tc, c->question);
        out.emplace_back(TaskKind::APRCI, c->example_id, c->image, seq::encode_prefix(c->question, text, tc),
                         answer_output(c->effective_answer, tc));
    }
    return out;
}

std::vector<TaskRecord> build_qid(const std::vector<QAExample>& examples, const seq::TokenCounter* counter) {
    const auto& tc = use(counter);
    std::vector<TaskRecord> out;
    for (const auto* e : sorted_by_id(examples))
        out.emplace_back(TaskKind::QID, e->example_id, e->image, "",
                         seq::encode_target(e->question, std::nullopt, e->canonical_answer(), tc));
    return out;
}

std::vector<TaskRecord> build_ans_only(const std::vector<QAExample>& examples, const seq::TokenCounter* counter) {
    const auto& tc = use(counter);
    std::vector<TaskRecord> out;
    for (const auto* e : sorted_by_id(examples))
        out.emplace_back(TaskKind::AnsOnly, e->example_id, e->image, "", seq::encode_answer(e->canonical_answer(), tc));
    return out;
}

}  // namespace rd::tasks
