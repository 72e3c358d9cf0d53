#include "rd/tools.hpp"

#include <spdlog/spdlog.h>

#include "rd/program.hpp"
#include "rd/sequence.hpp"

namespace rd::tools {

namespace {

const seq::TokenCounter& counter_or_default(const seq::TokenCounter* counter) {
    static const seq::WhitespaceCounter fallback;
    return counter ? *counter : fallback;
}

std::string fetch_ocr(const QAExample& example, const Toolset& tools) {
    if (!example.ocr_text.empty()) return example.ocr_text;
    if (!tools.ocr) throw ToolFailure("ocr", "example " + example.example_id + " has no OCR and no OCR client");
    return tools.ocr->recognize(example.image).full_text;
}

}  // namespace

std::string verifier_text_input(const std::optional<std::string>& rationale, std::string_view question) {
    std::string out;
    if (rationale) {
        out += *rationale;
        out += ' ';
    }
    out += "Answer in en: ";
    out += question;
    return out;
}

std::string_view to_string(Flow flow) { return flow == Flow::TextEvidence ? "text-evidence" : "table-program"; }

Flow flow_from_string(std::string_view s) {
    if (s == "text-evidence") return Flow::TextEvidence;
    if (s == "table-program") return Flow::TableProgram;
    throw Error("unknown flow '" + std::string(s) + "' (expected text-evidence or table-program)");
}

std::string table_for_prompt(const Table& table) {
    std::string out;
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (r) out += '\n';
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            if (c) out += " | ";
            out += table[r][c];
        }
    }
    return out;
}

Rationale generate_rationale(const QAExample& example, Flow flow, const Toolset& tools, const Templates& templates,
                             const GenerateOptions& options) {
    const auto& counter = counter_or_default(options.counter);
    const std::string ocr = fetch_ocr(example, tools);

    if (flow == Flow::TextEvidence) {
        if (!tools.summarizer) throw ToolFailure("summarizer", "no summarizer client configured");
        std::string evidence = tools.summarizer->summarize(
            {example.image, example.question, example.canonical_answer(), ocr, templates.summarizer});
        if (counter.count(evidence) > kEvidenceTokenLimit)
            evidence = std::string(trim(counter.truncate(evidence, kEvidenceTokenLimit)));
        return Rationale::text(std::string(trim(evidence)));
    }

    Table table;
    if (example.structured_table) {
        table = *example.structured_table;
    } else if (tools.plot_to_table) {
        table = tools.plot_to_table->extract_table(example.image);
    } else {
        throw ToolFailure("plot-to-table", "example " + example.example_id +
                                               " has no structured table and no Plot-to-Table client");
    }
    if (!tools.programmer) throw ToolFailure("programmer", "no programmer client configured");

    std::string last_error = "no attempts";
    const int attempts = std::max(1, options.max_program_attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string source = tools.programmer->write_program(
            {example.image, example.question, example.canonical_answer(), ocr, table, templates.programmer, attempt});
        try {
            dsl::parse(source);
            return Rationale::table_program(std::move(table), std::string(trim(source)));
        } catch (const Error& e) {
            last_error = e.what();
            spdlog::debug("{}: programmer attempt {} rejected: {}", example.example_id, attempt + 1, last_error);
        }
    }
    throw InvalidProgram(example.example_id, std::move(table), attempts, last_error);
}

std::string rationale_text(const Rationale& rationale, const seq::TokenCounter& counter, std::string_view question) {
    if (const auto* t = std::get_if<TextEvidence>(&rationale.body)) return seq::escape_field(trim(t->evidence));
    const auto& p = std::get<TableProgram>(rationale.body);
    return seq::encode_program_rationale(p.table, p.program_source, counter, question);
}

}  // namespace rd::tools
