#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rd/data_model.hpp"
#include "rd/errors.hpp"
#include "rd/prompt.hpp"

namespace rd::seq {
class TokenCounter;
}

namespace rd::tools {

struct OcrResult {
    std::string full_text;
    std::vector<OcrBox> boxes;
};

class OcrClient {
public:
    virtual ~OcrClient() = default;
    virtual OcrResult recognize(const ImageRef& image) = 0;
};

struct SummaryRequest {
    const ImageRef& image;
    std::string_view question;
    std::string_view gold_answer;
    std::string_view full_ocr;
    const PromptTemplate& prompt;
};

/// Single-sample, low-temperature evidence summarizer.
class SummarizerClient {
public:
    virtual ~SummarizerClient() = default;
    virtual std::string summarize(const SummaryRequest& request) = 0;
};

struct ProgramRequest {
    const ImageRef& image;
    std::string_view question;
    std::string_view gold_answer;
    std::string_view full_ocr;
    const Table& table;
    const PromptTemplate& prompt;
    int attempt = 0;
};

class ProgrammerClient {
public:
    virtual ~ProgrammerClient() = default;
    virtual std::string write_program(const ProgramRequest& request) = 0;
};

/// Recovers a chart's underlying data table.
class PlotToTableClient {
public:
    virtual ~PlotToTableClient() = default;
    virtual Table extract_table(const ImageRef& image) = 0;
};

class VerifierClient {
public:
    virtual ~VerifierClient() = default;
    virtual std::string greedy_answer(const ImageRef& image, std::string_view question,
                                      const std::optional<std::string>& rationale) = 0;
    /// log p(answer | image, question[, rationale]); always <= 0.
    virtual double answer_logprob(const ImageRef& image, std::string_view question, std::string_view answer,
                                  const std::optional<std::string>& rationale) = 0;
};

class StudentRationaleClient {
public:
    virtual ~StudentRationaleClient() = default;
    virtual std::vector<std::string> sample_rationales(const ImageRef& image, std::string_view question, int n) = 0;
};

inline constexpr int kStudentSamples = 3;
inline constexpr std::size_t kEvidenceTokenLimit = 100;
inline constexpr double kSummarizerTemperature = 0.1;

/// Verifier text-encoder input: "<rationale> Answer in en: <question>", or
/// "Answer in en: <question>" without a rationale.
std::string verifier_text_input(const std::optional<std::string>& rationale, std::string_view question);

struct Toolset {
    std::shared_ptr<OcrClient> ocr;
    std::shared_ptr<SummarizerClient> summarizer;
    std::shared_ptr<ProgrammerClient> programmer;
    std::shared_ptr<PlotToTableClient> plot_to_table;  // optional
    std::shared_ptr<VerifierClient> verifier;
};

struct Templates {
    PromptTemplate summarizer;
    PromptTemplate programmer;
};

enum class Flow { TextEvidence, TableProgram };

std::string_view to_string(Flow flow);
Flow flow_from_string(std::string_view s);

struct GenerateOptions {
    /// Total programmer attempts before the program is declared invalid.
    int max_program_attempts = 3;
    const seq::TokenCounter* counter = nullptr;  // whitespace counter when null
};

/// Programmer output never passed validation. Carries the table so the caller
/// can keep a flagged record with an empty program.
class InvalidProgram : public Error {
public:
    InvalidProgram(std::string example_id, Table table, int attempts, std::string last_error)
        : Error("invalid program for " + example_id + " after " + std::to_string(attempts) +
                " attempt(s): " + last_error),
          table_(std::move(table)), attempts_(attempts) {}
    const Table& table() const { return table_; }
    int attempts() const { return attempts_; }

private:
    Table table_;
    int attempts_;
};

/// Produces the tool rationale for one example. OCR comes from the example or
/// the OCR client; the table from the example or the Plot-to-Table client.
/// Evidence is cut to 100 tokens. Throws ToolFailure or InvalidProgram.
Rationale generate_rationale(const QAExample& example, Flow flow, const Toolset& tools, const Templates& templates,
                             const GenerateOptions& options = {});

/// The text a rationale contributes to decoder sequences and verifier inputs:
/// the evidence, or "<table> <program> <source>" for table-program rationales.
std::string rationale_text(const Rationale& rationale, const seq::TokenCounter& counter,
                           std::string_view question = {});

/// Rows as " | " separated cells, one row per line, for prompt bindings.
std::string table_for_prompt(const Table& table);

}  // namespace rd::tools
