#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "rd/data_model.hpp"
#include "rd/tools.hpp"

namespace rd::tools {

struct MockState;

/// Deterministic stand-ins for every external tool, driven by a fixtures file.
/// Each answer is a pure function of (seed, request): fixture entries win, and
/// the built-in rules below cover everything else.
///
/// Fixture layout (all sections optional, keyed by image id; "root" means the
/// id with any "#c<j>" crop suffix removed):
///   ocr:           root -> {"boxes": [{text,x0,y0,x1,y1}]}; crops see only boxes inside the window
///   summarizer:    id -> evidence
///   programmer:    id -> [program per attempt]; the last entry repeats
///   plot_to_table: root -> table; crops keep the header and rows named in their OCR
///   verifier:      {"answer_key": root -> answer, "greedy": id -> answer,
///                   "logprob": id -> {"with": lp, "without": lp}}
///   student:       id -> [rationale, ...]
///
/// Default rules: the summarizer quotes OCR lines mentioning the answer; the
/// programmer searches the table for a one-call program reproducing the answer
/// and falls back to Find; the verifier answers correctly only when the
/// rationale mentions (or computes) the answer key and boosts its probability
/// by a seeded factor; students quote seeded OCR word windows.
class MockTools {
public:
    MockTools(Json fixtures, std::uint64_t seed);

    static MockTools load(const std::filesystem::path& fixtures_path, std::uint64_t seed);

    Toolset toolset() const;
    std::shared_ptr<OcrClient> ocr() const;
    std::shared_ptr<SummarizerClient> summarizer() const;
    std::shared_ptr<ProgrammerClient> programmer() const;
    std::shared_ptr<PlotToTableClient> plot_to_table() const;
    std::shared_ptr<VerifierClient> verifier() const;
    /// `model_tag` distinguishes separately trained student models.
    std::shared_ptr<StudentRationaleClient> student(std::string model_tag) const;

private:
    std::shared_ptr<const MockState> state_;
};

/// Image id without any crop suffix.
std::string root_image_id(std::string_view image_id);

}  // namespace rd::tools
