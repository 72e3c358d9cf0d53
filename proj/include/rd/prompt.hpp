#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace rd::tools {

/// Few-shot prompt with {question} {answer} {ocr} {table} style placeholders.
/// Bodies are operator-supplied files; nothing here invents prompt wording.
struct PromptTemplate {
    std::string name;
    int shot_count = 0;
    std::string body;
};

inline constexpr int kSummarizerShots = 5;
inline constexpr int kProgrammerShots = 8;

/// Names of every `{identifier}` placeholder in the body.
std::set<std::string> placeholders(const PromptTemplate& tmpl);

/// Substitutes every placeholder occurrence; nothing else in the body changes.
/// Throws MissingBinding for a placeholder without a binding.
std::string render_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings);

/// Loads {"name", "shot_count", "body" | "body_file"} JSON; body_file is
/// resolved relative to the template file.
PromptTemplate load_template(const std::filesystem::path& path);

}  // namespace rd::tools
