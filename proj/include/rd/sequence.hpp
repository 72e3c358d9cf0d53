#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "rd/data_model.hpp"
#include "rd/errors.hpp"

namespace rd::seq {

inline constexpr std::string_view kRationaleMarker = "<s>";
inline constexpr std::string_view kAnswerMarker = "<answer>";
inline constexpr std::string_view kProgramMarker = "<program>";

// Decoder budget: 128 tokens, 108 before the answer marker and 20 for the answer.
// Inside a program rationale, 64 tokens precede the program and 44 remain for it.
inline constexpr std::size_t kPrefixBudget = 108;
inline constexpr std::size_t kAnswerBudget = 20;
inline constexpr std::size_t kTableBudget = 64;
inline constexpr std::size_t kProgramBudget = 44;

class EmptyAnswer : public Error {
public:
    EmptyAnswer() : Error("answer is empty") {}
};

class NoAnswerMarker : public Error {
public:
    NoAnswerMarker() : Error("decoded sequence has no <answer> marker") {}
};

/// Pluggable tokenizer stand-in. truncate() must return a prefix of its input
/// with count(truncate(t, m)) <= m.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string truncate(std::string_view text, std::size_t max_tokens) const = 0;
    virtual std::string_view name() const = 0;
};

/// One token per whitespace-separated word.
class WhitespaceCounter final : public TokenCounter {
public:
    std::size_t count(std::string_view text) const override;
    std::string truncate(std::string_view text, std::size_t max_tokens) const override;
    std::string_view name() const override { return "whitespace"; }
};

/// ceil(code points / 4), a rough subword approximation.
class CharQuarterCounter final : public TokenCounter {
public:
    std::size_t count(std::string_view text) const override;
    std::string truncate(std::string_view text, std::size_t max_tokens) const override;
    std::string_view name() const override { return "chars4"; }
};

/// "whitespace" or "chars4".
std::unique_ptr<TokenCounter> make_counter(std::string_view name);

/// Replaces literal separators inside field text with look-alike forms
/// ("<s>" -> "‹s›"). `keep_program` leaves "<program>" untouched.
std::string escape_field(std::string_view text, bool keep_program = false);

struct DecodedTarget {
    std::string question;
    std::optional<std::string> rationale;
    std::string answer;

    bool answer_is_none() const { return is_none_answer(answer); }
    bool operator==(const DecodedTarget&) const = default;
};

/// "q <s> r", or just "q" without a rationale, trimmed to the prefix budget by
/// cutting the rationale tail first and then the question tail.
std::string encode_prefix(std::string_view question, const std::optional<std::string>& rationale,
                          const TokenCounter& counter);

/// Answer escaped and cut to the answer budget. Throws EmptyAnswer.
std::string encode_answer(std::string_view answer, const TokenCounter& counter);

/// "q <s> r <answer> a" or "q <answer> a". Throws EmptyAnswer.
std::string encode_target(std::string_view question, const std::optional<std::string>& rationale,
                          std::string_view answer, const TokenCounter& counter);

/// Row-major " | " / " \n " table linearization (the row break is the two
/// characters backslash and n so the rationale stays on one line).
std::string linearize_table(const Table& table);

/// "<table> <program> <source>". The table is cut to fit the 64-token budget by
/// dropping trailing rows, then trailing cells; the program is cut to 44 tokens.
/// When `question` is non-empty the 64-token budget covers "q <s> table <program>",
/// which is how the rationale sits inside a full decoder target.
std::string encode_program_rationale(const Table& table, std::string_view program_source,
                                     const TokenCounter& counter, std::string_view question = {});

/// Splits on the last "<answer>" and the first "<s>". Throws NoAnswerMarker or EmptyAnswer.
DecodedTarget parse_target(std::string_view decoded);

/// Text after the first "<program>" marker, trimmed; nullopt when there is no marker.
std::optional<std::string> extract_program(std::string_view rationale);

}  // namespace rd::seq
