#include "rd/sequence.hpp"

#include <cctype>

namespace rd::seq {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// Joins the non-empty parts with single spaces.
std::string join(std::initializer_list<std::string_view> parts) {
    std::string out;
    for (auto p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out += ' ';
        out += p;
    }
    return out;
}

std::string compose(std::string_view question, const std::optional<std::string>& rationale) {
    if (!rationale) return std::string(question);
    return join({question, kRationaleMarker, *rationale});
}

// Largest m in [0, hi] with fits(m); fits must be monotone (true then false).
template <class Fits>
std::optional<std::size_t> largest_fitting(std::size_t hi, Fits fits) {
    if (!fits(0)) return std::nullopt;
    std::size_t lo = 0;
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo + 1) / 2;
        if (fits(mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

std::string linearize_rows(const Table& table) {
    std::string out;
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (r) out += " \\n ";
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            if (c) out += " | ";
            out += escape_field(trim(table[r][c]));
        }
    }
    return out;
}

}  // namespace

std::size_t WhitespaceCounter::count(std::string_view text) const {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string WhitespaceCounter::truncate(std::string_view text, std::size_t max_tokens) const {
    std::size_t words = 0;
    std::size_t end = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size() || words == max_tokens) break;
        while (i < text.size() && !is_space(text[i])) ++i;
        ++words;
        end = i;
    }
    return std::string(text.substr(0, end));
}

std::size_t CharQuarterCounter::count(std::string_view text) const {
    std::size_t cps = 0;
    for (char c : text)
        if (!is_continuation(c)) ++cps;
    return (cps + 3) / 4;
}

std::string CharQuarterCounter::truncate(std::string_view text, std::size_t max_tokens) const {
    const std::size_t limit = max_tokens * 4;
    std::size_t cps = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_continuation(text[i])) continue;
        if (cps == limit) return std::string(text.substr(0, i));
        ++cps;
    }
    return std::string(text);
}

std::unique_ptr<TokenCounter> make_counter(std::string_view name) {
    if (name == "whitespace") return std::make_unique<WhitespaceCounter>();
    if (name == "chars4") return std::make_unique<CharQuarterCounter>();
    throw Error("unknown token counter '" + std::string(name) + "' (expected whitespace or chars4)");
}

std::string escape_field(std::string_view text, bool keep_program) {
    std::string s(text);
    replace_all(s, kRationaleMarker, "‹s›");
    replace_all(s, kAnswerMarker, "‹answer›");
    if (!keep_program) replace_all(s, kProgramMarker, "‹program›");
    return s;
}

std::string encode_prefix(std::string_view question, const std::optional<std::string>& rationale,
                          const TokenCounter& counter) {
    const std::string q = escape_field(trim(question));
    std::optional<std::string> r;
    if (rationale) r = escape_field(trim(*rationale), /*keep_program=*/true);

    std::string full = compose(q, r);
    if (counter.count(full) <= kPrefixBudget) return full;

    if (r) {
        auto m = largest_fitting(counter.count(*r), [&](std::size_t m) {
            return counter.count(compose(q, std::string(trim(counter.truncate(*r, m))))) <= kPrefixBudget;
        });
        if (m) return compose(q, std::string(trim(counter.truncate(*r, *m))));
        r = std::string();
    }
    auto m = largest_fitting(counter.count(q), [&](std::size_t m) {
        return counter.count(compose(trim(counter.truncate(q, m)), r)) <= kPrefixBudget;
    });
    return compose(trim(counter.truncate(q, m.value_or(0))), r);
}

std::string encode_answer(std::string_view answer, const TokenCounter& counter) {
    std::string a = escape_field(trim(answer));
    if (a.empty()) throw EmptyAnswer();
    a = std::string(trim(counter.truncate(a, kAnswerBudget)));
    if (a.empty()) throw EmptyAnswer();
    return a;
}

std::string encode_target(std::string_view question, const std::optional<std::string>& rationale,
                          std::string_view answer, const TokenCounter& counter) {
    const std::string a = encode_answer(answer, counter);
    return join({encode_prefix(question, rationale, counter), kAnswerMarker, a});
}

std::string linearize_table(const Table& table) { return linearize_rows(table); }

std::string encode_program_rationale(const Table& table, std::string_view program_source,
                                     const TokenCounter& counter, std::string_view question) {
    const std::string q = escape_field(trim(question));
    auto head = [&](const Table& t) {
        auto lin = linearize_rows(t);
        return q.empty() ? join({lin, kProgramMarker}) : join({q, kRationaleMarker, lin, kProgramMarker});
    };

    Table kept = table;
    while (!kept.empty() && counter.count(head(kept)) > kTableBudget) {
        if (kept.size() > 1) {
            kept.pop_back();
        } else if (kept.front().size() > 1) {
            kept.front().pop_back();
        } else {
            // A single oversized cell: keep as much of it as fits.
            auto& cell = kept.front().front();
            const std::string escaped = escape_field(trim(cell));
            auto m = largest_fitting(counter.count(escaped), [&](std::size_t m) {
                return counter.count(head(Table{{std::string(trim(counter.truncate(escaped, m)))}})) <= kTableBudget;
            });
            if (!m || *m == 0) {
                kept.clear();
            } else {
                cell = std::string(trim(counter.truncate(escaped, *m)));
            }
            break;
        }
    }

    const std::string source = escape_field(trim(program_source));
    std::string program = std::string(trim(counter.truncate(source, kProgramBudget)));
    if (!q.empty()) {
        // Joining spaces can push a coarse counter one token past the prefix budget.
        const std::string h = head(kept);
        auto m = largest_fitting(counter.count(program), [&](std::size_t m) {
            return counter.count(join({h, trim(counter.truncate(program, m))})) <= kPrefixBudget;
        });
        program = std::string(trim(counter.truncate(program, m.value_or(0))));
    }
    return join({linearize_rows(kept), kProgramMarker, program});
}

DecodedTarget parse_target(std::string_view decoded) {
    const auto at = decoded.rfind(kAnswerMarker);
    if (at == std::string_view::npos) throw NoAnswerMarker();
    DecodedTarget out;
    out.answer = std::string(trim(decoded.substr(at + kAnswerMarker.size())));
    if (out.answer.empty()) throw EmptyAnswer();
    const auto before = decoded.substr(0, at);
    if (auto s = before.find(kRationaleMarker); s != std::string_view::npos) {
        out.question = std::string(trim(before.substr(0, s)));
        out.rationale = std::string(trim(before.substr(s + kRationaleMarker.size())));
    } else {
        out.question = std::string(trim(before));
    }
    return out;
}

std::optional<std::string> extract_program(std::string_view rationale) {
    const auto at = rationale.find(kProgramMarker);
    if (at == std::string_view::npos) return std::nullopt;
    return std::string(trim(rationale.substr(at + kProgramMarker.size())));
}

}  // namespace rd::seq
