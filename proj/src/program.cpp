#include "rd/program.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <regex>

#include "rd/data_model.hpp"

namespace rd::dsl {

namespace {

constexpr std::array kOps = {Op::Div, Op::Mul, Op::Avg, Op::Sum, Op::Diff, Op::Greater, Op::Less, Op::Find};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool fixed_arity(Op op) { return op != Op::Avg && op != Op::Sum && op != Op::Find; }

bool arity_ok(Op op, std::size_t n) { return fixed_arity(op) ? n == 2 : n >= 1; }

// Optional sign, integer part with or without comma thousands groups, optional
// fraction, optional trailing percent sign (dropped without rescaling).
std::optional<double> parse_number(std::string_view text) {
    static const std::regex kNumber(R"(^[+-]?(?:(?:[1-9]\d{0,2}(?:,\d{3})+)|\d+)?(?:\.\d+)?%?$)");
    if (text.empty() || !std::regex_match(text.begin(), text.end(), kNumber)) return std::nullopt;
    std::string digits;
    bool any_digit = false;
    for (char c : text) {
        if (c == ',' || c == '%' || c == '+') continue;
        any_digit = any_digit || is_digit(c);
        digits.push_back(c);
    }
    if (!any_digit) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
    return value;
}

enum class CommaKind { Spaced, Candidate, Hard };

struct Piece {
    std::string_view text;
    std::size_t offset;  // within the full source
};

std::vector<Piece> split(std::string_view inner, std::size_t base, const std::vector<std::size_t>& commas,
                         const std::vector<bool>& is_separator) {
    std::vector<Piece> pieces;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < commas.size(); ++i) {
        if (!is_separator[i]) continue;
        pieces.push_back({inner.substr(begin, commas[i] - begin), base + begin});
        begin = commas[i] + 1;
    }
    pieces.push_back({inner.substr(begin), base + begin});
    for (auto& p : pieces) {
        auto t = trim(p.text);
        p.offset += t.empty() ? 0 : static_cast<std::size_t>(t.data() - p.text.data());
        p.text = t;
    }
    return pieces;
}

// Converts pieces into numeric args, raising the first error encountered.
std::vector<Arg> to_args(Op op, const std::vector<Piece>& pieces) {
    if (pieces.size() == 1 && pieces[0].text.empty()) throw ArityError(op, 0);
    std::vector<Arg> args;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (pieces[i].text.empty()) throw ParseError(pieces[i].offset, "a number");
        auto v = parse_number(pieces[i].text);
        if (!v) throw TypeError(op, i);
        args.emplace_back(*v);
    }
    if (!arity_ok(op, args.size())) throw ArityError(op, args.size());
    return args;
}

bool all_numeric(const std::vector<Piece>& pieces) {
    for (const auto& p : pieces)
        if (!parse_number(p.text)) return false;
    return true;
}

std::string format_number(double v) {
    std::array<char, 512> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
    if (ec != std::errc()) throw NonFinite();
    return std::string(buf.data(), ptr);
}

}  // namespace

std::string_view to_string(Op op) {
    switch (op) {
        case Op::Div: return "Div";
        case Op::Mul: return "Mul";
        case Op::Avg: return "Avg";
        case Op::Sum: return "Sum";
        case Op::Diff: return "Diff";
        case Op::Greater: return "Greater";
        case Op::Less: return "Less";
        case Op::Find: return "Find";
    }
    return "?";
}

std::optional<Op> op_from_string(std::string_view name) {
    for (auto op : kOps)
        if (to_string(op) == name) return op;
    return std::nullopt;
}

Program parse(std::string_view source) {
    std::size_t pos = 0;
    while (pos < source.size() && is_space(source[pos])) ++pos;
    const std::size_t name_begin = pos;
    while (pos < source.size() && std::isalpha(static_cast<unsigned char>(source[pos]))) ++pos;
    auto op = op_from_string(source.substr(name_begin, pos - name_begin));
    if (!op) throw ParseError(name_begin, "one of Div, Mul, Avg, Sum, Diff, Greater, Less, Find");
    while (pos < source.size() && is_space(source[pos])) ++pos;
    if (pos >= source.size() || source[pos] != '(') throw ParseError(pos, "'('");
    const std::size_t open = pos;

    auto close = source.find_last_of(')');
    if (close == std::string_view::npos || close < open) throw ParseError(source.size(), "')'");
    for (std::size_t i = close + 1; i < source.size(); ++i)
        if (!is_space(source[i])) throw ParseError(i, "end of program");

    const std::string_view inner = source.substr(open + 1, close - open - 1);
    const std::size_t base = open + 1;

    if (*op == Op::Find) {
        auto text = trim(inner);
        if (text.empty()) throw ArityError(Op::Find, 0);
        return Program{Op::Find, {std::string(text)}};
    }

    std::vector<std::size_t> commas;
    std::vector<CommaKind> kinds;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        if (inner[i] != ',') continue;
        commas.push_back(i);
        if (i + 1 < inner.size() && is_space(inner[i + 1])) {
            kinds.push_back(CommaKind::Spaced);
        } else if (i > 0 && is_digit(inner[i - 1]) && i + 3 < inner.size() && is_digit(inner[i + 1]) &&
                   is_digit(inner[i + 2]) && is_digit(inner[i + 3]) &&
                   (i + 4 == inner.size() || !is_digit(inner[i + 4]))) {
            kinds.push_back(CommaKind::Candidate);
        } else {
            kinds.push_back(CommaKind::Hard);
        }
    }

    std::vector<std::size_t> candidates;
    bool spaced_style = false;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (kinds[i] == CommaKind::Candidate) candidates.push_back(i);
        spaced_style = spaced_style || kinds[i] == CommaKind::Spaced;
    }

    std::vector<bool> sep(commas.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) sep[i] = kinds[i] != CommaKind::Candidate;

    // With ", " separators in use, an unspaced comma inside a digit run is a
    // thousands separator. Otherwise the arity has to pick one reading.
    if (!spaced_style && !candidates.empty()) {
        if (candidates.size() > 16) throw ParseError(base + commas[candidates[0]], "an unambiguous argument list");
        std::optional<std::vector<bool>> chosen;
        std::size_t matches = 0;
        for (std::uint32_t mask = 0; mask < (1u << candidates.size()); ++mask) {
            auto trial = sep;
            for (std::size_t c = 0; c < candidates.size(); ++c) trial[candidates[c]] = (mask >> c) & 1u;
            auto pieces = split(inner, base, commas, trial);
            if (arity_ok(*op, pieces.size()) && all_numeric(pieces)) {
                ++matches;
                chosen = std::move(trial);
            }
        }
        if (matches > 1) throw ParseError(base + commas[candidates[0]], "an unambiguous thousands separator");
        if (matches == 1) sep = *chosen;
    }

    return Program{*op, to_args(*op, split(inner, base, commas, sep))};
}

void validate(const Program& p) {
    if (p.op == Op::Find) {
        if (p.args.size() != 1) throw ArityError(p.op, p.args.size());
        if (!std::holds_alternative<std::string>(p.args[0])) throw TypeError(p.op, 0);
        return;
    }
    if (!arity_ok(p.op, p.args.size())) throw ArityError(p.op, p.args.size());
    for (std::size_t i = 0; i < p.args.size(); ++i)
        if (!std::holds_alternative<double>(p.args[i])) throw TypeError(p.op, i);
}

ExecResult execute(const Program& p) {
    validate(p);
    if (p.op == Op::Find) return Passthrough{};

    std::vector<double> xs;
    xs.reserve(p.args.size());
    for (const auto& a : p.args) xs.push_back(std::get<double>(a));

    switch (p.op) {
        case Op::Div:
            if (xs[1] == 0.0) throw DivisionByZero();
            return xs[0] / xs[1];
        case Op::Mul: return xs[0] * xs[1];
        case Op::Diff: return xs[0] - xs[1];
        case Op::Greater: return xs[0] > xs[1];
        case Op::Less: return xs[0] < xs[1];
        case Op::Sum:
        case Op::Avg: {
            double total = 0.0;
            for (double x : xs) total += x;
            return p.op == Op::Sum ? total : total / static_cast<double>(xs.size());
        }
        case Op::Find: break;
    }
    return Passthrough{};
}

std::string print(const Program& p) {
    std::string out(to_string(p.op));
    out += '(';
    for (std::size_t i = 0; i < p.args.size(); ++i) {
        if (i) out += ", ";
        if (const auto* d = std::get_if<double>(&p.args[i]))
            out += format_number(*d);
        else
            out += std::get<std::string>(p.args[i]);
    }
    out += ')';
    return out;
}

std::string render_numeric(double x) {
    if (!std::isfinite(x)) throw NonFinite();
    std::vector<char> buf(400);
    std::snprintf(buf.data(), buf.size(), "%.6f", x);
    std::string s(buf.data());
    if (auto dot = s.find('.'); dot != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

std::optional<std::string> render(const ExecResult& result) {
    if (const auto* d = std::get_if<double>(&result)) return render_numeric(*d);
    if (const auto* b = std::get_if<bool>(&result)) return std::string(*b ? "Yes" : "No");
    return std::nullopt;
}

}  // namespace rd::dsl
