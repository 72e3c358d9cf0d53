#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rd/errors.hpp"

// The flat program language used by table-program rationales:
// Div(a,b) Mul(a,b) Avg(xs) Sum(xs) Diff(a,b) Greater(a,b) Less(a,b) Find(text).
namespace rd::dsl {

enum class Op { Div, Mul, Avg, Sum, Diff, Greater, Less, Find };

std::string_view to_string(Op op);
std::optional<Op> op_from_string(std::string_view name);

using Arg = std::variant<double, std::string>;

struct Program {
    Op op = Op::Find;
    std::vector<Arg> args;

    bool operator==(const Program&) const = default;
};

class ParseError : public Error {
public:
    ParseError(std::size_t position, std::string expected)
        : Error("parse error at " + std::to_string(position) + ": expected " + expected),
          position_(position), expected_(std::move(expected)) {}
    std::size_t position() const { return position_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class ArityError : public Error {
public:
    ArityError(Op op, std::size_t got)
        : Error(std::string(to_string(op)) + " cannot take " + std::to_string(got) + " argument(s)"),
          op_(op), got_(got) {}
    Op op() const { return op_; }
    std::size_t got() const { return got_; }

private:
    Op op_;
    std::size_t got_;
};

class TypeError : public Error {
public:
    TypeError(Op op, std::size_t index)
        : Error(std::string(to_string(op)) + " argument " + std::to_string(index) + " is not a number"),
          op_(op), index_(index) {}
    Op op() const { return op_; }
    std::size_t index() const { return index_; }

private:
    Op op_;
    std::size_t index_;
};

class DivisionByZero : public Error {
public:
    DivisionByZero() : Error("division by zero") {}
};

class NonFinite : public Error {
public:
    NonFinite() : Error("value is not finite") {}
};

struct Passthrough {
    bool operator==(const Passthrough&) const = default;
};

/// Numeric result, Yes/No comparison result, or Passthrough for Find.
using ExecResult = std::variant<double, bool, Passthrough>;

/// Throws ParseError, ArityError or TypeError.
Program parse(std::string_view source);

/// Throws ArityError/TypeError if the program is malformed.
void validate(const Program& p);

/// Throws DivisionByZero for Div(a, 0).
ExecResult execute(const Program& p);

/// Canonical "Op(a1, a2, ...)" form; numbers use the shortest round-tripping decimal.
std::string print(const Program& p);

/// Integers without a decimal point, otherwise at most six fractional digits
/// with trailing zeros removed. Throws NonFinite.
std::string render_numeric(double x);

/// "Yes"/"No" for comparisons, render_numeric for numbers, nullopt for Passthrough.
std::optional<std::string> render(const ExecResult& result);

}  // namespace rd::dsl
