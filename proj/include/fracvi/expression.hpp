#pragma once

/**
 * @file expression.hpp
 * @brief Tiny arithmetic grammar for fields in config files.
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := ('+' | '-') unary | power
 *   power   := primary ('^' unary)?
 *   primary := number | name | func '(' expr (',' expr)* ')' | '(' expr ')'
 *
 * Functions: sin, cos, exp, abs (one argument), min, max (two or more).
 * Constants: pi, e. Variable names are supplied by the caller, normally
 * x1..x3, plus y1..y3, r or w for kernels.
 */

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracvi {

class ExpressionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Expression {
public:
    struct Node;

    /// Throws ExpressionError with the character position on a syntax error
    /// or an unknown name.
    static Expression parse(const std::string& text, const std::vector<std::string>& variables);

    /// `values` follows the order of the variable list given to parse.
    double eval(std::span<const double> values) const;

    const std::string& text() const noexcept { return text_; }
    /// True when the expression names variables[index].
    bool uses(std::size_t index) const noexcept;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
    std::vector<bool> used_;
};

}  // namespace fracvi
