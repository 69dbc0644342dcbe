#include "fracvi/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace fracvi {

struct Expression::Node {
    enum class Kind { number, variable, neg, add, sub, mul, div, pow, sin, cos, exp, abs, min, max };
    Kind kind = Kind::number;
    double value = 0.0;
    std::size_t slot = 0;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind kind, std::vector<NodePtr> args)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars, std::vector<bool>& used)
        : text_(text), vars_(vars), used_(used)
    {
    }

    NodePtr run()
    {
        NodePtr n = expr();
        skip();
        if (pos_ != text_.size())
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ExpressionError("expression \"" + text_ + "\": " + what + " at position " + std::to_string(pos_));
    }

    void skip()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make(Node::Kind::add, {lhs, term()});
            else if (accept('-'))
                lhs = make(Node::Kind::sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make(Node::Kind::mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make(Node::Kind::div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-'))
            return make(Node::Kind::neg, {unary()});
        if (accept('+'))
            return unary();
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^'))
            return make(Node::Kind::pow, {base, unary()});
        return base;
    }

    NodePtr primary()
    {
        skip();
        if (pos_ >= text_.size())
            fail("unexpected end");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (!accept(')'))
                fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return name();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number()
    {
        double v = 0.0;
        const char* first = text_.data() + pos_;
        const auto [end, ec] = std::from_chars(first, text_.data() + text_.size(), v);
        if (ec != std::errc())
            fail("bad number");
        pos_ += static_cast<std::size_t>(end - first);
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
    }

    NodePtr name()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string id = text_.substr(start, pos_ - start);

        static const std::pair<const char*, Node::Kind> funcs[] = {
            {"sin", Node::Kind::sin}, {"cos", Node::Kind::cos}, {"exp", Node::Kind::exp},
            {"abs", Node::Kind::abs}, {"min", Node::Kind::min}, {"max", Node::Kind::max}};
        for (const auto& [fname, kind] : funcs) {
            if (id != fname)
                continue;
            if (!accept('('))
                fail("expected '(' after " + id);
            std::vector<NodePtr> args{expr()};
            while (accept(','))
                args.push_back(expr());
            if (!accept(')'))
                fail("expected ')'");
            const bool variadic = kind == Node::Kind::min || kind == Node::Kind::max;
            if (variadic ? args.size() < 2 : args.size() != 1)
                fail(id + (variadic ? " needs at least two arguments" : " takes one argument"));
            return make(kind, std::move(args));
        }

        auto n = std::make_shared<Node>();
        if (id == "pi") {
            n->value = std::numbers::pi;
            return n;
        }
        if (id == "e") {
            n->value = std::numbers::e;
            return n;
        }
        const auto it = std::find(vars_.begin(), vars_.end(), id);
        if (it == vars_.end()) {
            pos_ = start;
            fail("unknown name '" + id + "'");
        }
        n->kind = Node::Kind::variable;
        n->slot = static_cast<std::size_t>(it - vars_.begin());
        used_[n->slot] = true;
        return n;
    }

    const std::string& text_;
    const std::vector<std::string>& vars_;
    std::vector<bool>& used_;
    std::size_t pos_ = 0;
};

double evaluate(const Node& n, std::span<const double> x)
{
    using K = Node::Kind;
    const auto arg = [&](std::size_t i) { return evaluate(*n.args[i], x); };
    switch (n.kind) {
    case K::number:
        return n.value;
    case K::variable:
        return x[n.slot];
    case K::neg:
        return -arg(0);
    case K::add:
        return arg(0) + arg(1);
    case K::sub:
        return arg(0) - arg(1);
    case K::mul:
        return arg(0) * arg(1);
    case K::div:
        return arg(0) / arg(1);
    case K::pow:
        return std::pow(arg(0), arg(1));
    case K::sin:
        return std::sin(arg(0));
    case K::cos:
        return std::cos(arg(0));
    case K::exp:
        return std::exp(arg(0));
    case K::abs:
        return std::abs(arg(0));
    case K::min:
    case K::max: {
        double v = arg(0);
        for (std::size_t i = 1; i < n.args.size(); ++i)
            v = n.kind == K::min ? std::min(v, arg(i)) : std::max(v, arg(i));
        return v;
    }
    }
    return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables)
{
    Expression e;
    e.text_ = text;
    e.used_.assign(variables.size(), false);
    e.root_ = Parser(text, variables, e.used_).run();
    return e;
}

double Expression::eval(std::span<const double> values) const
{
    return evaluate(*root_, values);
}

bool Expression::uses(std::size_t index) const noexcept
{
    return index < used_.size() && used_[index];
}

}  // namespace fracvi
