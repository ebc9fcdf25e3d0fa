#include "morsedisk/expr.hpp"

#include "dual.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace morsedisk {

using expr_detail::Node;
using expr_detail::Op;

namespace {

std::string kind_label(ParseError::Kind kind)
{
    switch (kind) {
    case ParseError::Kind::Syntax: return "syntax error";
    case ParseError::Kind::UnknownIdentifier: return "unknown identifier";
    case ParseError::Kind::Periodicity: return "periodicity violation";
    }
    return "parse error";
}

// Recursive-descent parser for the grammar in docs/grammar.md.
class Parser
{
public:
    Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

    std::vector<Node> nodes;

    int parse_all()
    {
        int root = parse_sum();
        skip_ws();
        if (pos_ != src_.size())
            fail(ParseError::Kind::Syntax, pos_, "unexpected '" + std::string(1, src_[pos_]) + "'");
        return root;
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, std::size_t at, const std::string& msg) const
    {
        throw ParseError(kind, at, msg);
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Node n)
    {
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }

    int binary(Op op, int lhs, int rhs, std::size_t at)
    {
        Node n;
        n.op = op;
        n.lhs = lhs;
        n.rhs = rhs;
        n.offset = at;
        return add(n);
    }

    int parse_sum()
    {
        int lhs = parse_product();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (accept('+'))
                lhs = binary(Op::Add, lhs, parse_product(), at);
            else if (accept('-'))
                lhs = binary(Op::Sub, lhs, parse_product(), at);
            else
                return lhs;
        }
    }

    int parse_product()
    {
        int lhs = parse_unary();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (accept('*'))
                lhs = binary(Op::Mul, lhs, parse_unary(), at);
            else if (accept('/'))
                lhs = binary(Op::Div, lhs, parse_unary(), at);
            else
                return lhs;
        }
    }

    int parse_unary()
    {
        skip_ws();
        std::size_t at = pos_;
        if (accept('-'))
            return binary(Op::Neg, parse_unary(), -1, at);
        if (accept('+'))
            return parse_unary();
        return parse_power();
    }

    int parse_power()
    {
        int base = parse_primary();
        skip_ws();
        std::size_t at = pos_;
        if (!accept('^'))
            return base;
        skip_ws();
        bool negative = false;
        if (accept('-'))
            negative = true;
        else if (accept('('))
            fail(ParseError::Kind::Syntax, pos_ - 1, "exponent must be an integer literal");
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (start == pos_ || (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e')))
            fail(ParseError::Kind::Syntax, start, "exponent must be an integer literal");
        int e = std::stoi(std::string(src_.substr(start, pos_ - start)));
        Node n;
        n.op = Op::Pow;
        n.lhs = base;
        n.index = negative ? -e : e;
        n.offset = at;
        return add(n);
    }

    int parse_primary()
    {
        skip_ws();
        std::size_t at = pos_;
        if (pos_ >= src_.size())
            fail(ParseError::Kind::Syntax, pos_, "expected operand");
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = parse_sum();
            if (!accept(')'))
                fail(ParseError::Kind::Syntax, pos_, "expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size()
                   && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            std::string name(src_.substr(at, pos_ - at));
            return parse_identifier(name, at);
        }
        fail(ParseError::Kind::Syntax, pos_, "expected operand");
    }

    int parse_number()
    {
        std::size_t at = pos_;
        char* end = nullptr;
        std::string tail(src_.substr(pos_));
        double v = std::strtod(tail.c_str(), &end);
        std::size_t used = static_cast<std::size_t>(end - tail.c_str());
        if (used == 0)
            fail(ParseError::Kind::Syntax, at, "malformed number");
        pos_ += used;
        Node n;
        n.op = Op::Const;
        n.value = v;
        n.offset = at;
        return add(n);
    }

    int parse_identifier(const std::string& name, std::size_t at)
    {
        if (name == "pi") {
            Node n;
            n.op = Op::Const;
            n.value = std::numbers::pi;
            n.offset = at;
            return add(n);
        }
        if (name == "sin" || name == "cos" || name == "exp") {
            if (!accept('('))
                fail(ParseError::Kind::Syntax, pos_, "expected '(' after " + name);
            int arg = parse_sum();
            if (!accept(')'))
                fail(ParseError::Kind::Syntax, pos_, "expected ')'");
            Op op = name == "sin" ? Op::Sin : name == "cos" ? Op::Cos : Op::Exp;
            return binary(op, arg, -1, at);
        }
        if (name.size() >= 2 && name[0] == 'x'
            && name.find_first_not_of("0123456789", 1) == std::string::npos) {
            int idx = std::stoi(name.substr(1));
            if (idx < dim_) {
                Node n;
                n.op = Op::Var;
                n.index = idx;
                n.offset = at;
                return add(n);
            }
        }
        fail(ParseError::Kind::UnknownIdentifier, at, "'" + name + "'");
    }

    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;
};

template <class T>
T evaluate(const std::vector<Node>& nodes, int id, const std::vector<T>& x)
{
    using std::cos;
    using std::exp;
    using std::sin;
    using detail::cos;
    using detail::exp;
    using detail::primal;
    using detail::sin;

    const Node& n = nodes[static_cast<std::size_t>(id)];
    switch (n.op) {
    case Op::Const: return T(n.value);
    case Op::Var: return x[static_cast<std::size_t>(n.index)];
    case Op::Add: return evaluate(nodes, n.lhs, x) + evaluate(nodes, n.rhs, x);
    case Op::Sub: return evaluate(nodes, n.lhs, x) - evaluate(nodes, n.rhs, x);
    case Op::Mul: return evaluate(nodes, n.lhs, x) * evaluate(nodes, n.rhs, x);
    case Op::Div: {
        T den = evaluate(nodes, n.rhs, x);
        if (primal(den) == 0.0)
            throw Error("expr", "division by zero at offset " + std::to_string(n.offset));
        return evaluate(nodes, n.lhs, x) / den;
    }
    case Op::Neg: return -evaluate(nodes, n.lhs, x);
    case Op::Pow: {
        T base = evaluate(nodes, n.lhs, x);
        int e = n.index < 0 ? -n.index : n.index;
        T acc(1.0);
        for (int i = 0; i < e; ++i)
            acc = acc * base;
        if (n.index < 0) {
            if (primal(acc) == 0.0)
                throw Error("expr", "division by zero at offset " + std::to_string(n.offset));
            acc = T(1.0) / acc;
        }
        return acc;
    }
    case Op::Sin: return sin(evaluate(nodes, n.lhs, x));
    case Op::Cos: return cos(evaluate(nodes, n.lhs, x));
    case Op::Exp: return exp(evaluate(nodes, n.lhs, x));
    }
    return T(0.0);
}

bool contains_var(const std::vector<Node>& nodes, int id, const std::vector<bool>& which)
{
    if (id < 0)
        return false;
    const Node& n = nodes[static_cast<std::size_t>(id)];
    if (n.op == Op::Var)
        return which[static_cast<std::size_t>(n.index)];
    return contains_var(nodes, n.lhs, which) || contains_var(nodes, n.rhs, which);
}

// c0 + sum_i coeff[i] * x_i
struct Affine
{
    double c0 = 0.0;
    std::vector<double> coeff;
};

std::optional<Affine> affine_form(const std::vector<Node>& nodes, int id, int dim)
{
    const Node& n = nodes[static_cast<std::size_t>(id)];
    std::vector<bool> all(static_cast<std::size_t>(dim), true);
    if (!contains_var(nodes, id, all)) {
        Affine a;
        a.coeff.assign(static_cast<std::size_t>(dim), 0.0);
        a.c0 = evaluate<double>(nodes, id, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
        return a;
    }
    auto scale = [](Affine a, double s) {
        a.c0 *= s;
        for (double& c : a.coeff)
            c *= s;
        return a;
    };
    switch (n.op) {
    case Op::Var: {
        Affine a;
        a.coeff.assign(static_cast<std::size_t>(dim), 0.0);
        a.coeff[static_cast<std::size_t>(n.index)] = 1.0;
        return a;
    }
    case Op::Neg: {
        auto a = affine_form(nodes, n.lhs, dim);
        if (!a)
            return std::nullopt;
        return scale(*a, -1.0);
    }
    case Op::Add:
    case Op::Sub: {
        auto a = affine_form(nodes, n.lhs, dim);
        auto b = affine_form(nodes, n.rhs, dim);
        if (!a || !b)
            return std::nullopt;
        double s = n.op == Op::Add ? 1.0 : -1.0;
        a->c0 += s * b->c0;
        for (std::size_t i = 0; i < a->coeff.size(); ++i)
            a->coeff[i] += s * b->coeff[i];
        return a;
    }
    case Op::Mul: {
        auto a = affine_form(nodes, n.lhs, dim);
        auto b = affine_form(nodes, n.rhs, dim);
        if (!a || !b)
            return std::nullopt;
        bool a_const = std::all_of(a->coeff.begin(), a->coeff.end(), [](double c) { return c == 0.0; });
        bool b_const = std::all_of(b->coeff.begin(), b->coeff.end(), [](double c) { return c == 0.0; });
        if (a_const)
            return scale(*b, a->c0);
        if (b_const)
            return scale(*a, b->c0);
        return std::nullopt;
    }
    case Op::Div: {
        std::vector<bool> allv(static_cast<std::size_t>(dim), true);
        if (contains_var(nodes, n.rhs, allv))
            return std::nullopt;
        auto a = affine_form(nodes, n.lhs, dim);
        double den = evaluate<double>(nodes, n.rhs, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
        if (!a || den == 0.0)
            return std::nullopt;
        return scale(*a, 1.0 / den);
    }
    case Op::Pow:
        if (n.index == 1)
            return affine_form(nodes, n.lhs, dim);
        return std::nullopt;
    default: return std::nullopt;
    }
}

void check_periodicity(const std::vector<Node>& nodes, int id, int dim, const std::vector<bool>& periodic)
{
    if (id < 0)
        return;
    const Node& n = nodes[static_cast<std::size_t>(id)];
    if (n.op == Op::Var) {
        if (periodic[static_cast<std::size_t>(n.index)])
            throw ParseError(ParseError::Kind::Periodicity, n.offset,
                             "periodic variable x" + std::to_string(n.index)
                                 + " may only appear as sin/cos(2*pi*k*x" + std::to_string(n.index) + " + c)");
        return;
    }
    if ((n.op == Op::Sin || n.op == Op::Cos) && contains_var(nodes, n.lhs, periodic)) {
        auto aff = affine_form(nodes, n.lhs, dim);
        if (!aff)
            throw ParseError(ParseError::Kind::Periodicity, n.offset,
                             "argument of trigonometric function is not affine in its periodic variables");
        for (int i = 0; i < dim; ++i) {
            if (!periodic[static_cast<std::size_t>(i)])
                continue;
            double k = aff->coeff[static_cast<std::size_t>(i)] / (2.0 * std::numbers::pi);
            if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, std::abs(k)))
                throw ParseError(ParseError::Kind::Periodicity, n.offset,
                                 "coefficient of x" + std::to_string(i) + " is not an integer multiple of 2*pi");
        }
        // Non-periodic variables inside the argument are unrestricted.
        return;
    }
    check_periodicity(nodes, n.lhs, dim, periodic);
    check_periodicity(nodes, n.rhs, dim, periodic);
}

} // namespace

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& what)
    : Error("expr", kind_label(kind) + " at offset " + std::to_string(offset) + ": " + what),
      kind_(kind),
      offset_(offset)
{
}

ScalarFunction ScalarFunction::parse(std::string_view source, int dim, std::vector<bool> periodic)
{
    if (dim <= 0)
        throw Error("expr", "dimension must be positive");
    if (periodic.empty())
        periodic.assign(static_cast<std::size_t>(dim), false);
    if (static_cast<int>(periodic.size()) != dim)
        throw Error("expr", "periodic flag count does not match dimension");

    Parser parser(source, dim);
    int root = parser.parse_all();
    check_periodicity(parser.nodes, root, dim, periodic);

    ScalarFunction f;
    f.nodes_ = std::make_shared<const std::vector<Node>>(std::move(parser.nodes));
    f.root_ = root;
    f.dim_ = dim;
    f.periodic_ = std::move(periodic);
    f.source_ = std::string(source);
    return f;
}

double ScalarFunction::eval(const Vector& x) const
{
    std::vector<double> xs(x.data(), x.data() + x.size());
    return sign_ * evaluate<double>(*nodes_, root_, xs);
}

Vector ScalarFunction::grad(const Vector& x) const
{
    using D = detail::Dual<double>;
    Vector g(dim_);
    std::vector<D> xs(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
        for (int k = 0; k < dim_; ++k)
            xs[static_cast<std::size_t>(k)] = D(x[k], k == i ? 1.0 : 0.0);
        g[i] = sign_ * evaluate<D>(*nodes_, root_, xs).d;
    }
    return g;
}

void ScalarFunction::grad_hessian(const Vector& x, Vector& g, Matrix& h) const
{
    using D = detail::Dual<double>;
    using DD = detail::Dual<D>;
    g.resize(dim_);
    h.resize(dim_, dim_);
    std::vector<DD> xs(static_cast<std::size_t>(dim_));
    for (int a = 0; a < dim_; ++a) {
        for (int b = a; b < dim_; ++b) {
            for (int k = 0; k < dim_; ++k)
                xs[static_cast<std::size_t>(k)] = DD(D(x[k], k == a ? 1.0 : 0.0), D(k == b ? 1.0 : 0.0, 0.0));
            DD r = evaluate<DD>(*nodes_, root_, xs);
            h(a, b) = sign_ * r.d.d;
            h(b, a) = h(a, b);
            if (b == a)
                g[a] = sign_ * r.v.d;
        }
    }
}

Matrix ScalarFunction::hessian(const Vector& x) const
{
    Vector g;
    Matrix h;
    grad_hessian(x, g, h);
    return h;
}

ScalarFunction ScalarFunction::negated() const
{
    ScalarFunction f = *this;
    f.sign_ = -sign_;
    return f;
}

std::string ScalarFunction::source() const
{
    return sign_ > 0 ? source_ : "-(" + source_ + ")";
}

} // namespace morsedisk
