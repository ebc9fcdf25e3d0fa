#pragma once

#include "morsedisk/common.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace morsedisk {

/// Raised by ScalarFunction::parse. offset() is the byte position in the
/// source text where the problem was detected.
class ParseError : public Error
{
public:
    enum class Kind { Syntax, UnknownIdentifier, Periodicity };

    ParseError(Kind kind, std::size_t offset, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

namespace expr_detail {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };

struct Node
{
    Op op = Op::Const;
    int lhs = -1;
    int rhs = -1;
    double value = 0.0;  // Const
    int index = 0;       // Var: variable index; Pow: integer exponent
    std::size_t offset = 0;
};

} // namespace expr_detail

/// A scalar function on R^n or T^n given by an expression tree.
///
/// Derivatives are computed with nested forward-mode dual numbers, so they
/// are exact up to rounding. Instances are immutable and cheap to copy (the
/// node table is shared), and may be evaluated concurrently.
///
/// Variables declared periodic have period 1 and may only occur inside
/// sin/cos whose argument is affine in them with coefficients in 2*pi*Z.
class ScalarFunction
{
public:
    ScalarFunction() = default;

    /// `periodic` may be empty (no periodic variables) or have `dim` entries.
    static ScalarFunction parse(std::string_view source, int dim,
                                std::vector<bool> periodic = {});

    double eval(const Vector& x) const;
    Vector grad(const Vector& x) const;
    Matrix hessian(const Vector& x) const;

    /// Gradient and Hessian from the same sweep of second-order duals.
    void grad_hessian(const Vector& x, Vector& g, Matrix& h) const;

    /// The function -f, sharing the same expression tree.
    ScalarFunction negated() const;

    int dim() const noexcept { return dim_; }
    bool periodic(int i) const { return periodic_.at(static_cast<std::size_t>(i)); }
    const std::vector<bool>& periodic_flags() const noexcept { return periodic_; }
    double sign() const noexcept { return sign_; }

    /// Source text; negated functions render as "-(source)".
    std::string source() const;

private:
    std::shared_ptr<const std::vector<expr_detail::Node>> nodes_;
    int root_ = -1;
    int dim_ = 0;
    std::vector<bool> periodic_;
    std::string source_;
    double sign_ = 1.0;
};

} // namespace morsedisk
