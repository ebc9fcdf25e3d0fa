#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace morsedisk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base error. Every error carries the name of the module that raised it so
/// the CLI can report provenance.
class Error : public std::runtime_error
{
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module))
    {
    }

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Degenerate critical point found where a Morse function was required.
class NonMorseError : public Error
{
public:
    NonMorseError(const std::string& what, Vector point)
        : Error("geometry", what), point_(std::move(point))
    {
    }

    const Vector& point() const noexcept { return point_; }

private:
    Vector point_;
};

/// Integration produced a non-finite state.
class DivergenceError : public Error
{
public:
    explicit DivergenceError(const std::string& what) : Error("geometry", what) {}
};

/// Backward flow left the trust region; membership cannot be decided.
class InconclusiveError : public Error
{
public:
    explicit InconclusiveError(const std::string& what) : Error("geometry", what) {}
};

} // namespace morsedisk
