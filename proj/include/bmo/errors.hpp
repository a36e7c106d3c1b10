#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bmo {

// Malformed or out-of-range input. Maps to CLI exit status 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Materialization would exceed the caller's piece budget. Exit status 3.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, std::size_t required)
        : std::runtime_error(what), required_(required) {}
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

// Broken internal invariant (e.g. runaway recursion in an expression DAG).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace bmo
