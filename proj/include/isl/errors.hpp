#pragma once

#include <stdexcept>
#include <string>

namespace isl {

// Dimension mismatch between a model and its inputs or parameters.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A non-finite value appeared; `op` names the operation that produced it.
class NumericError : public std::runtime_error {
public:
    NumericError(std::string op, const std::string& what)
        : std::runtime_error(what), op_(std::move(op)) {}
    const std::string& op() const noexcept { return op_; }

private:
    std::string op_;
};

class IngestionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace isl
