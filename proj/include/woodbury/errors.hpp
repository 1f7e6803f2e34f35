#pragma once

#include <stdexcept>
#include <string>

namespace woodbury {

// Shape or conformability violation (multiplying a 3x2 by a 4x4, etc.).
class dimension_error : public std::invalid_argument {
public:
    explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

// A stated hypothesis of an operation does not hold for the given input
// (non-idempotent input to a projector routine, range inclusion failing
// for an update formula, infeasible generator parameters, ...).
class precondition_error : public std::invalid_argument {
public:
    explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical breakdown: decomposition non-convergence, a matrix that is
// singular past the configured condition ceiling, non-finite input.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable, unparsable, or schema-violating input file.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace woodbury
