#pragma once

#include <stdexcept>
#include <string>

namespace opasis {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line (0 when unknown) and the
/// offending field name.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
        : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(const std::string& what, std::size_t line, const std::string& field) {
        std::string msg;
        if (line > 0) msg += "line " + std::to_string(line) + ": ";
        if (!field.empty()) msg += "field '" + field + "': ";
        return msg + what;
    }

    std::size_t line_;
    std::string field_;
};

/// A network or state that violates a structural invariant.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Degenerate topology or singular system encountered during power flow.
class StructuralError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

/// Enumeration or simulation exceeded its configured budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// An operation was called on data it is not defined for.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace opasis
