#pragma once

#include <stdexcept>
#include <string>

namespace opband {

// Exit codes used by the CLI; library exceptions carry the matching category.
enum class ExitCode : int {
    ok = 0,
    property_failure = 1,
    usage = 2,
    numerical = 3,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

// Invalid arguments, mismatched shapes, unsupported configurations.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ExitCode::usage, what) {}
};

// Singular/ill-conditioned systems, overflow, non-convergence.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, double value = 0.0)
        : Error(ExitCode::numerical, what), value_(value) {}

    // Last iterate, condition estimate or offending value, depending on the thrower.
    double value() const noexcept { return value_; }

private:
    double value_;
};

} // namespace opband
