#pragma once

#include <stdexcept>
#include <string>

namespace triad {

// Error categories double as CLI exit codes (see tools/triad_cli.cpp).
enum class ErrorCategory {
    config = 2,
    format = 3,
    integrity = 4,
    argument = 5,
    budget = 6,
    scoring = 7,
    generation = 8,
    io = 9,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& what) : std::runtime_error(what), category_(cat) {}
    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorCategory::config, w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(ErrorCategory::format, w) {}
};
struct IntegrityError : Error {
    explicit IntegrityError(const std::string& w) : Error(ErrorCategory::integrity, w) {}
};
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& w) : Error(ErrorCategory::argument, w) {}
};
struct BudgetError : Error {
    explicit BudgetError(const std::string& w) : Error(ErrorCategory::budget, w) {}
};
struct ScoringError : Error {
    explicit ScoringError(const std::string& w) : Error(ErrorCategory::scoring, w) {}
};
struct GenerationError : Error {
    bool retryable = false;
    GenerationError(const std::string& w, bool retry = false)
        : Error(ErrorCategory::generation, w), retryable(retry) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorCategory::io, w) {}
};

}  // namespace triad
