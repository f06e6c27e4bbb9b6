#pragma once

#include <stdexcept>
#include <string>

namespace ppas {

// Base class for all engine errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input / construction problems (bad tau, malformed scheme, bad config values).
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// Theta series tail bound exceeds the accuracy target at the requested radius.
struct TruncationInsufficientError : Error {
    explicit TruncationInsufficientError(const std::string& msg) : Error(msg) {}
};

// A singular value sits inside the ambiguity band around the rank threshold,
// even after refinement.
struct RankAmbiguousError : Error {
    explicit RankAmbiguousError(const std::string& msg) : Error(msg) {}
};

// Multistart solve exhausted its budget with a residual plateau between the
// accept and reject tolerances.
struct NonConvergentError : Error {
    explicit NonConvergentError(const std::string& msg) : Error(msg) {}
};

struct CoincidentLinesError : Error {
    explicit CoincidentLinesError(const std::string& msg) : Error(msg) {}
};

struct CalibrationInconsistentError : Error {
    explicit CalibrationInconsistentError(const std::string& msg) : Error(msg) {}
};

struct BudgetExhaustedError : Error {
    explicit BudgetExhaustedError(const std::string& msg) : Error(msg) {}
};

struct UnknownSuiteError : Error {
    explicit UnknownSuiteError(const std::string& msg) : Error(msg) {}
};

struct UnsupportedJetError : Error {
    explicit UnsupportedJetError(const std::string& msg) : Error(msg) {}
};

struct UnclassifiedProfileError : Error {
    explicit UnclassifiedProfileError(const std::string& msg) : Error(msg) {}
};

}  // namespace ppas
