#pragma once

#include <stdexcept>
#include <string>

namespace aggjoin {

// Error taxonomy shared by the whole engine. The CLI maps kinds to exit
// codes (see tools/cli.cpp): usage=2, parse/ingest=3, not-applicable=4,
// budget=5, oracle-mismatch=6, anything else=1.
enum class ErrorKind {
    Usage,
    Io,
    Ingest,
    Parse,
    NotSupported,
    Resolve,
    Constraint,
    Cyclic,
    NotApplicable,
    Plan,
    Eval,
    Overflow,
    Budget,
    OracleMismatch,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

const char* to_string(ErrorKind kind);

} // namespace aggjoin
