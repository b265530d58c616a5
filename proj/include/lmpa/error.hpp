#pragma once

#include <stdexcept>
#include <string>

namespace lmpa {

/// Base class of every error raised by the analysis library. `kind()` is a
/// stable machine-readable tag used in structured error reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string &message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string &kind() const { return kind_; }

private:
    std::string kind_;
};

class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, const std::string &message)
        : Error("SyntaxError", std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

#define LMPA_DEFINE_ERROR(Name)                                                                    \
    class Name : public Error {                                                                    \
    public:                                                                                        \
        explicit Name(const std::string &message) : Error(#Name, message) {}                       \
    }

LMPA_DEFINE_ERROR(TypeError);
LMPA_DEFINE_ERROR(DuplicateName);
LMPA_DEFINE_ERROR(UnknownCallee);
LMPA_DEFINE_ERROR(MissingSummary);
LMPA_DEFINE_ERROR(UndeclaredField);
LMPA_DEFINE_ERROR(UnknownNode);
LMPA_DEFINE_ERROR(UnresolvedArg);
LMPA_DEFINE_ERROR(UnboundParam);
LMPA_DEFINE_ERROR(InvalidPath);
LMPA_DEFINE_ERROR(FixtureMissing);
LMPA_DEFINE_ERROR(TransportError);
LMPA_DEFINE_ERROR(TimeoutError);
LMPA_DEFINE_ERROR(SchemaViolation);
LMPA_DEFINE_ERROR(RecursiveProgram);

#undef LMPA_DEFINE_ERROR

} // namespace lmpa
