#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dualq {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Stable machine-readable category, used by the CLI's structured errors.
    virtual const char* kind() const noexcept { return "error"; }
};

/// Precondition on an argument violated (bad sizes, bad k, empty inputs).
class ArgumentError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "argument_error"; }
};

/// Operation invoked on an object in the wrong state (unlabeled data, dimension mismatch).
class StateError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "state_error"; }
};

/// Duplicate ids or other cross-record consistency failures.
class IntegrityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "integrity_error"; }
};

/// Malformed input. Carries the 1-based line number when parsing line-oriented files.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
        : Error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}
    const char* kind() const noexcept override { return "parse_error"; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    std::optional<std::size_t> line_;
};

/// Raised when an LLM response cannot be mapped onto a label; keeps the raw text.
class LabelParseError : public ParseError {
public:
    explicit LabelParseError(std::string raw)
        : ParseError("cannot map response to a class: \"" + raw + "\""), raw_(std::move(raw)) {}
    const char* kind() const noexcept override { return "label_parse_error"; }
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class NumericalError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numerical_error"; }
};

/// Failure inside a pluggable backend (lemmatizer, embedding model, trainer).
class BackendError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "backend_error"; }
};

/// Network-level failure talking to a remote service, after retries.
class TransportError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "transport_error"; }
};

} // namespace dualq
