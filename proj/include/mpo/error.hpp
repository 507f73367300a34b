#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed input row. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// Input that parses but violates a domain constraint (negative weight, alpha outside (0,1), ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Unknown node id or address.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Mismatched inputs between pipeline stages (feature sets over different nodes, missing coverage).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class OracleError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class AdapterError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mpo
