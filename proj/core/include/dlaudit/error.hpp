#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlaudit {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad argument, empty input).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Configuration or manifest problem. Maps to CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable or unopenable input file.
class IoError : public Error {
public:
    using Error::Error;
};

class NonPositiveRtt : public PreconditionError {
public:
    explicit NonPositiveRtt(double rtt_ms);
    double rtt_ms;
};

class UnmappedDestination : public ConfigError {
public:
    explicit UnmappedDestination(std::string country);
    std::string country;
};

class UnresolvedDomain : public Error {
public:
    explicit UnresolvedDomain(std::string domain);
    std::string domain;
};

class MissingTruth : public Error {
public:
    explicit MissingTruth(std::string key);
    std::string key;
};

class ZeroTotal : public PreconditionError {
public:
    explicit ZeroTotal(std::string country);
    std::string country;
};

class EmptyInput : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Per-record parse failure; never thrown across a batch, only collected.
struct ParseError {
    std::size_t line = 0;  // 1-based
    std::string reason;

    friend bool operator==(const ParseError&, const ParseError&) = default;
};

}  // namespace dlaudit
