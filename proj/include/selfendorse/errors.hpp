#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selfendorse {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (n < 2, M > N, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// The backend could not be reached after all retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The backend answered, but the reply could not be understood.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// The scripted backend has no rule matching the request.
class ScriptMiss : public Error {
public:
    using Error::Error;
};

class EmptyDecomposition : public Error {
public:
    using Error::Error;
};

class EmptyCorpus : public Error {
public:
    using Error::Error;
};

class MissingVerdicts : public Error {
public:
    using Error::Error;
};

class NoCandidates : public Error {
public:
    using Error::Error;
};

class NoExtractableAnswers : public Error {
public:
    using Error::Error;
};

class JudgeUnavailable : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Input file could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message), line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace selfendorse
