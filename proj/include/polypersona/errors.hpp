#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polypersona {

// Base of every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    // 1-based line number for line-oriented inputs, 0 when not applicable.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    using Error::Error;
};

class EmptyPoolError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class EmptyFileError : public Error {
public:
    using Error::Error;
};

class InsufficientPersonasError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class MissingDomainError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class EndpointError : public Error {
public:
    EndpointError(const std::string& what, int status = 0) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class AuthError : public EndpointError {
public:
    using EndpointError::EndpointError;
};

class TimeoutExhaustedError : public Error {
public:
    using Error::Error;
};

}  // namespace polypersona
