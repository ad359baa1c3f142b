#pragma once

#include <stdexcept>
#include <string>

namespace mlret {

// Base for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. Message carries "path:line: what".
class parse_error : public error {
public:
    parse_error(const std::string& path, std::size_t line, const std::string& what)
        : error(path + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

// Well-formed input that violates a data contract (duplicate IDs, bad ranks, ...).
class data_error : public error {
public:
    using error::error;
};

// Invalid configuration or CLI usage.
class config_error : public error {
public:
    using error::error;
};

// Failure talking to a text/embedding/logit provider. Retryable failures are
// transport-level (timeouts, 5xx); contract violations are not.
class provider_error : public error {
public:
    provider_error(const std::string& what, bool retryable)
        : error(what), retryable_(retryable) {}

    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

}  // namespace mlret
