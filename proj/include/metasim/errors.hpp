#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace metasim {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-domain tumor state handed to a pure model function.
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// Parameter or configuration validation failure. `path()` locates the
/// offending entry (JSON-pointer style, e.g. "/params/b") when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string path = {})
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// The coupled system produced a non-finite value.
class IntegrationBlowupError : public Error {
public:
    explicit IntegrationBlowupError(double t)
        : Error("integration blowup at t = " + std::to_string(t)), time_(t) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Input outside the domain an analysis routine is defined on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The linear-case spectral routines were called on a nonlinear model.
class MisuseError : public Error {
public:
    using Error::Error;
};

class NoRootError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace metasim
