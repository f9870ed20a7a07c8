#pragma once

#include <stdexcept>
#include <string>

namespace qexp {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: invalid flags, malformed config fields, unsupported options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent data files (corpus, topics, qrels, runs, index).
class DataError : public Error {
public:
    using Error::Error;
};

/// A text-generation endpoint could not produce a completion.
class EndpointError : public Error {
public:
    EndpointError(std::string request_id, const std::string& what)
        : Error("request " + request_id + ": " + what), request_id_(std::move(request_id)) {}

    const std::string& request_id() const noexcept { return request_id_; }

private:
    std::string request_id_;
};

}  // namespace qexp
