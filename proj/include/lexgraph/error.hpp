#pragma once

#include <stdexcept>
#include <string>

namespace lexgraph {

// Base for every error the engine reports to callers. Anything else escaping
// the library is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller supplied something the contract forbids (bad dimension, zero vector,
// k outside [0,1], ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A word, document or session that does not exist.
class NotFound : public Error {
public:
    NotFound(std::string what, std::string key)
        : Error(what + " not found: " + key), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// Operation not allowed in the object's current state (stepping a finished
// session, ranking an unfinished one).
class StateError : public Error {
public:
    using Error::Error;
};

// Malformed corpus input. `location` is "file: byte offset N" or
// "file: line N" for the first bad record.
class CorpusFormatError : public Error {
public:
    CorpusFormatError(std::string location, const std::string& reason)
        : Error(location + ": " + reason), location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

}  // namespace lexgraph
