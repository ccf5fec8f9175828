#pragma once

#include <stdexcept>
#include <string>

namespace driftpath {

// Input data problems: unreadable files, malformed rows, contract violations
// in user-supplied datasets or configuration values.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A query referenced a cell that is not part of the matrix state set.
class UnknownStateError : public std::runtime_error {
public:
    explicit UnknownStateError(const std::string& what) : std::runtime_error(what) {}
};

// No path exists between the requested states. The search is exact, so this
// is a definitive answer, not a timeout.
class DisconnectedError : public std::runtime_error {
public:
    explicit DisconnectedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace driftpath
