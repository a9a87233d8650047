#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bstree {

// Raised when a stream file or query batch fails to parse; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Stream contract violation: points arrived with non-increasing sequence numbers.
class StreamOrderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A word or query was evaluated against a configuration it was not produced with.
class ConfigMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller inserted a word outside the MBR's range.
class RangeViolationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// An MBR range with the same low bound is already present in the tree.
class DuplicateRangeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Dataset-level problems: unreadable files, too few points, malformed batches.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bstree
