#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace countreg {

// Base for everything the library throws on bad input or failed numerics.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing/extra/misordered columns, design-matrix column mismatches.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A data row that cannot be parsed. row is 1-based, counting the header as row 1.
class ParseError : public Error {
public:
    /// row is the 1-based line number in the file (the header is line 1).
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::vector<std::string> dependent)
        : Error(what), dependent_(std::move(dependent)) {}
    const std::vector<std::string>& dependent_columns() const noexcept { return dependent_; }

private:
    std::vector<std::string> dependent_;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class NestingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace countreg
