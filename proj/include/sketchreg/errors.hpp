#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sketchreg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file: ragged row, non-numeric cell, bad token.
/// Row/column indices are 1-based physical file positions (0 = n/a).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t col)
        : Error(what + " (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
          row(row), col(col) {}
    std::size_t row = 0;
    std::size_t col = 0;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Shape mismatch between operands.
class DimError : public Error {
public:
    using Error::Error;
};

/// Gram matrix singular and no pseudo-inverse fallback requested.
class SingularError : public Error {
public:
    using Error::Error;
};

/// An operation required Rank(X) >= d (or m >= p) and the data cannot support it.
class RankError : public Error {
public:
    using Error::Error;
};

/// Iterative or decomposition-based numeric step failed to converge / stay consistent.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace sketchreg
