#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gebs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scheme or configuration parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Mismatched lengths or dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A weight scheme has no enumerable (or no small enough) support.
class UnsupportedScheme : public Error {
public:
    using Error::Error;
};

/// A model without the structure an operation needs (e.g. residuals).
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

/// Parameter outside the model domain at a given observation.
class DomainError : public Error {
public:
    DomainError(std::size_t index, const std::string& what)
        : Error(what + " (observation " + std::to_string(index) + ")"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(double condition)
        : Error("singular Jacobian (condition estimate " + std::to_string(condition) + ")"),
          condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class EmptyRootSet : public Error {
public:
    using Error::Error;
};

class InsufficientSample : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class WriteError : public Error {
public:
    using Error::Error;
};

}  // namespace gebs
