#pragma once

#include <stdexcept>
#include <string>

namespace censnv {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid loss / training / search configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (dimensions, empty sets, calendar gaps).
class InputError : public Error {
public:
    using Error::Error;
};

// Problem too large for the requested solver path.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
        : Error(what), epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

// A metric cannot be computed from the given data (e.g. no demand column).
class EvaluationError : public Error {
public:
    using Error::Error;
};

// CSV / text parsing failure. `row()` is 1-based line number, 0 if unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace censnv
