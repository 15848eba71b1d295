#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advshift {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Zero-norm vectors, undefined directions, empty sample sets.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A particle update produced a non-finite value.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::size_t particle, long step)
        : Error(what), particle_(particle), step_(step) {}

    std::size_t particle() const noexcept { return particle_; }
    long step() const noexcept { return step_; }

private:
    std::size_t particle_;
    long step_;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace advshift
