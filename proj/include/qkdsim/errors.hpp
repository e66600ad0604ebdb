#pragma once

#include <stdexcept>
#include <string>

namespace qkdsim {

/// Raised when a configuration value violates its documented range or shape.
/// `field` names the offending entry (dotted path for nested records).
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Raised when an input file cannot be decoded at all (bad JSON).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on filesystem failures; carries the offending path in the message.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qkdsim
