#pragma once

#include <stdexcept>
#include <string>

namespace merging {

// Invalid input: bad configuration, malformed documents, violated
// preconditions. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(module) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

// A parse failure inside a structured document; `location` is a JSON pointer
// or byte offset description.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& module, const std::string& location, const std::string& what)
        : ValidationError(module, "parse error at " + location + ": " + what), location_(location) {}

    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

// A numerical or algorithmic failure after inputs were accepted (bracket
// certification lost, iteration budget exhausted, negative predictable
// increment). The CLI maps these to exit code 2.
class ComputationError : public std::runtime_error {
public:
    ComputationError(const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(module) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

}  // namespace merging
