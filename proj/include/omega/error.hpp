#pragma once

#include <stdexcept>
#include <string>

namespace omega {

// Bad input: parameters outside the model's domain, malformed config.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical procedure did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ValidationError(what);
}

} // namespace omega
