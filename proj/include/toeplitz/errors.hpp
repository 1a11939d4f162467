#ifndef TOEPLITZ_ERRORS_HPP
#define TOEPLITZ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace toeplitz {

// Bad user input: malformed polynomials, violated preconditions, unusable files.
// The CLI maps this to exit code 2.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A verdict went the wrong way: a strict-mode condition failed, a proven bound
// was violated (implementation bug), a verified invariant does not hold.
// The CLI maps this to exit code 1.
struct verdict_error : std::runtime_error {
    explicit verdict_error(const std::string& msg) : std::runtime_error(msg) {}
};

// An exact computation was requested beyond its enumeration/materialization
// budget. Callers may retry with a sampled fallback where one exists.
struct budget_error : std::runtime_error {
    explicit budget_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace toeplitz

#endif
