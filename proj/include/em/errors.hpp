#pragma once

#include <stdexcept>
#include <string>

namespace em {

// Malformed or out-of-contract input: bad JSON, dimension mismatch, parameter
// out of range, violated construction invariant. CLI maps this to exit code 2.
struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Input is well-formed but a protocol refuses to run on it (e.g. the working
// state fails a marginal check the estimation formula relies on). Exit code 3.
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace em
