#pragma once

#include <stdexcept>
#include <string>

namespace cma {

// Error categories used across the library. CLI maps execution errors to
// exit code 1 and certificate failures to exit code 2.
enum class errc {
    syntax,        // expression text malformed (carries a position)
    non_real,      // defining expression not real-valued
    collar,        // point outside the collar / projection not single-valued
    convergence,   // Newton or extrapolation did not converge
    degenerate,    // degenerate input (zero gradient, singular Jacobian, ...)
    precision,     // jet order or scalar precision insufficient
    config         // bad configuration value
};

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

// Syntax errors keep the offset into the source text so the CLI can point at it.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t position)
        : Error(errc::syntax, what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

} // namespace cma
