#pragma once

#include <stdexcept>
#include <string>

namespace trcalc {

/// Rejected input: bad parameters, violated preconditions, unbounded requests.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Oracle results changed when the truncation was enlarged.
class TruncationInstability : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A transition map was requested where one side is the trivial group.
class DegenerateOrbit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Images of transition maps failed to stabilize past the proven bound.
class MittagLefflerViolation : public std::runtime_error {
public:
    MittagLefflerViolation(const std::string& what, std::string f, std::string f_prime)
        : std::runtime_error(what), f(std::move(f)), f_prime(std::move(f_prime))
    {
    }
    std::string f;
    std::string f_prime;
};

/// The probe window is too short to decide between a finite and a Z_p limit.
class ClassificationRefused : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace trcalc
