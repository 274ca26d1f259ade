#pragma once

#include <stdexcept>
#include <string>

namespace noisegate {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (non-finite value, negative step, ...).
class invalid_input : public error {
public:
    using error::error;
};

/// Gate thresholds are inconsistent (b_d >= b_u).
class invalid_config : public error {
public:
    using error::error;
};

/// b_u == i_u: the drive sits exactly on the threshold and no regime applies.
class degenerate_margin : public error {
public:
    using error::error;
};

/// Sub-threshold model requested for a supra-threshold drive, or vice versa.
class wrong_regime : public error {
public:
    using error::error;
};

/// Truncated Gaussian requested on a region of negligible probability.
class degenerate_truncation : public error {
public:
    using error::error;
};

/// Adaptive quadrature did not reach the requested tolerance.
class quadrature_failure : public error {
public:
    quadrature_failure(const std::string& what, double achieved_rel_error)
        : error(what + " (achieved relative error " + std::to_string(achieved_rel_error) + ")"),
          achieved_rel_error_(achieved_rel_error) {}

    double achieved_rel_error() const noexcept { return achieved_rel_error_; }

private:
    double achieved_rel_error_;
};

/// An internal numerical cross-check disagreed beyond its tolerance.
class numerical_failure : public error {
public:
    using error::error;
};

} // namespace noisegate
