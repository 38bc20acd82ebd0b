// SPDX-License-Identifier: Apache-2.0
//
// Common value types and error classes shared by every mmw module.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmw {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;

    double norm() const { return std::hypot(x, y); }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A matrix that must be inverted is (numerically) rank deficient.
class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// Pilot tone set yields a time/frequency conversion matrix too ill-conditioned to invert.
class IllConditionedPilots : public Error {
public:
    using Error::Error;
};

/// Not enough distinct pilot offsets to separate every transmitter.
class PilotCapacityError : public Error {
public:
    using Error::Error;
};

/// Scenario configuration violates one or more invariants; all violations are listed.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid scenario configuration:";
        for (const auto& s : v) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }
    std::vector<std::string> violations_;
};

} // namespace mmw
