#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace teleop {

/// Joint-space vector: radians, one entry per hand DOF.
using JointPose = Eigen::VectorXd;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data is malformed or violates a documented contract (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix sizes disagree with the hand's DOF.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A file does not follow its declared schema.
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Subspace axes, always in this order in vectors, files and wire messages.
enum class Axis : int { alpha = 0, sigma = 1, epsilon = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::alpha, Axis::sigma, Axis::epsilon};

constexpr int index(Axis a) { return static_cast<int>(a); }

constexpr std::string_view axis_name(Axis a)
{
    switch (a) {
    case Axis::alpha: return "alpha";
    case Axis::sigma: return "sigma";
    case Axis::epsilon: return "epsilon";
    }
    return "?";
}

void require_dof(const JointPose& q, int dof, std::string_view what);
void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, std::string_view what);

} // namespace teleop
