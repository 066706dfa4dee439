#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace qnet {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Count = std::int64_t;
using CountVector = Vector<Count>;
using RealVector = Vector<double>;

// Entries in {-1, 0, +1}.
using IncidenceMatrix = Matrix<int>;

}  // namespace qnet
