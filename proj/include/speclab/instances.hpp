#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "speclab/operator.hpp"
#include "speclab/rng.hpp"

namespace speclab {

/// Symmetric matrix with standard normal entries on and above the diagonal.
Eigen::MatrixXd random_symmetric(CounterStream& stream, int n);

/// Diagonal u^2 with `rank` entries drawn from [0.2, 1] on distinct random coordinates.
Eigen::VectorXd random_coupling(CounterStream& stream, int n, int rank);

/// Random unit vector in the discrete inner product.
Eigen::VectorXd random_unit_vector(CounterStream& stream, int n, double cell_volume = 1.0);

/// Abstract family H_0 + omega u^2 keyed by (seed, index).
Family random_family(std::uint64_t seed, std::uint64_t index, int n, int rank);

}  // namespace speclab
