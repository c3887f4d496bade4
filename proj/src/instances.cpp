#include "speclab/instances.hpp"

#include <numeric>
#include <string>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

Eigen::MatrixXd random_symmetric(CounterStream& stream, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a(i, j) = a(j, i) = stream.normal();
  return a;
}

Eigen::VectorXd random_coupling(CounterStream& stream, int n, int rank) {
  if (rank < 0 || rank > n) throw ConfigError("coupling rank must lie in [0, n]");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::VectorXd u2 = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < rank; ++r) {
    const int j = r + static_cast<int>(stream.uniform() * (n - r));
    std::swap(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(j)]);
    u2[idx[static_cast<std::size_t>(r)]] = 0.2 + 0.8 * stream.uniform();
  }
  return u2;
}

Eigen::VectorXd random_unit_vector(CounterStream& stream, int n, double cell_volume) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = stream.normal();
  return v / std::sqrt(cell_volume * v.squaredNorm());
}

Family random_family(std::uint64_t seed, std::uint64_t index, int n, int rank) {
  CounterStream s(seed, index);
  Eigen::MatrixXd h0 = random_symmetric(s, n);
  Eigen::VectorXd u2 = random_coupling(s, n, rank);
  return Family(std::move(h0), std::move(u2), 1.0,
                "random n=" + std::to_string(n) + " rank=" + std::to_string(rank) + " #" + std::to_string(index));
}

}  // namespace speclab
