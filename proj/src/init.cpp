#include "glot/init.hpp"

#include <cmath>
#include <string>

#include "glot/random.hpp"

namespace glot {

Parameter glorot_parameter(std::string_view name, std::size_t rows, std::size_t cols,
                           std::uint64_t seed) {
  CounterRng rng(seed, name);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return Parameter(std::string(name), std::move(m));
}

Parameter zero_parameter(std::string_view name, std::size_t rows, std::size_t cols) {
  return Parameter(std::string(name), Matrix(rows, cols));
}

}  // namespace glot
