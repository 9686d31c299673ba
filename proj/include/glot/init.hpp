#pragma once

#include <cstdint>
#include <string_view>

#include "glot/autograd.hpp"

namespace glot {

/// Uniform(-a, a) with a = sqrt(6 / (rows + cols)), drawn from a stream
/// keyed by (seed, name) so each parameter's init is independent of the
/// others that happen to exist in the model.
Parameter glorot_parameter(std::string_view name, std::size_t rows, std::size_t cols,
                           std::uint64_t seed);
Parameter zero_parameter(std::string_view name, std::size_t rows, std::size_t cols);

}  // namespace glot
