#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cntsim::linalg {

// Reductions sum fixed-size blocks and then the block partials in order, so
// the result does not depend on how many threads computed the partials.
inline constexpr std::size_t kReductionBlock = 4096;

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);
/// Normalizes in place and returns the original norm.
double normalize(std::span<double> x);

/// Uniform doubles in [-1, 1) from splitmix64; identical on every platform.
std::vector<double> random_vector(std::size_t n, std::uint64_t seed);

}  // namespace cntsim::linalg
