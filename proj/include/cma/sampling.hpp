#pragma once

#include <cstdint>
#include <vector>

namespace cma {

// Deterministic low-discrepancy machinery. Boundary sampling maps Halton
// points through inverse-normal deviates onto directions of S^{d-1}; the seed
// leaps the sequence and is recorded in every report.
double halton(uint64_t index, uint32_t base);

// unit direction vectors in R^dim
std::vector<std::vector<double>> sphere_directions(int dim, int count, uint64_t seed);

// inverse standard normal CDF (Acklam's rational approximation, ~1e-9)
double inverse_normal_cdf(double p);

} // namespace cma
