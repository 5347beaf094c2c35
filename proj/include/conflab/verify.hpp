#pragma once

#include <cstdint>
#include <random>

#include <nlohmann/json.hpp>

#include "conflab/linalg.hpp"

namespace conflab {

using Rng = std::mt19937_64;

// Entries iid N(0,1); resampled until comfortably invertible.
Matrix random_matrix(Rng& rng, int d);
Matrix random_orthogonal(Rng& rng, int d);

// Runs every invariant suite; "pass" is the conjunction.
nlohmann::json run_verify(std::uint64_t seed);

}  // namespace conflab
