#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hisd/landscape.hpp"

namespace hisd {

/// One line of the verification table.
struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Suites: fd, eigen, lemma31, equilibrium, rate, alpha.
std::vector<std::string> verify_suite_names();

/// Runs one suite ("all" runs every suite). Throws InvalidInputError for an
/// unknown suite name.
std::vector<CheckResult> run_verify_suite(const std::string& suite, int trials,
                                          std::uint64_t seed);

// Shared helpers, also used by the test suites.

Matrix random_symmetric(int n, std::mt19937_64& rng);

/// Moves span(V) a random small step along the reflection manifold:
/// V' = orthonormalize(V + scale * W) with W a random matrix. The result
/// stays exactly on the manifold, so reflection_distance comparisons test
/// the Lemma 3.1 extremum property.
UnstableBasis tangent_perturb(const UnstableBasis& basis, double scale,
                              std::mt19937_64& rng);

}  // namespace hisd
