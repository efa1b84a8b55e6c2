#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "headtrack/core.hpp"

namespace headtrack {

struct SampleSpec {
  std::uint64_t population = 0;
  double confidence = 0.95;
  double margin = 0.05;
  double proportion = 0.5;

  void validate() const;
};

// Inverse of the standard normal CDF.
double normal_quantile(double p);

// Cochran's sample size with finite-population correction, rounded up and
// never larger than the population.
std::uint64_t sample_size(const SampleSpec& spec);

// Uniform sample without replacement, in original order. Throws
// SampleTooLarge when n exceeds the population.
std::vector<Track> sample_tracks(std::span<const Track> tracks, std::size_t n, std::uint64_t seed);

}  // namespace headtrack
