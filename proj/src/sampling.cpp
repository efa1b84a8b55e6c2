#include "headtrack/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include "headtrack/errors.hpp"

namespace headtrack {

void SampleSpec::validate() const {
  if (population < 1) throw InvariantError("population must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvariantError("confidence must be in (0,1)");
  if (!(margin > 0.0 && margin < 1.0)) throw InvariantError("margin must be in (0,1)");
  if (!(proportion > 0.0 && proportion < 1.0)) throw InvariantError("proportion must be in (0,1)");
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvariantError("quantile probability must be in (0,1)");
  // Acklam's rational approximation (relative error < 1.2e-9) followed by
  // one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

std::uint64_t sample_size(const SampleSpec& spec) {
  spec.validate();
  const double z = normal_quantile(1.0 - (1.0 - spec.confidence) / 2.0);
  const double n0 = z * z * spec.proportion * (1.0 - spec.proportion) / (spec.margin * spec.margin);
  const double n = n0 / (1.0 + (n0 - 1.0) / static_cast<double>(spec.population));
  return std::min(spec.population, static_cast<std::uint64_t>(std::ceil(n)));
}

std::vector<Track> sample_tracks(std::span<const Track> tracks, std::size_t n, std::uint64_t seed) {
  if (n > tracks.size()) {
    throw SampleTooLarge("sample of " + std::to_string(n) + " exceeds population of " + std::to_string(tracks.size()));
  }
  std::vector<Track> out;
  out.reserve(n);
  std::mt19937_64 rng(seed);
  std::sample(tracks.begin(), tracks.end(), std::back_inserter(out), n, rng);
  return out;
}

}  // namespace headtrack
