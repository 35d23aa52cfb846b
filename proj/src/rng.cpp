#include "cscmppi/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cscmppi {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

namespace {

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

std::vector<Control> sample_gaussian_noise(const RngStream& stream,
                                           const NoiseCovariance& cov,
                                           std::size_t n_steps) {
  if (n_steps < 1) {
    throw std::invalid_argument("sample_gaussian_noise: n_steps must be >= 1");
  }
  // mt19937_64 is fully specified by the standard; the Gaussian transform is
  // done by hand because std::normal_distribution's draw order is
  // implementation-defined and would break the reproducibility contract.
  std::mt19937_64 eng(mix64(stream.seed ^ mix64(stream.stream_id)));
  std::vector<Control> out;
  out.reserve(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double u1 = 1.0 - uniform01(eng);  // (0, 1]
    const double u2 = uniform01(eng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out.emplace_back(cov.sigma_v * r * std::cos(2.0 * kPi * u2),
                     cov.sigma_w * r * std::sin(2.0 * kPi * u2));
  }
  return out;
}

}  // namespace cscmppi
