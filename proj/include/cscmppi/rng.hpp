#pragma once

#include <cstdint>
#include <vector>

#include "cscmppi/types.hpp"

namespace cscmppi {

// Counter-based stream identity: one stream per sampled sequence.
// Equal (seed, stream_id) pairs replay exactly the same draws no matter
// which thread consumes them or in what order batches are generated.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// SplitMix64 finalizer, used to decorrelate stream seeds and derive
// per-step seeds in the simulator.
std::uint64_t mix64(std::uint64_t x);

// Draws n_steps zero-mean Gaussian control perturbations with per-channel
// standard deviations from cov. Pure function of (stream, cov, n_steps).
std::vector<Control> sample_gaussian_noise(const RngStream& stream,
                                           const NoiseCovariance& cov,
                                           std::size_t n_steps);

}  // namespace cscmppi
