#pragma once

#include <cstdint>

#include "emass/kalman.hpp"

namespace emass {

struct ParticleOptions {
  int n_particles = 1000;
  std::uint64_t seed = 0;
  /// Resample when the effective sample size drops below this fraction of
  /// n_particles.
  double ess_fraction = 0.5;
};

/// Bootstrap particle filter for any mix of measurement families.
/// Missing channels contribute unit weight. The per-ping log-likelihood is
/// the log of the prior-weighted mean of the unnormalized weights, so the
/// exponentiated total is an unbiased likelihood estimate.
/// Throws PARTICLES_TOO_FEW (n < 100) and DEGENERATE_WEIGHTS.
FilterResult particle_filter(const ModelSpec& spec, const Participant& series,
                             const ParticleOptions& options);

}  // namespace emass
