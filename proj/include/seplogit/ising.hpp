#pragma once

#include <cstdint>
#include <span>

#include "seplogit/types.hpp"

namespace seplogit {

/// Exact enumeration over 2^p states is refused above this node count.
inline constexpr std::size_t kMaxEnumNodes = 25;

struct SamplerConfig {
  enum class Method { Exact, Gibbs };
  Method method = Method::Gibbs;
  long burn_in = 1000;   // sweeps discarded before the first retained sample
  long thinning = 1;     // sweeps between retained samples
  std::uint64_t seed = 0;

  void validate() const {
    if (burn_in < 0) throw DataError("sampler: burn_in must be >= 0");
    if (thinning < 1) throw DataError("sampler: thinning must be >= 1");
  }
};

/// Default Gibbs settings for a p-node model: 1000 burn-in sweeps and one
/// retained sample every p sweeps.
inline SamplerConfig default_gibbs_config(std::size_t p, std::uint64_t seed) {
  SamplerConfig c;
  c.method = SamplerConfig::Method::Gibbs;
  c.burn_in = 1000;
  c.thinning = static_cast<long>(p);
  c.seed = seed;
  return c;
}

/// log sum_{u in {0,1}^p} exp(sum_j theta_j u_j + sum_{j<l} theta_jl u_j u_l),
/// computed by Gray-code enumeration with a running log-sum-exp.
/// Throws NumericError when p > kMaxEnumNodes.
double log_partition(const IsingParameters& theta);

/// P(U = u) under the model; requires p <= kMaxEnumNodes.
double exact_probability(const IsingParameters& theta, std::span<const std::uint8_t> u);

/// P(U_j = 1 | U_{-j} = u_minus_j) = sigmoid(theta_j + sum_{l != j} theta_jl u_l).
/// u_minus_j is indexed over l = 0..p-1 skipping j. Works for any p.
double conditional_success_prob(const IsingParameters& theta, std::size_t j,
                                std::span<const std::uint8_t> u_minus_j);

/// n i.i.d. draws by inverse CDF over the enumerated distribution.
/// Requires p <= kMaxEnumNodes; deterministic given seed.
BinaryObservationMatrix sample_exact(const IsingParameters& theta, std::size_t n,
                                     std::uint64_t seed);

/// n draws from a single-site Gibbs chain (ascending node order per sweep).
/// Deterministic given config.seed.
BinaryObservationMatrix sample_gibbs(const IsingParameters& theta, std::size_t n,
                                     const SamplerConfig& config);

/// Convenience: exact sampling when feasible, Gibbs otherwise.
BinaryObservationMatrix sample(const IsingParameters& theta, std::size_t n,
                               std::uint64_t seed);

}  // namespace seplogit
