#include "seplogit/ising.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "seplogit/rng.hpp"

namespace seplogit {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_enumerable(const IsingParameters& theta, const char* op) {
  if (theta.num_nodes() > kMaxEnumNodes)
    throw NumericError(std::string(op) + ": exact enumeration limited to p <= " +
                       std::to_string(kMaxEnumNodes) + " nodes, got p = " +
                       std::to_string(theta.num_nodes()));
}

/// Visits all 2^p states in Gray-code order, calling visit(state_bits, energy)
/// where energy = sum_j theta_j u_j + sum_{j<l} theta_jl u_j u_l. The energy
/// is updated incrementally: consecutive Gray codes differ in one bit.
template <typename Visitor>
void enumerate_states(const IsingParameters& theta, Visitor&& visit) {
  const std::size_t p = theta.num_nodes();
  const std::uint64_t count = std::uint64_t{1} << p;
  std::uint64_t state = 0;
  double energy = 0.0;
  visit(state, energy);
  for (std::uint64_t i = 1; i < count; ++i) {
    const unsigned bit = static_cast<unsigned>(std::countr_zero(i));
    const std::uint64_t mask = std::uint64_t{1} << bit;
    const bool setting = (state & mask) == 0;
    double delta = theta.main(bit);
    std::uint64_t others = state & ~mask;
    while (others != 0) {
      const unsigned l = static_cast<unsigned>(std::countr_zero(others));
      others &= others - 1;
      delta += theta.interaction(bit, l);
    }
    state ^= mask;
    energy += setting ? delta : -delta;
    visit(state, energy);
  }
}

double state_energy(const IsingParameters& theta, std::span<const std::uint8_t> u) {
  const std::size_t p = theta.num_nodes();
  double e = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (u[j] == 0) continue;
    e += theta.main(j);
    for (std::size_t l = j + 1; l < p; ++l)
      if (u[l] != 0) e += theta.interaction(j, l);
  }
  return e;
}

}  // namespace

double log_partition(const IsingParameters& theta) {
  check_enumerable(theta, "log_partition");
  // Running log-sum-exp: keep the max seen so far and a sum of exponentials
  // rescaled to it.
  double max_e = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  enumerate_states(theta, [&](std::uint64_t, double e) {
    if (e <= max_e) {
      sum += std::exp(e - max_e);
    } else {
      sum = sum * std::exp(max_e - e) + 1.0;
      max_e = e;
    }
  });
  return max_e + std::log(sum);
}

double exact_probability(const IsingParameters& theta, std::span<const std::uint8_t> u) {
  check_enumerable(theta, "exact_probability");
  if (u.size() != theta.num_nodes())
    throw DataError("exact_probability: state length must equal p");
  for (auto v : u)
    if (v > 1) throw DataError("exact_probability: state entries must be 0 or 1");
  return std::exp(state_energy(theta, u) - log_partition(theta));
}

double conditional_success_prob(const IsingParameters& theta, std::size_t j,
                                std::span<const std::uint8_t> u_minus_j) {
  const std::size_t p = theta.num_nodes();
  if (j >= p) throw DataError("conditional_success_prob: node index out of range");
  if (u_minus_j.size() != p - 1)
    throw DataError("conditional_success_prob: context length must be p-1");
  double logit = theta.main(j);
  for (std::size_t c = 0; c < p - 1; ++c) {
    if (u_minus_j[c] == 0) continue;
    const std::size_t l = c < j ? c : c + 1;
    logit += theta.interaction(j, l);
  }
  return sigmoid(logit);
}

BinaryObservationMatrix sample_exact(const IsingParameters& theta, std::size_t n,
                                     std::uint64_t seed) {
  check_enumerable(theta, "sample_exact");
  const std::size_t p = theta.num_nodes();
  const double log_z = log_partition(theta);

  // CDF over states in Gray-code enumeration order.
  const std::uint64_t count = std::uint64_t{1} << p;
  std::vector<double> cdf;
  cdf.reserve(count);
  std::vector<std::uint64_t> states;
  states.reserve(count);
  double acc = 0.0;
  enumerate_states(theta, [&](std::uint64_t state, double e) {
    acc += std::exp(e - log_z);
    cdf.push_back(acc);
    states.push_back(state);
  });

  BinaryObservationMatrix out(n, p);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t idx = std::min<std::size_t>(it - cdf.begin(), count - 1);
    const std::uint64_t s = states[idx];
    for (std::size_t j = 0; j < p; ++j)
      out.set(i, j, (s >> j) & 1 ? 1 : 0);
  }
  return out;
}

BinaryObservationMatrix sample_gibbs(const IsingParameters& theta, std::size_t n,
                                     const SamplerConfig& config) {
  config.validate();
  const std::size_t p = theta.num_nodes();
  Rng rng(config.seed);

  std::vector<std::uint8_t> state(p);
  for (std::size_t j = 0; j < p; ++j) state[j] = rng.bernoulli(0.5) ? 1 : 0;

  std::vector<std::uint8_t> context(p - 1);
  auto sweep = [&]() {
    for (std::size_t j = 0; j < p; ++j) {
      std::size_t c = 0;
      for (std::size_t l = 0; l < p; ++l)
        if (l != j) context[c++] = state[l];
      const double prob = conditional_success_prob(theta, j, context);
      state[j] = rng.bernoulli(prob) ? 1 : 0;
    }
  };

  for (long s = 0; s < config.burn_in; ++s) sweep();

  BinaryObservationMatrix out(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0)
      for (long s = 0; s < config.thinning; ++s) sweep();
    for (std::size_t j = 0; j < p; ++j) out.set(i, j, state[j]);
  }
  return out;
}

BinaryObservationMatrix sample(const IsingParameters& theta, std::size_t n,
                               std::uint64_t seed) {
  if (theta.num_nodes() <= kMaxEnumNodes) return sample_exact(theta, n, seed);
  return sample_gibbs(theta, n, default_gibbs_config(theta.num_nodes(), seed));
}

}  // namespace seplogit
