#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace lbarn {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)), stable for large |z|.
inline double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

// Log-probability of `bit` under Bernoulli(sigmoid(log_odds)).
inline double bernoulli_log_prob(double log_odds, std::uint8_t bit) {
  return bit ? log_sigmoid(log_odds) : log_sigmoid(-log_odds);
}

inline double clamp_probability(double p, double eps) {
  return std::clamp(p, eps, 1.0 - eps);
}

}  // namespace lbarn
