#pragma once

// Class-probability vectors. A distribution over C foreground classes carries
// C + 1 entries; the last entry is the background / no-relation class.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sgtrkit/error.hpp"

namespace sgtrkit {

using ProbVector = std::vector<double>;

inline constexpr double kProbSumTolerance = 1e-6;

// Throws InvariantError naming `what` if p is not a distribution.
inline void check_prob_vector(std::span<const double> p, const std::string& what) {
  if (p.size() < 2) throw InvariantError(what + ": needs at least one foreground and the background entry");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0 || p[i] > 1.0) {
      throw InvariantError(what + "[" + std::to_string(i) + "] = " + std::to_string(p[i]) +
                           " is not a probability");
    }
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw InvariantError(what + ": entries sum to " + std::to_string(sum) + ", not 1");
  }
}

inline std::size_t num_foreground(std::span<const double> p) { return p.empty() ? 0 : p.size() - 1; }

// Max probability over foreground classes (background excluded).
inline double foreground_max(std::span<const double> p) {
  if (p.size() < 2) throw DegenerateInputError("distribution has no foreground class");
  return *std::max_element(p.begin(), p.end() - 1);
}

// Foreground argmax; ties resolve to the lowest class index.
inline std::size_t foreground_argmax(std::span<const double> p) {
  if (p.size() < 2) throw DegenerateInputError("distribution has no foreground class");
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end() - 1) - p.begin());
}

// Dense one-hot over num_classes foreground classes plus background (0).
inline ProbVector one_hot(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw ArgumentError("label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
  }
  ProbVector v(num_classes + 1, 0.0);
  v[label] = 1.0;
  return v;
}

}  // namespace sgtrkit
