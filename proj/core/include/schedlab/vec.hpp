#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "schedlab/errors.hpp"

namespace schedlab {

using Vec = std::vector<double>;

inline void require_same_dim(std::span<const double> a, std::span<const double> b,
                             const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// out = alpha * a + beta * b
inline Vec axpby(double alpha, std::span<const double> a, double beta, std::span<const double> b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + beta * b[i];
  return out;
}

inline Vec scaled(std::span<const double> a, double alpha) {
  Vec out(a.begin(), a.end());
  for (double& v : out) v *= alpha;
  return out;
}

}  // namespace schedlab
