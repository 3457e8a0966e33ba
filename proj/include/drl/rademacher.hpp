#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drl/spaces.hpp"

namespace drl {

enum class MomentMode { exact, montecarlo };

struct MomentOptions {
  MomentMode mode = MomentMode::exact;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  /// Largest number of nonzero vectors enumerated in exact mode.
  std::size_t exact_threshold = 20;
};

/// E|sum_j eps_j x_j|^p together with how it was obtained.
struct RadMoment {
  double value = 0.0;
  double p = 2.0;
  MomentMode mode = MomentMode::exact;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

/// A fixed choice of signs, entries in {-1, +1}.
struct SignPattern {
  std::vector<int> signs;

  static SignPattern from_bits(std::uint64_t bits, std::size_t n);
  /// sum_j signs[j] * xs[j]
  Vector apply(std::span<const Vector> xs) const;
};

/// Randomized moment E|sum_j eps_j x_j|^p. Exact mode averages over every sign
/// pattern and is invariant (bit for bit) under permuting the vectors and
/// flipping their signs; Monte-Carlo mode is reproducible from (seed, samples)
/// regardless of the thread count.
RadMoment rad_moment(const SpaceSpec& space, std::span<const Vector> xs, double p,
                     const MomentOptions& options = {});

/// rad_moment(...)^{1/p}: the Rad_p norm of the finite sequence.
double rad_norm(const SpaceSpec& space, std::span<const Vector> xs, double p,
                const MomentOptions& options = {});

/// Ratio of Rad_p to Rad_q norms; 0 for an all-zero sequence.
double kk_ratio(const SpaceSpec& space, std::span<const Vector> xs, double p, double q,
                const MomentOptions& options = {});

struct ContractionReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Compares E|sum eps_j l_j x_j|^p with (max|l_j|)^p E|sum eps_j x_j|^p.
ContractionReport contraction_check(const SpaceSpec& space, std::span<const Vector> xs,
                                    std::span<const double> lambdas, double p, double tol = 1e-12);

struct BlockReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool equal = false;
};

/// Compares the moment of (x_j) with the doubly randomized moment
/// E E'|sum_k eps'_k sum_{j in J_k} eps_j x_j|^p, both by exact enumeration.
/// `blocks` must partition {0, ..., N-1}. The relative tolerance is applied
/// as |lhs - rhs| <= tol * max(1, lhs).
BlockReport block_randomization_check(const SpaceSpec& space, std::span<const Vector> xs,
                                      std::span<const std::vector<std::size_t>> blocks, double p,
                                      double tol = 1e-12);

/// Largest number of sign bits (vectors plus blocks) the block check enumerates.
inline constexpr std::size_t kBlockCheckMaxBits = 26;

namespace detail {

/// Evaluates |v|^p for points of a fixed space.
class NormPower {
 public:
  NormPower(const SpaceSpec& space, double p);
  double operator()(const double* v) const;
  double norm(const double* v) const;

 private:
  const SpaceSpec* space_;
  double p_;
  double q_;
  std::size_t dim_;
  bool sequence_;
};

/// Exact moment of `count` vectors stored contiguously in `flat`, without
/// canonical reordering. Count may be up to 62.
double exact_moment(const SpaceSpec& space, std::span<const double> flat, std::size_t count, double p);

/// max over sign patterns of |sum_j s_j x_j|.
double sup_pattern_norm(const SpaceSpec& space, std::span<const double> flat, std::size_t count);

}  // namespace detail

}  // namespace drl
