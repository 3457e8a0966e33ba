#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drl/rbound.hpp"
#include "drl/spaces.hpp"

namespace drl {

/// A step function on [0,1) that is constant on the 2^L dyadic atoms
/// [i 2^-L, (i+1) 2^-L) and takes values in a SpaceSpec.
class DyadicFunction {
 public:
  DyadicFunction(int level, SpaceSpec space, std::vector<double> values);
  static DyadicFunction zeros(int level, SpaceSpec space);
  static DyadicFunction constant(int level, SpaceSpec space, std::span<const double> value);

  int level() const noexcept { return level_; }
  const SpaceSpec& space() const noexcept { return space_; }
  std::size_t atoms() const noexcept { return std::size_t{1} << level_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> at(std::size_t atom) const { return {values_.data() + atom * dim_, dim_}; }
  std::span<double> at(std::size_t atom) { return {values_.data() + atom * dim_, dim_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  DyadicFunction& operator+=(const DyadicFunction& other);
  DyadicFunction& operator*=(double factor);

  friend bool operator==(const DyadicFunction&, const DyadicFunction&) = default;

 private:
  int level_;
  SpaceSpec space_;
  std::size_t dim_;
  std::vector<double> values_;
};

DyadicFunction operator+(DyadicFunction a, const DyadicFunction& b);
DyadicFunction operator*(double factor, DyadicFunction f);

/// A nonnegative real step function at resolution 2^-L (maximal functions,
/// integrands).
struct ScalarDyadicFunction {
  int level = 0;
  std::vector<double> values;

  std::size_t atoms() const noexcept { return values.size(); }
};

/// A union of level-m atoms.
struct DyadicSet {
  int level = 0;
  std::vector<std::size_t> atoms;

  double measure() const;
};

/// Every conditional expectation E_0 f, ..., E_L f of f, stored per level
/// as one value per level-j atom. Level j is obtained by pairwise averaging
/// of level j+1, so E_i E_j f = E_min(i,j) f holds bit for bit.
class Martingale {
 public:
  explicit Martingale(const DyadicFunction& f);

  int level() const noexcept { return level_; }
  std::size_t dim() const noexcept { return dim_; }
  /// E_j f on the level-L atom `atom`.
  std::span<const double> at(int j, std::size_t atom) const;
  /// E_j f on the level-j atom `block`.
  std::span<const double> block(int j, std::size_t block) const;

 private:
  int level_;
  std::size_t dim_;
  std::vector<std::vector<double>> levels_;
};

/// E_j f, re-expanded to the resolution of f. Levels j >= L return f.
DyadicFunction cond_expect(const DyadicFunction& f, int j);

/// Mf = max_j |E_j f|.
ScalarDyadicFunction maximal_std(const DyadicFunction& f);

enum class RBoundMode {
  /// Exact R-bound via the Hilbert-space identity (largest norm).
  hilbert,
  /// Randomized lower-bound search.
  search,
};

/// The values of f at one atom as operators: vectors of E become maps R -> E.
std::vector<Operator> as_operators(const SpaceSpec& space, std::span<const std::span<const double>> values);

/// M_R f = R(E_j f : 0 <= j <= L) atom by atom.
ScalarDyadicFunction maximal_rad(const DyadicFunction& f, RBoundMode mode, const SearchParams& params = {});

/// Bochner L^p norm (2^-L sum_i |f_i|^p)^{1/p}.
double lp_norm(const DyadicFunction& f, double p);
double lp_norm(const ScalarDyadicFunction& g, double p);

/// Lorentz L^{p,s} norm with the strict distribution function mu(g > t).
double lorentz_norm(const ScalarDyadicFunction& g, double p, double s);

/// Pointwise |f|.
ScalarDyadicFunction pointwise_norm(const DyadicFunction& f);

/// Integral of f over a dyadic set of any level <= L.
Vector integrate(const DyadicFunction& f, const DyadicSet& set);
double integrate(const ScalarDyadicFunction& g, const DyadicSet& set);

}  // namespace drl
