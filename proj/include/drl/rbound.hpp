#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drl/spaces.hpp"

namespace drl {

/// Budget of the randomized local searches used for R-bounds, type
/// constants and the embedding operator norm.
struct SearchParams {
  /// Longest selection T_1, ..., T_N that is tried.
  std::size_t max_length = 8;
  /// How often a single operator may appear in one selection.
  std::size_t multiplicity = 4;
  std::size_t restarts = 16;
  /// Coordinate-wise polishing passes per restart.
  std::size_t sweeps = 12;
  std::uint64_t seed = 7;
};

struct RBoundWitness {
  /// Indices into the family, one per slot.
  std::vector<std::size_t> selection;
  /// Domain vectors x_j, one per slot.
  std::vector<Vector> vectors;
};

/// A certified lower bound on R_p of a finite family of operators.
struct RBoundEstimate {
  double value = 0.0;
  double p = 2.0;
  /// Always true: the supremum over unbounded selections is never certified.
  bool lower_bound = true;
  SearchParams search;
  RBoundWitness witness;
};

/// (E|sum eps_j T_{s(j)} x_j|^p / E|sum eps_j x_j|^p)^{1/p} for a witness.
double rbound_ratio(std::span<const Operator> family, const RBoundWitness& witness, double p);

/// Lower bound on the R_p-bound of `family` by randomized search over
/// selections and vectors. Every singleton selection is included, so the
/// result dominates the largest operator norm. Appending operators to the
/// family never lowers the estimate for fixed params.
RBoundEstimate rbound_search(std::span<const Operator> family, double p = 2.0,
                             const SearchParams& params = {});

/// Search restricted to the selection (0, 1, ..., n-1): each operator fills
/// exactly one slot and vectors may vanish.
RBoundEstimate rbound_fixed_selection(std::span<const Operator> ops, double p,
                                      const SearchParams& params = {});

/// Exact R-bound of a family between l^2 spaces: the largest operator norm.
double rbound_hilbert(std::span<const Operator> family);

struct TypeConstantEstimate {
  double value = 0.0;
  double p = 2.0;
  SearchParams search;
  std::vector<Vector> witness;
};

/// (E|sum eps_j x_j|^2)^{1/2} / (sum |x_j|^p)^{1/p}; 0 when every x_j vanishes.
double type_ratio(const SpaceSpec& space, std::span<const Vector> xs, double p);

/// Lower bound on the type-p constant of a sequence space. Runs are keyed by
/// the number of active coordinates, so the estimate for l^q_n never exceeds
/// the estimate for l^q_{n+1}.
TypeConstantEstimate type_constant_search(const SpaceSpec& space, double p, const SearchParams& params = {});

}  // namespace drl
