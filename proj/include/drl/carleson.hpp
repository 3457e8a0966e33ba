#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "drl/dyadic.hpp"
#include "drl/rademacher.hpp"
#include "drl/rbound.hpp"
#include "drl/spaces.hpp"

namespace drl {

/// A finite Carleson family theta_0, ..., theta_L of F-valued step functions
/// at a common level L. Missing trailing members are zero.
class CarlesonFamily {
 public:
  CarlesonFamily(int level, SpaceSpec space, std::vector<DyadicFunction> funcs);
  static CarlesonFamily zeros(int level, SpaceSpec space);

  int level() const noexcept { return level_; }
  const SpaceSpec& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return funcs_.size(); }
  const DyadicFunction& operator[](std::size_t j) const { return funcs_[j]; }
  DyadicFunction& operator[](std::size_t j) { return funcs_[j]; }
  /// theta_j on a level-L atom.
  std::span<const double> at(std::size_t j, std::size_t atom) const { return funcs_[j].at(atom); }
  /// Indices j whose theta_j is not identically zero.
  std::vector<std::size_t> support() const;

 private:
  int level_;
  SpaceSpec space_;
  std::vector<DyadicFunction> funcs_;
};

/// Atom-wise E|sum_{j>=m} eps_j theta_j|^p.
ScalarDyadicFunction tail_energy(const CarlesonFamily& theta, int m, double p, const MomentOptions& options = {});

/// p-Carleson constant: the maximum over levels m and level-m atoms I of
/// (2^m int_I tail_energy(theta, m, p))^{1/p}. Restricting the supremum over
/// sets in F_m to single atoms is exact because the average over a union of
/// atoms is a convex combination of the atom averages.
double car_constant(const CarlesonFamily& theta, double p, const MomentOptions& options = {});

/// The space E in which E_j f(xi) theta_j(xi) lives: values of f in E act on
/// scalar theta, values in L(F, E) act on F-valued theta.
SpaceSpec embedding_codomain(const SpaceSpec& f_space, const SpaceSpec& theta_space);

/// Theta f: per atom the sequence (E_j f(xi) theta_j(xi))_{j=0..L}.
class EmbeddingImage {
 public:
  EmbeddingImage(int level, SpaceSpec space, std::size_t terms);

  int level() const noexcept { return level_; }
  const SpaceSpec& space() const noexcept { return space_; }
  std::size_t terms() const noexcept { return terms_; }
  std::size_t atoms() const noexcept { return std::size_t{1} << level_; }

  std::span<const double> at(std::size_t atom, std::size_t j) const;
  std::span<double> at(std::size_t atom, std::size_t j);
  /// Contiguous block of all terms at one atom.
  std::span<const double> sequence(std::size_t atom) const;
  std::vector<Vector> vectors(std::size_t atom) const;

 private:
  int level_;
  SpaceSpec space_;
  std::size_t terms_;
  std::size_t dim_;
  std::vector<double> data_;
};

EmbeddingImage embed(const CarlesonFamily& theta, const DyadicFunction& f);

/// L^p(Rad_p(E)) norm of Theta f.
double embed_norm(const CarlesonFamily& theta, const DyadicFunction& f, double p,
                  const MomentOptions& options = {});

struct OperatorNormEstimate {
  double value = 0.0;
  bool lower_bound = true;
  DyadicFunction witness;
};

/// Lower bound on the norm of Theta : L^p(X) -> L^p(Rad(E)) by random and
/// polished search over f with values in `f_space`. Every function in
/// `initial` is evaluated, so the result dominates each of their ratios.
OperatorNormEstimate operator_norm_search(const CarlesonFamily& theta, const SpaceSpec& f_space, double p,
                                          const SearchParams& params = {},
                                          std::span<const DyadicFunction> initial = {});

/// Stopping times tau_k(xi) = min{ j >= N : R(E_i f(xi) : i <= j) > 2^k } on
/// the grid k_min <= k <= k_max, and the blocks J_k = [tau_k, tau_{k+1}).
struct StoppingDecomposition {
  static constexpr int kNever = std::numeric_limits<int>::max();

  int level = 0;
  int start = 0;
  int k_min = 0;
  int k_max = 0;
  /// prefix[atom * (L+1) + j] = R(E_i f(atom) : i <= j).
  std::vector<double> prefix;
  /// tau[atom * (k_max - k_min + 1) + (k - k_min)].
  std::vector<int> tau;

  std::size_t atoms() const noexcept { return std::size_t{1} << level; }
  double prefix_bound(std::size_t atom, int j) const;
  /// M_R f at the atom.
  double maximal(std::size_t atom) const { return prefix_bound(atom, level); }
  /// tau_k at the atom for any integer k (constant below k_min, never above k_max).
  int stop(std::size_t atom, int k) const;
  /// J_k at the atom.
  std::vector<int> block(std::size_t atom, int k) const;
  /// Indices j >= start preceding every stopping time; E_j f vanishes there.
  std::vector<int> leading(std::size_t atom) const;
};

StoppingDecomposition stopping_decompose(const DyadicFunction& f, int start, RBoundMode mode,
                                         const SearchParams& params = {});

/// Numerical audit of the stopping-time chain bounding
/// int E|sum_{j>=N} eps_j E_j f theta_j|^p by Car^p(theta) |M_R f|_{L^{p,s}}.
struct AuditReport {
  double p = 0.0;
  double r = 0.0;
  double s = 0.0;
  int start = 0;
  int k_min = 0;
  int k_max = 0;
  double tolerance = 1e-9;

  double lhs = 0.0;          ///< int E|sum_{j>=N} eps_j E_j f theta_j|^p
  double car = 0.0;          ///< Car^p(theta)
  double maximal_lorentz = 0.0;  ///< |M_R f|_{L^{p,s}}
  double end_to_end = 0.0;   ///< lhs^{1/p} / (car * maximal_lorentz)

  // (a) randomization over the blocks J_k.
  double a_max_error = 0.0;
  bool a_evaluated = true;
  bool a_holds = true;
  // (b) per-block bound by 2^{(k+1)s}; a hard inequality when s == 2.
  double b_max_excess = 0.0;
  bool b_hard = true;
  bool b_holds = true;
  // (c) measured type-s constant and the L^{p/s} triangle inequality.
  double c_type_constant = 0.0;
  double c_minkowski_ratio = 0.0;
  bool c_finite = true;
  // (d) contraction, Carleson condition on A_m = {tau_k = m}, and the summed bound.
  double d_contraction_excess = 0.0;
  double d_carleson_excess = 0.0;
  double d_sum_excess = 0.0;
  bool d_stopping_consistent = true;
  bool d_holds = true;
  // (e) level-set sum against |M_R f|^s_{L^{p,s}}.
  double e_level_sum = 0.0;
  double e_ratio = 0.0;
  double e_lower = 0.0;
  double e_upper = 0.0;
  bool e_holds = true;

  bool hard_steps_hold() const noexcept {
    return a_holds && (!b_hard || b_holds) && c_finite && d_holds && e_holds;
  }
};

/// Runs the audit with exact R-bounds; needs Hilbert-space values.
AuditReport lemma_audit(const CarlesonFamily& theta, const DyadicFunction& f, double p, double r, int start,
                        double tol = 1e-9);

struct WitnessResult {
  CarlesonFamily family;
  /// 2^-N sum over level-N atoms of the searched R_p prefix bound to the power p.
  double rbound_integral = 0.0;
  /// int E|sum_j eps_j E_j f theta_j|^p for the assembled family.
  double embedding_integral = 0.0;
  /// Searched R_p value per level-N atom.
  std::vector<double> atom_values;
};

/// Builds, per level-N atom, a sequence x_0..x_N maximizing
/// E|sum eps_j E_j f x_j|^p relative to E|sum eps_j x_j|^p, normalized so
/// that every sign combination has norm at most 1, and assembles it into a
/// Carleson family whose Car^q constant is at most 1 for every q.
WitnessResult witness_family(const DyadicFunction& f, double p, int level, const SearchParams& params = {});

}  // namespace drl
