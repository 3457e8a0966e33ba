#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace drl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coordinates of a point in a finite-dimensional real space. Operator-space
/// points are stored row-major (codomain rows by domain columns).
using Vector = std::vector<double>;

/// A finite-dimensional real normed space: either l^q_n or a space of
/// operators between two such spaces carrying the induced operator norm.
class SpaceSpec {
 public:
  static SpaceSpec sequence(double q, std::size_t dim);
  static SpaceSpec operators(SpaceSpec domain, SpaceSpec codomain);
  /// The scalar field as the one-dimensional space l^2_1.
  static SpaceSpec scalars() { return sequence(2.0, 1); }

  bool is_sequence() const noexcept { return std::holds_alternative<Sequence>(kind_); }
  bool is_operator() const noexcept { return !is_sequence(); }

  /// Exponent q of a sequence space.
  double exponent() const;
  /// Number of stored coordinates.
  std::size_t dim() const noexcept;
  const SpaceSpec& domain() const;
  const SpaceSpec& codomain() const;

  /// l^2 sequence space, or operators between l^2 spaces.
  bool is_hilbert() const noexcept;

  std::string describe() const;

  friend bool operator==(const SpaceSpec& a, const SpaceSpec& b);

 private:
  struct Sequence {
    double q;
    std::size_t n;
  };
  struct Operators {
    std::shared_ptr<const SpaceSpec> domain;
    std::shared_ptr<const SpaceSpec> codomain;
  };
  explicit SpaceSpec(std::variant<Sequence, Operators> k) : kind_(std::move(k)) {}

  std::variant<Sequence, Operators> kind_;
};

/// A linear map between two sequence spaces.
class Operator {
 public:
  Operator(Eigen::MatrixXd matrix, SpaceSpec domain, SpaceSpec codomain);
  /// Builds an operator from a row-major point of an operator space.
  static Operator from_point(const SpaceSpec& op_space, std::span<const double> coords);
  static Operator identity(const SpaceSpec& space);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const SpaceSpec& domain() const noexcept { return domain_; }
  const SpaceSpec& codomain() const noexcept { return codomain_; }
  SpaceSpec space() const { return SpaceSpec::operators(domain_, codomain_); }

  Vector apply(std::span<const double> x) const;
  /// Row-major coordinates as a point of space().
  Vector coordinates() const;

  Operator scaled(double factor) const;
  friend Operator compose(const Operator& outer, const Operator& inner);

 private:
  Eigen::MatrixXd matrix_;
  SpaceSpec domain_;
  SpaceSpec codomain_;
};

struct OpNormParams {
  std::size_t restarts = 24;
  std::size_t iterations = 60;
  std::uint64_t seed = 1;
};

struct OpNorm {
  double value = 0.0;
  /// True when value is only a lower bound on the induced norm.
  bool lower_bound = false;
  /// A domain vector with norm 1 attaining value (zero for the zero operator).
  Vector witness;
};

/// l^q norm, or the induced norm for operator spaces.
double norm(const SpaceSpec& space, std::span<const double> x);

/// norm(space, x)^p, evaluated without an intermediate root for q == p.
double norm_pow(const SpaceSpec& space, std::span<const double> x, double p);

/// Induced norm sup_{|x|=1} |Tx|. Exact for l^2 -> l^2 (largest singular
/// value), for l^1 domains, for l^inf codomains and for small l^inf domains;
/// otherwise a search-based lower bound flagged as such.
OpNorm op_norm(const Operator& t, const OpNormParams& params = {});

/// The rank-one operator y -> <fstar, y> e.
Operator elementary_tensor(const SpaceSpec& domain, std::span<const double> fstar,
                           const SpaceSpec& codomain, std::span<const double> e);

/// Conjugate exponent q' with 1/q + 1/q' = 1.
double dual_exponent(double q);

}  // namespace drl
