#include "drl/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drl/error.hpp"
#include "drl/parallel.hpp"
#include "drl/rng.hpp"

namespace drl {

namespace {

unsigned g_threads = 0;

double lq_norm(double q, std::span<const double> x) {
  if (q == 2.0) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  }
  if (q == 1.0) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
  }
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
  }
  // Scale by the largest entry so large exponents do not overflow.
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v) / m, q);
  return m * std::pow(s, 1.0 / q);
}

Eigen::VectorXd to_eigen(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

Vector to_vector(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

double ratio(const Operator& t, const Eigen::VectorXd& x) {
  const double nx = norm(t.domain(), std::span<const double>(x.data(), x.size()));
  if (nx == 0.0) return 0.0;
  const Eigen::VectorXd y = t.matrix() * x;
  return norm(t.codomain(), std::span<const double>(y.data(), y.size())) / nx;
}

/// Duality map of l^q: the vector attaining <v, J(v)> = |v|_q with |J(v)|_{q'} = 1.
Eigen::VectorXd duality_map(const Eigen::VectorXd& v, double q) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  const double nv = lq_norm(q, std::span<const double>(v.data(), v.size()));
  if (nv == 0.0) return out;
  if (std::isinf(q)) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    out[arg] = v[arg] > 0 ? 1.0 : -1.0;
    return out;
  }
  if (q == 1.0) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = (v[i] > 0) - (v[i] < 0);
    return out;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]) / nv;
    out[i] = std::copysign(std::pow(a, q - 1.0), v[i]);
  }
  return out;
}

OpNorm finish(const Operator& t, Eigen::VectorXd best, bool lower_bound) {
  OpNorm out;
  out.lower_bound = lower_bound;
  const double nb = norm(t.domain(), std::span<const double>(best.data(), best.size()));
  if (nb == 0.0) {
    out.witness.assign(t.domain().dim(), 0.0);
    return out;
  }
  best /= nb;
  out.value = ratio(t, best);
  out.witness = to_vector(best);
  return out;
}

}  // namespace

void set_thread_count(unsigned n) noexcept { g_threads = n; }

unsigned thread_count() noexcept {
  if (g_threads != 0) return g_threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u == 0.0) u = uniform();
  const double v = uniform();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double a = 2.0 * M_PI * v;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

SpaceSpec SpaceSpec::sequence(double q, std::size_t dim) {
  if (!(q >= 1.0)) throw RangeError("sequence space exponent must lie in [1, inf]");
  if (dim == 0) throw RangeError("sequence space dimension must be positive");
  return SpaceSpec(Sequence{q, dim});
}

SpaceSpec SpaceSpec::operators(SpaceSpec domain, SpaceSpec codomain) {
  if (!domain.is_sequence() || !codomain.is_sequence()) {
    throw RangeError("operator spaces are built from sequence spaces");
  }
  return SpaceSpec(Operators{std::make_shared<const SpaceSpec>(std::move(domain)),
                             std::make_shared<const SpaceSpec>(std::move(codomain))});
}

double SpaceSpec::exponent() const {
  if (!is_sequence()) throw DimensionError("operator space has no sequence exponent");
  return std::get<Sequence>(kind_).q;
}

std::size_t SpaceSpec::dim() const noexcept {
  if (const auto* s = std::get_if<Sequence>(&kind_)) return s->n;
  const auto& o = std::get<Operators>(kind_);
  return o.domain->dim() * o.codomain->dim();
}

const SpaceSpec& SpaceSpec::domain() const {
  if (is_sequence()) throw DimensionError("sequence space has no domain");
  return *std::get<Operators>(kind_).domain;
}

const SpaceSpec& SpaceSpec::codomain() const {
  if (is_sequence()) throw DimensionError("sequence space has no codomain");
  return *std::get<Operators>(kind_).codomain;
}

bool SpaceSpec::is_hilbert() const noexcept {
  if (const auto* s = std::get_if<Sequence>(&kind_)) return s->q == 2.0 || s->n == 1;
  const auto& o = std::get<Operators>(kind_);
  return o.domain->is_hilbert() && o.codomain->is_hilbert();
}

std::string SpaceSpec::describe() const {
  std::ostringstream os;
  if (const auto* s = std::get_if<Sequence>(&kind_)) {
    os << "l^" << (std::isinf(s->q) ? std::string("inf") : std::to_string(s->q)) << "_" << s->n;
  } else {
    os << "L(" << domain().describe() << ", " << codomain().describe() << ")";
  }
  return os.str();
}

bool operator==(const SpaceSpec& a, const SpaceSpec& b) {
  if (a.is_sequence() != b.is_sequence()) return false;
  if (a.is_sequence()) {
    const auto& x = std::get<SpaceSpec::Sequence>(a.kind_);
    const auto& y = std::get<SpaceSpec::Sequence>(b.kind_);
    return x.q == y.q && x.n == y.n;
  }
  return a.domain() == b.domain() && a.codomain() == b.codomain();
}

Operator::Operator(Eigen::MatrixXd matrix, SpaceSpec domain, SpaceSpec codomain)
    : matrix_(std::move(matrix)), domain_(std::move(domain)), codomain_(std::move(codomain)) {
  if (!domain_.is_sequence() || !codomain_.is_sequence()) {
    throw DimensionError("operators act between sequence spaces");
  }
  if (static_cast<std::size_t>(matrix_.rows()) != codomain_.dim() ||
      static_cast<std::size_t>(matrix_.cols()) != domain_.dim()) {
    throw DimensionError("operator matrix shape does not match " + space().describe());
  }
}

Operator Operator::from_point(const SpaceSpec& op_space, std::span<const double> coords) {
  if (!op_space.is_operator()) throw DimensionError("not an operator space");
  if (coords.size() != op_space.dim()) throw DimensionError("operator coordinate count mismatch");
  const auto rows = static_cast<Eigen::Index>(op_space.codomain().dim());
  const auto cols = static_cast<Eigen::Index>(op_space.domain().dim());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = coords[static_cast<std::size_t>(r * cols + c)];
  }
  return Operator(std::move(m), op_space.domain(), op_space.codomain());
}

Operator Operator::identity(const SpaceSpec& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  return Operator(Eigen::MatrixXd::Identity(n, n), space, space);
}

Vector Operator::apply(std::span<const double> x) const {
  if (x.size() != domain_.dim()) throw DimensionError("vector does not belong to the operator domain");
  return to_vector(matrix_ * to_eigen(x));
}

Vector Operator::coordinates() const {
  Vector out;
  out.reserve(static_cast<std::size_t>(matrix_.size()));
  for (Eigen::Index r = 0; r < matrix_.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix_.cols(); ++c) out.push_back(matrix_(r, c));
  }
  return out;
}

Operator Operator::scaled(double factor) const { return Operator(matrix_ * factor, domain_, codomain_); }

Operator compose(const Operator& outer, const Operator& inner) {
  if (!(outer.domain() == inner.codomain())) throw DimensionError("composition of incompatible operators");
  return Operator(outer.matrix() * inner.matrix(), inner.domain(), outer.codomain());
}

double dual_exponent(double q) {
  if (q == 1.0) return kInf;
  if (std::isinf(q)) return 1.0;
  return q / (q - 1.0);
}

double norm(const SpaceSpec& space, std::span<const double> x) {
  if (x.size() != space.dim()) {
    throw DimensionError("vector of length " + std::to_string(x.size()) + " does not belong to " +
                         space.describe());
  }
  if (space.is_sequence()) return lq_norm(space.exponent(), x);
  return op_norm(Operator::from_point(space, x)).value;
}

double norm_pow(const SpaceSpec& space, std::span<const double> x, double p) {
  if (space.is_sequence() && space.exponent() == p && !std::isinf(p) && x.size() == space.dim()) {
    double s = 0.0;
    if (p == 2.0) {
      for (double v : x) s += v * v;
    } else if (p == 1.0) {
      for (double v : x) s += std::abs(v);
    } else {
      for (double v : x) s += std::pow(std::abs(v), p);
    }
    return s;
  }
  const double n = norm(space, x);
  if (p == 1.0) return n;
  if (p == 2.0) return n * n;
  return std::pow(n, p);
}

OpNorm op_norm(const Operator& t, const OpNormParams& params) {
  const Eigen::MatrixXd& a = t.matrix();
  const auto cols = a.cols();
  const double qin = t.domain().exponent();
  const double qout = t.codomain().exponent();

  if (a.isZero(0.0)) return finish(t, Eigen::VectorXd::Zero(cols), false);

  if (qin == 2.0 && qout == 2.0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    OpNorm out = finish(t, svd.matrixV().col(0), false);
    out.value = svd.singularValues()[0];
    return out;
  }

  // Extreme points of the l^1 ball are the signed basis vectors.
  if (qin == 1.0 || cols == 1) {
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::VectorXd col = a.col(c);
      const double v = lq_norm(qout, std::span<const double>(col.data(), col.size()));
      if (v > best_norm) {
        best_norm = v;
        best = c;
      }
    }
    return finish(t, Eigen::VectorXd::Unit(cols, best), false);
  }

  // |T|_{q -> inf} is the largest dual norm of a row.
  if (std::isinf(qout) || a.rows() == 1) {
    const double dual = dual_exponent(qin);
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const Eigen::VectorXd row = a.row(r).transpose();
      const double v = lq_norm(dual, std::span<const double>(row.data(), row.size()));
      if (v > best_norm) {
        best_norm = v;
        best = r;
      }
    }
    const Eigen::VectorXd row = a.row(best).transpose();
    return finish(t, duality_map(row, dual), false);
  }

  // Extreme points of the l^inf ball are sign vectors; small cases are enumerated.
  if (std::isinf(qin) && cols <= 16) {
    Eigen::VectorXd best = Eigen::VectorXd::Ones(cols);
    double best_ratio = -1.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (cols - 1)); ++mask) {
      Eigen::VectorXd s(cols);
      for (Eigen::Index c = 0; c < cols; ++c) s[c] = (mask >> c) & 1 ? -1.0 : 1.0;
      const double r = ratio(t, s);
      if (r > best_ratio) {
        best_ratio = r;
        best = s;
      }
    }
    return finish(t, best, false);
  }

  // General pair: nonlinear power iteration from many starts.
  Eigen::VectorXd best = Eigen::VectorXd::Unit(cols, 0);
  double best_ratio = ratio(t, best);
  auto consider = [&](const Eigen::VectorXd& x) {
    const double r = ratio(t, x);
    if (r > best_ratio) {
      best_ratio = r;
      best = x;
    }
  };
  for (Eigen::Index c = 1; c < cols; ++c) consider(Eigen::VectorXd::Unit(cols, c));
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    consider(svd.matrixV().col(0));
  }
  const double qin_dual = dual_exponent(qin);
  for (std::size_t r = 0; r < params.restarts; ++r) {
    CounterRng rng(params.seed, 0x0b5eULL, r);
    Eigen::VectorXd x(cols);
    for (Eigen::Index c = 0; c < cols; ++c) x[c] = rng.normal();
    if (r == 0) x = best;
    for (std::size_t it = 0; it < params.iterations; ++it) {
      consider(x);
      const Eigen::VectorXd y = a * x;
      const Eigen::VectorXd g = a.transpose() * duality_map(y, qout);
      const Eigen::VectorXd next = duality_map(g, qin_dual);
      if (next.isZero(0.0)) break;
      x = next;
    }
    consider(x);
  }
  return finish(t, best, true);
}

Operator elementary_tensor(const SpaceSpec& domain, std::span<const double> fstar,
                           const SpaceSpec& codomain, std::span<const double> e) {
  if (fstar.size() != domain.dim() || e.size() != codomain.dim()) {
    throw DimensionError("elementary tensor factors do not match the spaces");
  }
  Eigen::MatrixXd m = to_eigen(e) * to_eigen(fstar).transpose();
  return Operator(std::move(m), domain, codomain);
}

}  // namespace drl
