#include "drl/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "drl/error.hpp"
#include "drl/parallel.hpp"

namespace drl {

namespace {

constexpr int kMaxLevel = 24;

void check_level(int level) {
  if (level < 0 || level > kMaxLevel) {
    throw RangeError("dyadic level must lie in [0, " + std::to_string(kMaxLevel) + "]");
  }
}

double root(double m, double p) {
  if (m <= 0.0) return 0.0;
  if (p == 1.0) return m;
  if (p == 2.0) return std::sqrt(m);
  return std::pow(m, 1.0 / p);
}

}  // namespace

DyadicFunction::DyadicFunction(int level, SpaceSpec space, std::vector<double> values)
    : level_(level), space_(std::move(space)), dim_(space_.dim()), values_(std::move(values)) {
  check_level(level_);
  if (values_.size() != atoms() * dim_) {
    throw DimensionError("dyadic function at level " + std::to_string(level_) + " needs " +
                         std::to_string(atoms()) + " values in " + space_.describe());
  }
}

DyadicFunction DyadicFunction::zeros(int level, SpaceSpec space) {
  check_level(level);
  const std::size_t n = (std::size_t{1} << level) * space.dim();
  return DyadicFunction(level, std::move(space), std::vector<double>(n, 0.0));
}

DyadicFunction DyadicFunction::constant(int level, SpaceSpec space, std::span<const double> value) {
  auto f = zeros(level, std::move(space));
  if (value.size() != f.dim()) throw DimensionError("constant value outside the space");
  for (std::size_t i = 0; i < f.atoms(); ++i) std::copy(value.begin(), value.end(), f.at(i).begin());
  return f;
}

DyadicFunction& DyadicFunction::operator+=(const DyadicFunction& other) {
  if (other.level_ != level_ || !(other.space_ == space_)) throw DimensionError("adding mismatched dyadic functions");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

DyadicFunction& DyadicFunction::operator*=(double factor) {
  for (double& v : values_) v *= factor;
  return *this;
}

DyadicFunction operator+(DyadicFunction a, const DyadicFunction& b) { return a += b; }
DyadicFunction operator*(double factor, DyadicFunction f) { return f *= factor; }

double DyadicSet::measure() const { return std::ldexp(static_cast<double>(atoms.size()), -level); }

Martingale::Martingale(const DyadicFunction& f) : level_(f.level()), dim_(f.dim()), levels_(f.level() + 1) {
  levels_[level_] = f.values();
  for (int j = level_ - 1; j >= 0; --j) {
    const auto& fine = levels_[j + 1];
    auto& coarse = levels_[j];
    const std::size_t blocks = std::size_t{1} << j;
    coarse.resize(blocks * dim_);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t c = 0; c < dim_; ++c) {
        coarse[b * dim_ + c] = (fine[(2 * b) * dim_ + c] + fine[(2 * b + 1) * dim_ + c]) * 0.5;
      }
    }
  }
}

std::span<const double> Martingale::block(int j, std::size_t b) const {
  return {levels_[static_cast<std::size_t>(j)].data() + b * dim_, dim_};
}

std::span<const double> Martingale::at(int j, std::size_t atom) const {
  return block(j, atom >> (level_ - j));
}

DyadicFunction cond_expect(const DyadicFunction& f, int j) {
  if (j < 0) throw RangeError("conditional expectation level must be nonnegative");
  if (j >= f.level()) return f;
  const Martingale m(f);
  auto out = DyadicFunction::zeros(f.level(), f.space());
  for (std::size_t i = 0; i < f.atoms(); ++i) {
    const auto v = m.at(j, i);
    std::copy(v.begin(), v.end(), out.at(i).begin());
  }
  return out;
}

ScalarDyadicFunction pointwise_norm(const DyadicFunction& f) {
  ScalarDyadicFunction g{f.level(), std::vector<double>(f.atoms())};
  for (std::size_t i = 0; i < f.atoms(); ++i) g.values[i] = norm(f.space(), f.at(i));
  return g;
}

ScalarDyadicFunction maximal_std(const DyadicFunction& f) {
  const Martingale m(f);
  ScalarDyadicFunction g{f.level(), std::vector<double>(f.atoms(), 0.0)};
  // Norms are computed once per level-j block.
  for (int j = 0; j <= f.level(); ++j) {
    const std::size_t blocks = std::size_t{1} << j;
    const std::size_t width = std::size_t{1} << (f.level() - j);
    for (std::size_t b = 0; b < blocks; ++b) {
      const double n = norm(f.space(), m.block(j, b));
      for (std::size_t i = b * width; i < (b + 1) * width; ++i) g.values[i] = std::max(g.values[i], n);
    }
  }
  return g;
}

std::vector<Operator> as_operators(const SpaceSpec& space, std::span<const std::span<const double>> values) {
  std::vector<Operator> ops;
  ops.reserve(values.size());
  for (const auto& v : values) {
    if (space.is_operator()) {
      ops.push_back(Operator::from_point(space, v));
    } else {
      if (v.size() != space.dim()) throw DimensionError("value outside the space");
      Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
      for (std::size_t c = 0; c < v.size(); ++c) m(static_cast<Eigen::Index>(c), 0) = v[c];
      ops.emplace_back(std::move(m), SpaceSpec::scalars(), space);
    }
  }
  return ops;
}

ScalarDyadicFunction maximal_rad(const DyadicFunction& f, RBoundMode mode, const SearchParams& params) {
  if (mode == RBoundMode::hilbert && !f.space().is_hilbert()) {
    throw RangeError("Hilbert mode needs values in l^2 or in operators between l^2 spaces");
  }
  const Martingale m(f);
  ScalarDyadicFunction g{f.level(), std::vector<double>(f.atoms(), 0.0)};
  parallel_for(f.atoms(), [&](std::size_t i) {
    std::vector<std::span<const double>> values;
    for (int j = 0; j <= f.level(); ++j) values.push_back(m.at(j, i));
    const auto ops = as_operators(f.space(), values);
    g.values[i] = mode == RBoundMode::hilbert ? rbound_hilbert(ops) : rbound_search(ops, 2.0, params).value;
  });
  return g;
}

double lp_norm(const DyadicFunction& f, double p) {
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("L^p exponent must lie in [1, inf)");
  CompensatedSum s;
  for (std::size_t i = 0; i < f.atoms(); ++i) s.add(norm_pow(f.space(), f.at(i), p));
  return root(std::ldexp(s.value(), -f.level()), p);
}

double lp_norm(const ScalarDyadicFunction& g, double p) {
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("L^p exponent must lie in [1, inf)");
  CompensatedSum s;
  for (double v : g.values) s.add(std::pow(std::abs(v), p));
  return root(std::ldexp(s.value(), -g.level), p);
}

double lorentz_norm(const ScalarDyadicFunction& g, double p, double s) {
  if (!(p > 1.0) || std::isinf(p)) throw RangeError("Lorentz exponent p must lie in (1, inf)");
  if (!(s >= 1.0) || std::isinf(s)) throw RangeError("Lorentz exponent s must lie in [1, inf)");
  // Distinct positive values, largest first, with their atom counts.
  std::map<double, std::size_t, std::greater<>> counts;
  for (double v : g.values) {
    if (std::abs(v) > 0.0) ++counts[std::abs(v)];
  }
  // mu(g > t) = W_k for t in [v_{k+1}, v_k), and the integral of
  // t^{s-1} W_k^{s/p} over that interval is W_k^{s/p} (v_k^s - v_{k+1}^s) / s.
  CompensatedSum total;
  std::size_t cumulative = 0;
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    cumulative += it->second;
    const double w = std::ldexp(static_cast<double>(cumulative), -g.level);
    const auto next = std::next(it);
    const double lower = next == counts.end() ? 0.0 : next->first;
    total.add(std::pow(w, s / p) * (std::pow(it->first, s) - std::pow(lower, s)) / s);
  }
  return root(total.value(), s);
}

Vector integrate(const DyadicFunction& f, const DyadicSet& set) {
  Vector out(f.dim(), 0.0);
  const std::size_t set_atoms = std::size_t{1} << set.level;
  for (std::size_t a : set.atoms) {
    if (a >= set_atoms) throw DimensionError("dyadic set atom out of range");
    if (set.level <= f.level()) {
      const std::size_t width = std::size_t{1} << (f.level() - set.level);
      for (std::size_t i = a * width; i < (a + 1) * width; ++i) {
        const auto v = f.at(i);
        for (std::size_t c = 0; c < f.dim(); ++c) out[c] += std::ldexp(v[c], -f.level());
      }
    } else {
      const auto v = f.at(a >> (set.level - f.level()));
      for (std::size_t c = 0; c < f.dim(); ++c) out[c] += std::ldexp(v[c], -set.level);
    }
  }
  return out;
}

double integrate(const ScalarDyadicFunction& g, const DyadicSet& set) {
  const DyadicFunction f(g.level, SpaceSpec::scalars(), g.values);
  return integrate(f, set)[0];
}

}  // namespace drl
