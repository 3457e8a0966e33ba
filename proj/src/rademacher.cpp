#include "drl/rademacher.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drl/error.hpp"
#include "drl/parallel.hpp"
#include "drl/rng.hpp"

namespace drl {

namespace {

constexpr std::uint64_t kMonteCarloChunk = 4096;

void check_exponent(double p) {
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("moment exponent must lie in [1, inf)");
}

std::vector<double> flatten(const SpaceSpec& space, std::span<const Vector> xs) {
  const std::size_t dim = space.dim();
  std::vector<double> flat;
  flat.reserve(xs.size() * dim);
  for (const auto& x : xs) {
    if (x.size() != dim) {
      throw DimensionError("vector of length " + std::to_string(x.size()) + " does not belong to " +
                           space.describe());
    }
    flat.insert(flat.end(), x.begin(), x.end());
  }
  return flat;
}

/// Drops zero vectors, makes the first nonzero coordinate of each vector
/// positive and sorts lexicographically. The moment is invariant under all
/// three operations, so equivalent inputs reach the same enumeration.
std::vector<Vector> canonical(std::span<const Vector> xs) {
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    auto lead = std::find_if(x.begin(), x.end(), [](double v) { return v != 0.0; });
    if (lead == x.end()) continue;
    Vector v = x;
    if (*lead < 0.0) {
      for (double& c : v) c = -c;
    }
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Table of all signed sums of `nbits` consecutive vectors starting at
/// `first`, optionally offset by the vector at index 0 with sign +1.
std::vector<double> sign_table(std::span<const double> flat, std::size_t dim, std::size_t first,
                               std::size_t nbits, bool with_anchor) {
  const std::size_t rows = std::size_t{1} << nbits;
  std::vector<double> table(rows * dim, 0.0);
  for (std::size_t mask = 0; mask < rows; ++mask) {
    double* row = table.data() + mask * dim;
    for (std::size_t c = 0; c < dim; ++c) {
      double s = with_anchor ? flat[c] : 0.0;
      for (std::size_t b = 0; b < nbits; ++b) {
        const double x = flat[(first + b) * dim + c];
        s += (mask >> b) & 1 ? -x : x;
      }
      row[c] = s;
    }
  }
  return table;
}

template <class Reduce>
void enumerate_patterns(const SpaceSpec& space, std::span<const double> flat, std::size_t count,
                        std::vector<double>& per_block, Reduce&& reduce) {
  const std::size_t dim = space.dim();
  // The pattern -s has the same norm as s, so the first sign is pinned to +1.
  const std::size_t free = count - 1;
  const std::size_t lo_bits = free / 2;
  const std::size_t hi_bits = free - lo_bits;
  const auto lo = sign_table(flat, dim, 1, lo_bits, false);
  const auto hi = sign_table(flat, dim, 1 + lo_bits, hi_bits, true);
  const std::size_t lo_rows = std::size_t{1} << lo_bits;
  const std::size_t hi_rows = std::size_t{1} << hi_bits;
  per_block.assign(hi_rows, 0.0);
  parallel_for(hi_rows, [&](std::size_t h) {
    std::vector<double> v(dim);
    const double* hrow = hi.data() + h * dim;
    per_block[h] = reduce(lo_rows, [&](std::size_t l) {
      const double* lrow = lo.data() + l * dim;
      for (std::size_t c = 0; c < dim; ++c) v[c] = hrow[c] + lrow[c];
      return v.data();
    });
  });
}

}  // namespace

namespace detail {

NormPower::NormPower(const SpaceSpec& space, double p)
    : space_(&space), p_(p), q_(space.is_sequence() ? space.exponent() : 0.0), dim_(space.dim()),
      sequence_(space.is_sequence()) {}

double NormPower::norm(const double* v) const {
  return drl::norm(*space_, std::span<const double>(v, dim_));
}

double NormPower::operator()(const double* v) const {
  if (sequence_) {
    if (dim_ == 1) {
      const double a = std::abs(v[0]);
      return p_ == 1.0 ? a : p_ == 2.0 ? a * a : std::pow(a, p_);
    }
    if (q_ == 2.0 && p_ == 2.0) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) s += v[c] * v[c];
      return s;
    }
    if (q_ == 1.0 && p_ == 1.0) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) s += std::abs(v[c]);
      return s;
    }
  }
  return norm_pow(*space_, std::span<const double>(v, dim_), p_);
}

double exact_moment(const SpaceSpec& space, std::span<const double> flat, std::size_t count, double p) {
  if (count == 0) return 0.0;
  if (count > 62) throw RangeError("too many vectors for exact enumeration");
  const NormPower np(space, p);
  std::vector<double> per_block;
  enumerate_patterns(space, flat, count, per_block, [&](std::size_t rows, auto&& row) {
    CompensatedSum s;
    for (std::size_t l = 0; l < rows; ++l) s.add(np(row(l)));
    return s.value();
  });
  CompensatedSum total;
  for (double b : per_block) total.add(b);
  return std::ldexp(total.value(), -static_cast<int>(count - 1));
}

double sup_pattern_norm(const SpaceSpec& space, std::span<const double> flat, std::size_t count) {
  if (count == 0) return 0.0;
  if (count > 62) throw RangeError("too many vectors for exact enumeration");
  const NormPower np(space, 1.0);
  std::vector<double> per_block;
  enumerate_patterns(space, flat, count, per_block, [&](std::size_t rows, auto&& row) {
    double m = 0.0;
    for (std::size_t l = 0; l < rows; ++l) m = std::max(m, np.norm(row(l)));
    return m;
  });
  return *std::max_element(per_block.begin(), per_block.end());
}

}  // namespace detail

SignPattern SignPattern::from_bits(std::uint64_t bits, std::size_t n) {
  SignPattern s;
  s.signs.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.signs[j] = (bits >> j) & 1 ? -1 : 1;
  return s;
}

Vector SignPattern::apply(std::span<const Vector> xs) const {
  if (xs.size() != signs.size()) throw DimensionError("sign pattern length mismatch");
  if (xs.empty()) return {};
  Vector out(xs.front().size(), 0.0);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (xs[j].size() != out.size()) throw DimensionError("vectors of different lengths");
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += signs[j] * xs[j][c];
  }
  return out;
}

RadMoment rad_moment(const SpaceSpec& space, std::span<const Vector> xs, double p,
                     const MomentOptions& options) {
  check_exponent(p);
  const auto flat_input = flatten(space, xs);
  RadMoment out;
  out.p = p;
  out.mode = options.mode;

  if (options.mode == MomentMode::exact) {
    const auto canon = canonical(xs);
    if (canon.size() > options.exact_threshold) {
      throw RangeError("exact enumeration requested for " + std::to_string(canon.size()) +
                       " vectors, above the threshold of " + std::to_string(options.exact_threshold));
    }
    const auto flat = flatten(space, canon);
    out.value = detail::exact_moment(space, flat, canon.size(), p);
    return out;
  }

  out.samples = options.samples;
  out.seed = options.seed;
  if (xs.empty() || options.samples == 0) return out;

  const std::size_t n = xs.size();
  const std::size_t dim = space.dim();
  const detail::NormPower np(space, p);
  const std::uint64_t chunks = (options.samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<double> v(dim);
    CompensatedSum s;
    const std::uint64_t begin = c * kMonteCarloChunk;
    const std::uint64_t end = std::min(options.samples, begin + kMonteCarloChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      CounterRng rng(options.seed, i);
      std::fill(v.begin(), v.end(), 0.0);
      std::uint64_t bits = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j % 64 == 0) bits = rng();
        const bool negative = (bits >> (j % 64)) & 1;
        const double* x = flat_input.data() + j * dim;
        for (std::size_t k = 0; k < dim; ++k) v[k] += negative ? -x[k] : x[k];
      }
      s.add(np(v.data()));
    }
    partial[c] = s.value();
  });
  CompensatedSum total;
  for (double x : partial) total.add(x);
  out.value = total.value() / static_cast<double>(options.samples);
  return out;
}

double rad_norm(const SpaceSpec& space, std::span<const Vector> xs, double p, const MomentOptions& options) {
  const double m = rad_moment(space, xs, p, options).value;
  if (p == 1.0) return m;
  if (p == 2.0) return std::sqrt(m);
  return std::pow(m, 1.0 / p);
}

double kk_ratio(const SpaceSpec& space, std::span<const Vector> xs, double p, double q,
                const MomentOptions& options) {
  const double np = rad_norm(space, xs, p, options);
  const double nq = rad_norm(space, xs, q, options);
  if (nq == 0.0) return 0.0;
  return np / nq;
}

ContractionReport contraction_check(const SpaceSpec& space, std::span<const Vector> xs,
                                    std::span<const double> lambdas, double p, double tol) {
  if (lambdas.size() != xs.size()) throw DimensionError("one multiplier per vector is required");
  std::vector<Vector> scaled(xs.begin(), xs.end());
  double lmax = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    for (double& c : scaled[j]) c *= lambdas[j];
    lmax = std::max(lmax, std::abs(lambdas[j]));
  }
  ContractionReport r;
  r.lhs = rad_moment(space, scaled, p).value;
  r.rhs = std::pow(lmax, p) * rad_moment(space, xs, p).value;
  r.holds = r.lhs <= r.rhs + tol * std::max(1.0, r.rhs);
  return r;
}

BlockReport block_randomization_check(const SpaceSpec& space, std::span<const Vector> xs,
                                      std::span<const std::vector<std::size_t>> blocks, double p, double tol) {
  check_exponent(p);
  const std::size_t n = xs.size();
  const std::size_t k = blocks.size();
  std::vector<int> seen(n, 0);
  for (const auto& b : blocks) {
    for (std::size_t j : b) {
      if (j >= n) throw DimensionError("block index out of range");
      ++seen[j];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw DimensionError("blocks do not partition the index set");
  }
  if (n + k > kBlockCheckMaxBits) {
    throw RangeError("block randomization check is limited to " + std::to_string(kBlockCheckMaxBits) +
                     " sign bits");
  }

  BlockReport r;
  r.lhs = rad_moment(space, xs, p).value;

  const std::size_t dim = space.dim();
  const auto flat = flatten(space, xs);
  const detail::NormPower np(space, p);
  const std::uint64_t inner_rows = std::uint64_t{1} << n;
  std::vector<double> per_pattern(inner_rows, 0.0);
  parallel_for(inner_rows, [&](std::size_t mask) {
    std::vector<double> block_sums(k * dim, 0.0);
    for (std::size_t b = 0; b < k; ++b) {
      for (std::size_t j : blocks[b]) {
        const bool negative = (mask >> j) & 1;
        for (std::size_t c = 0; c < dim; ++c) {
          const double x = flat[j * dim + c];
          block_sums[b * dim + c] += negative ? -x : x;
        }
      }
    }
    std::vector<double> v(dim);
    CompensatedSum s;
    for (std::uint64_t outer = 0; outer < (std::uint64_t{1} << k); ++outer) {
      std::fill(v.begin(), v.end(), 0.0);
      for (std::size_t b = 0; b < k; ++b) {
        const bool negative = (outer >> b) & 1;
        for (std::size_t c = 0; c < dim; ++c) v[c] += negative ? -block_sums[b * dim + c] : block_sums[b * dim + c];
      }
      s.add(np(v.data()));
    }
    per_pattern[mask] = s.value();
  });
  CompensatedSum total;
  for (double x : per_pattern) total.add(x);
  r.rhs = std::ldexp(total.value(), -static_cast<int>(n + k));
  r.equal = std::abs(r.lhs - r.rhs) <= tol * std::max(1.0, r.lhs);
  return r;
}

}  // namespace drl
