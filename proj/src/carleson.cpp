#include "drl/carleson.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drl/error.hpp"
#include "drl/parallel.hpp"
#include "drl/rng.hpp"

namespace drl {

namespace {

double root(double m, double p) {
  if (m <= 0.0) return 0.0;
  if (p == 1.0) return m;
  if (p == 2.0) return std::sqrt(m);
  return std::pow(m, 1.0 / p);
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

std::vector<Vector> collect(std::span<const double> flat, std::size_t dim, std::size_t from, std::size_t to) {
  std::vector<Vector> out;
  for (std::size_t j = from; j < to; ++j) {
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(j * dim),
                     flat.begin() + static_cast<std::ptrdiff_t>((j + 1) * dim));
  }
  return out;
}

MomentOptions atom_options(const MomentOptions& base, std::size_t atom) {
  MomentOptions o = base;
  o.seed = mix64(base.seed ^ mix64(atom + 1));
  return o;
}

/// Multiplies an X-valued point by an F-valued point.
void multiply(const SpaceSpec& f_space, std::span<const double> value, std::span<const double> theta,
              std::span<double> out) {
  if (f_space.is_sequence()) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = value[c] * theta[0];
    return;
  }
  const std::size_t cols = f_space.domain().dim();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += value[r * cols + c] * theta[c];
    out[r] = s;
  }
}

/// Moment of the vectors with the given indices (exact enumeration).
double subset_moment(const SpaceSpec& space, std::span<const double> flat, std::span<const int> indices,
                     double p) {
  const std::size_t dim = space.dim();
  std::vector<double> sub;
  std::size_t count = 0;
  for (int j : indices) {
    const auto v = flat.subspan(static_cast<std::size_t>(j) * dim, dim);
    if (all_zero(v)) continue;
    sub.insert(sub.end(), v.begin(), v.end());
    ++count;
  }
  return detail::exact_moment(space, sub, count, p);
}

}  // namespace

CarlesonFamily::CarlesonFamily(int level, SpaceSpec space, std::vector<DyadicFunction> funcs)
    : level_(level), space_(std::move(space)), funcs_(std::move(funcs)) {
  if (level_ < 0) throw RangeError("Carleson family level must be nonnegative");
  const std::size_t terms = static_cast<std::size_t>(level_) + 1;
  if (funcs_.size() > terms) throw DimensionError("Carleson family has more members than levels");
  for (const auto& f : funcs_) {
    if (f.level() != level_ || !(f.space() == space_)) {
      throw DimensionError("Carleson family members must share level and space");
    }
  }
  while (funcs_.size() < terms) funcs_.push_back(DyadicFunction::zeros(level_, space_));
}

CarlesonFamily CarlesonFamily::zeros(int level, SpaceSpec space) {
  return CarlesonFamily(level, std::move(space), {});
}

std::vector<std::size_t> CarlesonFamily::support() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < funcs_.size(); ++j) {
    if (!all_zero(funcs_[j].values())) out.push_back(j);
  }
  return out;
}

ScalarDyadicFunction tail_energy(const CarlesonFamily& theta, int m, double p, const MomentOptions& options) {
  if (m < 0 || m > theta.level()) throw RangeError("tail level must lie in [0, L]");
  const std::size_t atoms = std::size_t{1} << theta.level();
  ScalarDyadicFunction out{theta.level(), std::vector<double>(atoms, 0.0)};
  parallel_for(atoms, [&](std::size_t i) {
    std::vector<Vector> xs;
    for (std::size_t j = static_cast<std::size_t>(m); j < theta.size(); ++j) {
      const auto v = theta.at(j, i);
      if (!all_zero(v)) xs.emplace_back(v.begin(), v.end());
    }
    if (!xs.empty()) out.values[i] = rad_moment(theta.space(), xs, p, atom_options(options, i)).value;
  });
  return out;
}

double car_constant(const CarlesonFamily& theta, double p, const MomentOptions& options) {
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("Carleson exponent must lie in [1, inf)");
  const int level = theta.level();
  double best = 0.0;
  for (int m = 0; m <= level; ++m) {
    const auto tail = tail_energy(theta, m, p, options);
    const std::size_t width = std::size_t{1} << (level - m);
    for (std::size_t b = 0; b < (std::size_t{1} << m); ++b) {
      CompensatedSum s;
      for (std::size_t i = b * width; i < (b + 1) * width; ++i) s.add(tail.values[i]);
      // 2^m * 2^-L * sum = average over the atom
      best = std::max(best, std::ldexp(s.value(), m - level));
    }
  }
  return root(best, p);
}

SpaceSpec embedding_codomain(const SpaceSpec& f_space, const SpaceSpec& theta_space) {
  if (f_space.is_sequence()) {
    if (theta_space.dim() != 1) {
      throw DimensionError("vector-valued f needs scalar theta, got " + theta_space.describe());
    }
    return f_space;
  }
  if (!(f_space.domain() == theta_space)) {
    throw DimensionError("operator values of f act on " + f_space.domain().describe() + ", not on " +
                         theta_space.describe());
  }
  return f_space.codomain();
}

EmbeddingImage::EmbeddingImage(int level, SpaceSpec space, std::size_t terms)
    : level_(level), space_(std::move(space)), terms_(terms), dim_(space_.dim()),
      data_((std::size_t{1} << level) * terms * dim_, 0.0) {}

std::span<const double> EmbeddingImage::at(std::size_t atom, std::size_t j) const {
  return {data_.data() + (atom * terms_ + j) * dim_, dim_};
}

std::span<double> EmbeddingImage::at(std::size_t atom, std::size_t j) {
  return {data_.data() + (atom * terms_ + j) * dim_, dim_};
}

std::span<const double> EmbeddingImage::sequence(std::size_t atom) const {
  return {data_.data() + atom * terms_ * dim_, terms_ * dim_};
}

std::vector<Vector> EmbeddingImage::vectors(std::size_t atom) const {
  return collect(sequence(atom), dim_, 0, terms_);
}

EmbeddingImage embed(const CarlesonFamily& theta, const DyadicFunction& f) {
  if (f.level() != theta.level()) throw DimensionError("f and theta must share the dyadic level");
  const SpaceSpec e = embedding_codomain(f.space(), theta.space());
  const Martingale m(f);
  EmbeddingImage image(f.level(), e, theta.size());
  for (std::size_t i = 0; i < f.atoms(); ++i) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
      multiply(f.space(), m.at(static_cast<int>(j), i), theta.at(j, i), image.at(i, j));
    }
  }
  return image;
}

double embed_norm(const CarlesonFamily& theta, const DyadicFunction& f, double p, const MomentOptions& options) {
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("embedding exponent must lie in [1, inf)");
  const auto image = embed(theta, f);
  std::vector<double> per_atom(image.atoms(), 0.0);
  parallel_for(image.atoms(), [&](std::size_t i) {
    if (all_zero(image.sequence(i))) return;
    per_atom[i] = rad_moment(image.space(), image.vectors(i), p, atom_options(options, i)).value;
  });
  CompensatedSum s;
  for (double v : per_atom) s.add(v);
  return root(std::ldexp(s.value(), -image.level()), p);
}

OperatorNormEstimate operator_norm_search(const CarlesonFamily& theta, const SpaceSpec& f_space, double p,
                                          const SearchParams& params, std::span<const DyadicFunction> initial) {
  embedding_codomain(f_space, theta.space());
  const int level = theta.level();
  const std::size_t atoms = std::size_t{1} << level;
  const std::size_t dim = f_space.dim();

  auto evaluate = [&](const DyadicFunction& f) {
    const double denom = lp_norm(f, p);
    if (denom == 0.0) return 0.0;
    return embed_norm(theta, f, p) / denom;
  };

  std::vector<DyadicFunction> pool(initial.begin(), initial.end());
  for (const auto& f : pool) {
    if (f.level() != level || !(f.space() == f_space)) throw DimensionError("initial function has the wrong shape");
  }
  const Vector ones(dim, 1.0);
  pool.push_back(DyadicFunction::constant(level, f_space, ones));
  if (atoms <= 64) {
    for (std::size_t i = 0; i < atoms; ++i) {
      auto f = DyadicFunction::zeros(level, f_space);
      std::fill(f.at(i).begin(), f.at(i).end(), 1.0);
      pool.push_back(std::move(f));
    }
  }
  std::vector<double> scores(pool.size());
  for (std::size_t c = 0; c < pool.size(); ++c) scores[c] = evaluate(pool[c]);

  std::vector<DyadicFunction> runs(params.restarts, DyadicFunction::zeros(level, f_space));
  std::vector<double> run_scores(params.restarts, 0.0);
  parallel_for(params.restarts, [&](std::size_t r) {
    CounterRng rng(params.seed, 0xca71ULL, r);
    auto f = DyadicFunction::zeros(level, f_space);
    std::vector<double> values(atoms * dim);
    for (double& v : values) v = rng.normal();
    f = DyadicFunction(level, f_space, std::move(values));
    double score = evaluate(f);
    std::vector<double> step(atoms, 0.5);
    for (std::size_t sweep = 0; sweep < params.sweeps; ++sweep) {
      for (std::size_t i = 0; i < atoms; ++i) {
        auto trial = f;
        for (double& v : trial.at(i)) v += step[i] * rng.normal();
        const double t = evaluate(trial);
        if (t > score * (1.0 + 1e-12)) {
          f = std::move(trial);
          score = t;
          step[i] = std::min(step[i] * 1.5, 4.0);
        } else {
          step[i] *= 0.6;
        }
      }
    }
    runs[r] = std::move(f);
    run_scores[r] = score;
  });
  for (std::size_t r = 0; r < runs.size(); ++r) {
    pool.push_back(std::move(runs[r]));
    scores.push_back(run_scores[r]);
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < pool.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return OperatorNormEstimate{scores[best], true, pool[best]};
}

double StoppingDecomposition::prefix_bound(std::size_t atom, int j) const {
  return prefix[atom * static_cast<std::size_t>(level + 1) + static_cast<std::size_t>(j)];
}

int StoppingDecomposition::stop(std::size_t atom, int k) const {
  if (k > k_max) return kNever;
  const int kk = std::max(k, k_min);
  return tau[atom * static_cast<std::size_t>(k_max - k_min + 1) + static_cast<std::size_t>(kk - k_min)];
}

std::vector<int> StoppingDecomposition::block(std::size_t atom, int k) const {
  std::vector<int> out;
  if (k < k_min || k >= k_max) return out;
  const int from = stop(atom, k);
  if (from == kNever) return out;
  const int to = std::min(stop(atom, k + 1), level + 1);
  for (int j = from; j < to; ++j) out.push_back(j);
  return out;
}

std::vector<int> StoppingDecomposition::leading(std::size_t atom) const {
  std::vector<int> out;
  const int first = std::min(stop(atom, k_min), level + 1);
  for (int j = start; j < first; ++j) out.push_back(j);
  return out;
}

StoppingDecomposition stopping_decompose(const DyadicFunction& f, int start, RBoundMode mode,
                                         const SearchParams& params) {
  if (start < 0 || start > f.level()) throw RangeError("truncation level must lie in [0, L]");
  if (mode == RBoundMode::hilbert && !f.space().is_hilbert()) {
    throw RangeError("Hilbert mode needs values in l^2 or in operators between l^2 spaces");
  }
  StoppingDecomposition d;
  d.level = f.level();
  d.start = start;
  const std::size_t atoms = f.atoms();
  const std::size_t width = static_cast<std::size_t>(d.level) + 1;
  d.prefix.assign(atoms * width, 0.0);

  const Martingale m(f);
  parallel_for(atoms, [&](std::size_t i) {
    std::vector<std::span<const double>> values;
    for (int j = 0; j <= d.level; ++j) values.push_back(m.at(j, i));
    const auto ops = as_operators(f.space(), values);
    double running = 0.0;
    for (int j = 0; j <= d.level; ++j) {
      const std::span<const Operator> prefix(ops.data(), static_cast<std::size_t>(j) + 1);
      const double r = mode == RBoundMode::hilbert ? rbound_hilbert(prefix) : rbound_search(prefix, 2.0, params).value;
      running = std::max(running, r);
      d.prefix[i * width + static_cast<std::size_t>(j)] = running;
    }
  });

  double min_positive = kInf;
  double max_value = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    for (int j = start; j <= d.level; ++j) {
      const double v = d.prefix_bound(i, j);
      if (v > 0.0) min_positive = std::min(min_positive, v);
    }
    max_value = std::max(max_value, d.maximal(i));
  }
  if (max_value > 0.0) {
    d.k_min = static_cast<int>(std::floor(std::log2(min_positive))) - 1;
    while (std::ldexp(1.0, d.k_min) >= min_positive) --d.k_min;
    d.k_max = static_cast<int>(std::ceil(std::log2(max_value)));
    while (std::ldexp(1.0, d.k_max) < max_value) ++d.k_max;
  }

  const std::size_t grid = static_cast<std::size_t>(d.k_max - d.k_min + 1);
  d.tau.assign(atoms * grid, StoppingDecomposition::kNever);
  for (std::size_t i = 0; i < atoms; ++i) {
    for (int k = d.k_min; k <= d.k_max; ++k) {
      const double threshold = std::ldexp(1.0, k);
      for (int j = start; j <= d.level; ++j) {
        if (d.prefix_bound(i, j) > threshold) {
          d.tau[i * grid + static_cast<std::size_t>(k - d.k_min)] = j;
          break;
        }
      }
    }
  }
  return d;
}

AuditReport lemma_audit(const CarlesonFamily& theta, const DyadicFunction& f, double p, double r, int start,
                        double tol) {
  if (!(p > 1.0) || std::isinf(p)) throw RangeError("audit exponent p must lie in (1, inf)");
  if (!(r >= 1.0 && r <= 2.0)) throw RangeError("type exponent r must lie in [1, 2]");
  if (!f.space().is_hilbert() || !theta.space().is_hilbert()) {
    throw RangeError("the audit asserts inequalities only with exact (Hilbert-space) R-bounds");
  }
  if (f.level() != theta.level()) throw DimensionError("f and theta must share the dyadic level");

  AuditReport rep;
  rep.p = p;
  rep.r = r;
  rep.s = std::min(p, r);
  rep.start = start;
  rep.tolerance = tol;
  const double s = rep.s;
  rep.b_hard = s == 2.0;

  const int level = f.level();
  const std::size_t atoms = f.atoms();
  const auto image = embed(theta, f);
  const SpaceSpec& e = image.space();
  const SpaceSpec& fs = theta.space();
  const std::size_t terms = image.terms();
  const std::size_t fdim = fs.dim();

  const auto d = stopping_decompose(f, start, RBoundMode::hilbert);
  rep.k_min = d.k_min;
  rep.k_max = d.k_max;

  std::vector<int> tail_idx;
  for (int j = start; j <= level; ++j) tail_idx.push_back(j);

  // theta values per atom as one flat block, for subset moments.
  auto theta_flat = [&](std::size_t i) {
    std::vector<double> out(terms * fdim);
    for (std::size_t j = 0; j < terms; ++j) {
      const auto v = theta.at(j, i);
      std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(j * fdim));
    }
    return out;
  };

  struct AtomTerms {
    double lhs = 0.0;
    double a_error = 0.0;
    bool a_evaluated = true;
    double b_excess = -kInf;
    std::vector<double> b_blocks;  // E|sum_{J_k} eps u|^s per k
    std::vector<double> a_blocks;  // 2^{(k+1)s} E|sum_{J_k} eps theta|^s per k
    std::vector<double> theta_p;   // E|sum_{J_k} eps theta|^p per k
    std::vector<double> tail_at_stop;  // E|sum_{j>=tau_k} eps theta|^p per k, 0 if tau_k infinite
  };
  const int kcount = std::max(0, d.k_max - d.k_min);
  std::vector<AtomTerms> per(atoms);
  parallel_for(atoms, [&](std::size_t i) {
    AtomTerms& t = per[i];
    const auto u = image.sequence(i);
    const auto th = theta_flat(i);
    t.lhs = subset_moment(e, u, tail_idx, p);

    // (a) randomization over blocks.
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<Vector> us;
    const auto lead = d.leading(i);
    auto local = [&](const std::vector<int>& js) {
      std::vector<std::size_t> b;
      for (int j : js) {
        b.push_back(us.size());
        us.emplace_back(u.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j) * e.dim()),
                        u.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(j) + 1) * e.dim()));
      }
      return b;
    };
    if (!lead.empty()) blocks.push_back(local(lead));
    for (int k = d.k_min; k < d.k_max; ++k) {
      auto js = d.block(i, k);
      if (!js.empty()) blocks.push_back(local(js));
    }
    if (us.size() + blocks.size() <= kBlockCheckMaxBits) {
      const auto br = block_randomization_check(e, us, blocks, p, tol);
      t.a_error = std::abs(br.lhs - br.rhs) / std::max(1.0, br.lhs);
    } else {
      t.a_evaluated = false;
    }

    t.b_blocks.assign(static_cast<std::size_t>(kcount), 0.0);
    t.a_blocks.assign(static_cast<std::size_t>(kcount), 0.0);
    t.theta_p.assign(static_cast<std::size_t>(kcount), 0.0);
    t.tail_at_stop.assign(static_cast<std::size_t>(kcount), 0.0);
    for (int k = d.k_min; k < d.k_max; ++k) {
      const auto idx = static_cast<std::size_t>(k - d.k_min);
      const auto js = d.block(i, k);
      if (!js.empty()) {
        const double lhs_b = subset_moment(e, u, js, s);
        const double theta_s = subset_moment(fs, th, js, s);
        const double rhs_b = std::pow(2.0, (k + 1) * s) * theta_s;
        t.b_excess = std::max(t.b_excess, (lhs_b - rhs_b) / std::max(1.0, rhs_b));
        t.b_blocks[idx] = lhs_b;
        t.a_blocks[idx] = std::pow(2.0, (k + 1) * s) * theta_s;
        t.theta_p[idx] = subset_moment(fs, th, js, p);
      }
      const int stop = d.stop(i, k);
      if (stop != StoppingDecomposition::kNever) {
        std::vector<int> tail;
        for (int j = stop; j <= level; ++j) tail.push_back(j);
        t.tail_at_stop[idx] = subset_moment(fs, th, tail, p);
      }
    }
  });

  const double mu = std::ldexp(1.0, -level);
  CompensatedSum lhs;
  for (const auto& t : per) {
    lhs.add(t.lhs);
    rep.a_max_error = std::max(rep.a_max_error, t.a_error);
    rep.a_evaluated = rep.a_evaluated && t.a_evaluated;
    rep.b_max_excess = std::max(rep.b_max_excess, t.b_excess);
  }
  rep.lhs = lhs.value() * mu;
  rep.a_holds = rep.a_evaluated && rep.a_max_error <= tol;
  if (kcount == 0) rep.b_max_excess = 0.0;
  rep.b_holds = rep.b_max_excess <= tol;

  // (c)
  CompensatedSum t1, t2;
  for (const auto& t : per) {
    double sb = 0.0, sa = 0.0;
    for (int k = 0; k < kcount; ++k) {
      sb += t.b_blocks[static_cast<std::size_t>(k)];
      sa += t.a_blocks[static_cast<std::size_t>(k)];
    }
    t1.add(std::pow(sb, p / s));
    t2.add(std::pow(sa, p / s));
  }
  const double type_side = std::pow(t1.value() * mu, s / p);
  const double triangle_left = std::pow(t2.value() * mu, s / p);
  double triangle_right = 0.0;
  for (int k = 0; k < kcount; ++k) {
    CompensatedSum a;
    for (const auto& t : per) a.add(std::pow(t.a_blocks[static_cast<std::size_t>(k)], p / s));
    triangle_right += std::pow(a.value() * mu, s / p);
  }
  const double lhs_s = std::pow(rep.lhs, s / p);
  rep.c_type_constant = type_side > 0.0 ? lhs_s / type_side : (lhs_s > 0.0 ? kInf : 0.0);
  rep.c_minkowski_ratio = triangle_right > 0.0 ? triangle_left / triangle_right : 0.0;
  rep.c_finite = std::isfinite(rep.c_type_constant) && std::isfinite(rep.c_minkowski_ratio);

  // (d)
  rep.car = car_constant(theta, p);
  const double car_p = std::pow(rep.car, p);
  double carleson_sum = 0.0;
  for (int k = d.k_min; k < d.k_max; ++k) {
    const auto idx = static_cast<std::size_t>(k - d.k_min);
    CompensatedSum block_integral, stop_integral;
    std::size_t stopped = 0;
    for (std::size_t i = 0; i < atoms; ++i) {
      block_integral.add(per[i].theta_p[idx]);
      stop_integral.add(per[i].tail_at_stop[idx]);
      const bool finite = d.stop(i, k) != StoppingDecomposition::kNever;
      if (finite) ++stopped;
      if (finite != (d.maximal(i) > std::ldexp(1.0, k))) rep.d_stopping_consistent = false;
    }
    const double ik = block_integral.value() * mu;
    const double ck = stop_integral.value() * mu;
    const double bound = car_p * static_cast<double>(stopped) * mu;
    rep.d_contraction_excess = std::max(rep.d_contraction_excess, (ik - ck) / std::max(1.0, ck));
    rep.d_carleson_excess = std::max(rep.d_carleson_excess, (ck - bound) / std::max(1.0, bound));
    carleson_sum += std::pow(2.0, (k + 1) * s) * std::pow(static_cast<double>(stopped) * mu, s / p);
  }
  const double summed_bound = std::pow(rep.car, s) * carleson_sum;
  rep.d_sum_excess = (triangle_right - summed_bound) / std::max(1.0, summed_bound);
  rep.d_holds = rep.d_contraction_excess <= tol && rep.d_carleson_excess <= tol && rep.d_sum_excess <= tol &&
                rep.d_stopping_consistent;

  // (e) The sum over all k in Z: below k_min every level set is {M_R f > 0},
  // which contributes a geometric tail; above k_max the level sets are empty.
  ScalarDyadicFunction mr{level, std::vector<double>(atoms)};
  std::size_t positive = 0;
  for (std::size_t i = 0; i < atoms; ++i) {
    mr.values[i] = d.maximal(i);
    if (mr.values[i] > 0.0) ++positive;
  }
  rep.maximal_lorentz = lorentz_norm(mr, p, s);
  double level_sum = 0.0;
  if (positive > 0) {
    level_sum = std::pow(2.0, d.k_min * s) * std::pow(static_cast<double>(positive) * mu, s / p) /
                (1.0 - std::pow(2.0, -s));
    for (int k = d.k_min; k <= d.k_max; ++k) {
      std::size_t above = 0;
      for (double v : mr.values) above += v > std::ldexp(1.0, k);
      level_sum += std::pow(2.0, (k + 1) * s) * std::pow(static_cast<double>(above) * mu, s / p);
    }
  }
  rep.e_level_sum = level_sum;
  rep.e_lower = s / (1.0 - std::pow(2.0, -s));
  rep.e_upper = rep.e_lower * std::pow(2.0, s);
  const double lorentz_s = std::pow(rep.maximal_lorentz, s);
  if (lorentz_s > 0.0) {
    rep.e_ratio = level_sum / lorentz_s;
    rep.e_holds = rep.e_ratio >= rep.e_lower * (1.0 - tol) && rep.e_ratio <= rep.e_upper * (1.0 + tol);
  } else {
    rep.e_ratio = 0.0;
    rep.e_holds = level_sum == 0.0;
  }

  const double denom = rep.car * rep.maximal_lorentz;
  rep.end_to_end = denom > 0.0 ? root(rep.lhs, p) / denom : (rep.lhs > 0.0 ? kInf : 0.0);
  return rep;
}

WitnessResult witness_family(const DyadicFunction& f, double p, int level, const SearchParams& params) {
  if (level < 0 || level > f.level()) throw RangeError("witness level must lie in [0, L]");
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("witness exponent must lie in [1, inf)");
  const SpaceSpec fs = f.space().is_sequence() ? SpaceSpec::scalars() : f.space().domain();
  const std::size_t fdim = fs.dim();
  const std::size_t slots = static_cast<std::size_t>(level) + 1;
  const std::size_t blocks = std::size_t{1} << level;
  const std::size_t width = std::size_t{1} << (f.level() - level);
  const Martingale m(f);

  std::vector<double> values(blocks, 0.0);
  std::vector<std::vector<double>> xs(blocks, std::vector<double>(slots * fdim, 0.0));
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<std::span<const double>> averages;
    for (int j = 0; j <= level; ++j) averages.push_back(m.block(j, b >> (level - j)));
    const auto ops = as_operators(f.space(), averages);
    const auto est = rbound_fixed_selection(ops, p, params);
    values[b] = est.value;
    std::vector<double> flat;
    for (const auto& v : est.witness.vectors) flat.insert(flat.end(), v.begin(), v.end());
    const double sup = detail::sup_pattern_norm(fs, flat, slots);
    if (sup > 0.0 && est.value > 0.0) {
      for (std::size_t c = 0; c < flat.size(); ++c) xs[b][c] = flat[c] / sup;
    }
  });

  std::vector<DyadicFunction> funcs;
  for (std::size_t j = 0; j < slots; ++j) {
    auto g = DyadicFunction::zeros(f.level(), fs);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t i = b * width; i < (b + 1) * width; ++i) {
        std::copy(xs[b].begin() + static_cast<std::ptrdiff_t>(j * fdim),
                  xs[b].begin() + static_cast<std::ptrdiff_t>((j + 1) * fdim), g.at(i).begin());
      }
    }
    funcs.push_back(std::move(g));
  }
  CarlesonFamily family(f.level(), fs, std::move(funcs));

  CompensatedSum integral;
  for (double v : values) integral.add(std::pow(v, p));
  WitnessResult out{std::move(family), std::ldexp(integral.value(), -level), 0.0, std::move(values)};
  out.embedding_integral = std::pow(embed_norm(out.family, f, p), p);
  return out;
}

}  // namespace drl
