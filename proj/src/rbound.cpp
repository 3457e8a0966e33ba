#include "drl/rbound.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drl/error.hpp"
#include "drl/parallel.hpp"
#include "drl/rademacher.hpp"
#include "drl/rng.hpp"

namespace drl {

namespace {

constexpr double kImprove = 1e-12;

double root(double m, double p) {
  if (m <= 0.0) return 0.0;
  if (p == 1.0) return m;
  if (p == 2.0) return std::sqrt(m);
  return std::pow(m, 1.0 / p);
}

void check_family(std::span<const Operator> family) {
  if (family.empty()) throw RangeError("operator family is empty");
  for (const auto& t : family) {
    if (!(t.domain() == family.front().domain()) || !(t.codomain() == family.front().codomain())) {
      throw DimensionError("operators in a family must share domain and codomain");
    }
  }
}

/// Selection plus flat domain vectors, evaluated against a fixed family.
struct Candidate {
  double value = 0.0;
  std::vector<std::size_t> selection;
  std::vector<double> x;  // selection.size() * domain dim
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.selection < b.selection;
}

class RatioEvaluator {
 public:
  RatioEvaluator(std::span<const Operator> family, double p)
      : family_(family), p_(p), dom_(family.front().domain()), cod_(family.front().codomain()),
        din_(dom_.dim()), dout_(cod_.dim()) {}

  double operator()(std::span<const std::size_t> selection, std::span<const double> x) const {
    const std::size_t n = selection.size();
    std::vector<double> y(n * dout_);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& m = family_[selection[j]].matrix();
      const double* xj = x.data() + j * din_;
      for (std::size_t r = 0; r < dout_; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < din_; ++c) s += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * xj[c];
        y[j * dout_ + r] = s;
      }
    }
    const double den = detail::exact_moment(dom_, x, n, p_);
    if (den <= 0.0) return 0.0;
    const double num = detail::exact_moment(cod_, y, n, p_);
    return root(num / den, p_);
  }

  std::size_t domain_dim() const { return din_; }

 private:
  std::span<const Operator> family_;
  double p_;
  SpaceSpec dom_;
  SpaceSpec cod_;
  std::size_t din_;
  std::size_t dout_;
};

void normalize(std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : x) v /= m;
  }
}

/// Coordinate-wise hill climbing. `active` limits which coordinates of each
/// domain vector move; `choices` > 0 allows slot reassignment among the first
/// `choices` operators subject to `multiplicity`.
void polish(Candidate& cand, const RatioEvaluator& eval, CounterRng& rng, std::size_t sweeps,
            std::size_t active, std::size_t choices, std::size_t multiplicity) {
  const std::size_t din = eval.domain_dim();
  const std::size_t n = cand.selection.size();
  std::vector<double> step(n, 0.5);
  cand.value = eval(cand.selection, cand.x);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t j = 0; j < n; ++j) {
      auto trial = cand.x;
      for (std::size_t c = 0; c < active; ++c) trial[j * din + c] += step[j] * rng.normal();
      const double r = eval(cand.selection, trial);
      if (r > cand.value * (1.0 + kImprove)) {
        cand.x = std::move(trial);
        cand.value = r;
        step[j] = std::min(step[j] * 1.5, 4.0);
      } else {
        step[j] *= 0.6;
      }

      if (choices > 1) {
        const std::size_t proposal = static_cast<std::size_t>(rng.below(choices));
        if (proposal != cand.selection[j] &&
            static_cast<std::size_t>(std::count(cand.selection.begin(), cand.selection.end(), proposal)) <
                multiplicity) {
          auto sel = cand.selection;
          sel[j] = proposal;
          const double rs = eval(sel, cand.x);
          if (rs > cand.value * (1.0 + kImprove)) {
            cand.selection = std::move(sel);
            cand.value = rs;
          }
        }
      }
    }
    normalize(cand.x);
    cand.value = eval(cand.selection, cand.x);
  }
}

Candidate pick_best(std::vector<Candidate>& pool) {
  Candidate best = pool.front();
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (better(pool[i], best)) best = pool[i];
  }
  return best;
}

RBoundEstimate to_estimate(const Candidate& best, std::size_t din, double p, const SearchParams& params) {
  RBoundEstimate out;
  out.value = best.value;
  out.p = p;
  out.search = params;
  out.witness.selection = best.selection;
  for (std::size_t j = 0; j < best.selection.size(); ++j) {
    out.witness.vectors.emplace_back(best.x.begin() + static_cast<std::ptrdiff_t>(j * din),
                                     best.x.begin() + static_cast<std::ptrdiff_t>((j + 1) * din));
  }
  return out;
}

}  // namespace

double rbound_ratio(std::span<const Operator> family, const RBoundWitness& witness, double p) {
  check_family(family);
  if (witness.selection.size() != witness.vectors.size()) throw DimensionError("witness slot mismatch");
  const std::size_t din = family.front().domain().dim();
  std::vector<double> x;
  for (std::size_t j = 0; j < witness.vectors.size(); ++j) {
    if (witness.selection[j] >= family.size()) throw DimensionError("witness selection out of range");
    if (witness.vectors[j].size() != din) throw DimensionError("witness vector outside the domain");
    x.insert(x.end(), witness.vectors[j].begin(), witness.vectors[j].end());
  }
  return RatioEvaluator(family, p)(witness.selection, x);
}

RBoundEstimate rbound_search(std::span<const Operator> family, double p, const SearchParams& params) {
  check_family(family);
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("R-bound exponent must lie in [1, inf)");
  if (params.max_length == 0 || params.max_length > 20) throw RangeError("selection length cap must lie in [1, 20]");
  if (params.multiplicity == 0) throw RangeError("multiplicity cap must be positive");

  const RatioEvaluator eval(family, p);
  const std::size_t din = eval.domain_dim();
  const std::size_t f = family.size();

  std::vector<Candidate> singles(f);
  std::vector<Vector> norm_witness(f);
  for (std::size_t a = 0; a < f; ++a) {
    norm_witness[a] = op_norm(family[a], OpNormParams{.seed = params.seed}).witness;
    if (std::all_of(norm_witness[a].begin(), norm_witness[a].end(), [](double v) { return v == 0.0; })) {
      norm_witness[a][0] = 1.0;
    }
    singles[a].selection = {a};
    singles[a].x = norm_witness[a];
    singles[a].value = eval(singles[a].selection, singles[a].x);
  }

  // Runs over the prefix subfamily {T_0, ..., T_{k-1}}, keyed by (seed, k, r).
  const std::size_t runs_per_prefix = params.restarts;
  const std::size_t total_runs = f > 1 && params.max_length > 1 ? (f - 1) * runs_per_prefix : 0;
  std::vector<Candidate> runs(total_runs);
  parallel_for(total_runs, [&](std::size_t idx) {
    const std::size_t k = 2 + idx / runs_per_prefix;
    const std::size_t r = idx % runs_per_prefix;
    CounterRng rng(params.seed, k, r);
    Candidate c;
    const std::size_t cap = std::min(params.max_length, k * params.multiplicity);
    if (r == 0 && k <= params.max_length) {
      c.selection.resize(k);
      std::iota(c.selection.begin(), c.selection.end(), std::size_t{0});
      for (std::size_t j = 0; j < k; ++j) c.x.insert(c.x.end(), norm_witness[j].begin(), norm_witness[j].end());
    } else {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.below(cap - 1));
      std::vector<std::size_t> used(k, 0);
      while (c.selection.size() < n) {
        const std::size_t a = static_cast<std::size_t>(rng.below(k));
        if (used[a] >= params.multiplicity) continue;
        ++used[a];
        c.selection.push_back(a);
      }
      c.x.resize(n * din);
      for (double& v : c.x) v = rng.normal();
    }
    polish(c, eval, rng, params.sweeps, din, k, params.multiplicity);
    runs[idx] = std::move(c);
  });

  singles.insert(singles.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
  return to_estimate(pick_best(singles), din, p, params);
}

RBoundEstimate rbound_fixed_selection(std::span<const Operator> ops, double p, const SearchParams& params) {
  check_family(ops);
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("R-bound exponent must lie in [1, inf)");
  if (ops.size() > 20) throw RangeError("fixed selections are limited to 20 slots");
  const RatioEvaluator eval(ops, p);
  const std::size_t din = eval.domain_dim();
  const std::size_t n = ops.size();
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  std::vector<Candidate> pool;
  for (std::size_t a = 0; a < n; ++a) {
    Candidate c;
    c.selection = identity;
    c.x.assign(n * din, 0.0);
    auto w = op_norm(ops[a], OpNormParams{.seed = params.seed}).witness;
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[0] = 1.0;
    std::copy(w.begin(), w.end(), c.x.begin() + static_cast<std::ptrdiff_t>(a * din));
    c.value = eval(c.selection, c.x);
    pool.push_back(std::move(c));
  }
  if (n > 1) {
    std::vector<Candidate> runs(params.restarts);
    const Candidate seed_single = pick_best(pool);
    parallel_for(params.restarts, [&](std::size_t r) {
      CounterRng rng(params.seed, 0xf1edULL, r);
      Candidate c;
      c.selection = identity;
      if (r == 0) {
        c.x = seed_single.x;
      } else {
        c.x.resize(n * din);
        for (double& v : c.x) v = rng.normal();
      }
      polish(c, eval, rng, params.sweeps, din, 0, 1);
      runs[r] = std::move(c);
    });
    pool.insert(pool.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
  }
  return to_estimate(pick_best(pool), din, p, params);
}

double rbound_hilbert(std::span<const Operator> family) {
  check_family(family);
  if (!family.front().domain().is_hilbert() || !family.front().codomain().is_hilbert()) {
    throw RangeError("the Hilbert R-bound identity needs l^2 domain and codomain");
  }
  double best = 0.0;
  for (const auto& t : family) best = std::max(best, op_norm(t).value);
  return best;
}

double type_ratio(const SpaceSpec& space, std::span<const Vector> xs, double p) {
  double mass = 0.0;
  for (const auto& x : xs) mass += norm_pow(space, x, p);
  if (mass <= 0.0) return 0.0;
  const double rad2 = rad_moment(space, xs, 2.0).value;
  return std::sqrt(rad2) / root(mass, p);
}

TypeConstantEstimate type_constant_search(const SpaceSpec& space, double p, const SearchParams& params) {
  if (!(p >= 1.0 && p <= 2.0)) throw RangeError("type exponent must lie in [1, 2]");
  if (!space.is_sequence()) throw RangeError("type constants are searched on sequence spaces");
  if (params.max_length == 0 || params.max_length > 20) throw RangeError("selection length cap must lie in [1, 20]");
  const std::size_t dim = space.dim();
  const detail::NormPower np(space, p);

  auto evaluate = [&](std::span<const double> flat, std::size_t n) {
    CompensatedSum mass;
    for (std::size_t j = 0; j < n; ++j) mass.add(np(flat.data() + j * dim));
    if (mass.value() <= 0.0) return 0.0;
    return std::sqrt(detail::exact_moment(space, flat, n, 2.0)) / root(mass.value(), p);
  };

  struct Run {
    double value = 0.0;
    std::size_t n = 0;
    std::vector<double> x;
  };
  std::vector<Run> pool;
  // Basis prefixes e_1, ..., e_k.
  for (std::size_t k = 1; k <= std::min(dim, params.max_length); ++k) {
    Run r;
    r.n = k;
    r.x.assign(k * dim, 0.0);
    for (std::size_t j = 0; j < k; ++j) r.x[j * dim + j] = 1.0;
    r.value = evaluate(r.x, k);
    pool.push_back(std::move(r));
  }

  const std::size_t runs_total = params.max_length > 1 ? dim * params.restarts : 0;
  std::vector<Run> runs(runs_total);
  parallel_for(runs_total, [&](std::size_t idx) {
    const std::size_t active = 1 + idx / params.restarts;
    const std::size_t restart = idx % params.restarts;
    CounterRng rng(params.seed, active, restart);
    Run r;
    r.n = 2 + static_cast<std::size_t>(rng.below(params.max_length - 1));
    r.x.assign(r.n * dim, 0.0);
    for (std::size_t j = 0; j < r.n; ++j) {
      for (std::size_t c = 0; c < active; ++c) r.x[j * dim + c] = rng.normal();
    }
    r.value = evaluate(r.x, r.n);
    std::vector<double> step(r.n, 0.5);
    for (std::size_t sweep = 0; sweep < params.sweeps; ++sweep) {
      for (std::size_t j = 0; j < r.n; ++j) {
        auto trial = r.x;
        for (std::size_t c = 0; c < active; ++c) trial[j * dim + c] += step[j] * rng.normal();
        const double v = evaluate(trial, r.n);
        if (v > r.value * (1.0 + kImprove)) {
          r.x = std::move(trial);
          r.value = v;
          step[j] = std::min(step[j] * 1.5, 4.0);
        } else {
          step[j] *= 0.6;
        }
      }
      normalize(r.x);
      r.value = evaluate(r.x, r.n);
    }
    runs[idx] = std::move(r);
  });
  pool.insert(pool.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));

  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].value > pool[best].value) best = i;
  }
  TypeConstantEstimate out;
  out.value = pool[best].value;
  out.p = p;
  out.search = params;
  for (std::size_t j = 0; j < pool[best].n; ++j) {
    out.witness.emplace_back(pool[best].x.begin() + static_cast<std::ptrdiff_t>(j * dim),
                             pool[best].x.begin() + static_cast<std::ptrdiff_t>((j + 1) * dim));
  }
  return out;
}

}  // namespace drl
