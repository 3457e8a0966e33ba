#include "drl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include "drl/error.hpp"
#include "drl/io.hpp"
#include "drl/parallel.hpp"
#include "drl/rng.hpp"

namespace drl {

namespace fs = std::filesystem;
using nlohmann::json;
using io::format_double;

namespace {

double root(double m, double p) {
  if (m <= 0.0) return 0.0;
  if (p == 2.0) return std::sqrt(m);
  return std::pow(m, 1.0 / p);
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

CounterexamplePair counterexample_build(double p, const SpaceSpec& space, std::span<const Vector> xs) {
  if (!(p > 1.0) || std::isinf(p)) throw RangeError("counterexample exponent must lie in (1, inf)");
  if (xs.empty()) throw RangeError("counterexample needs N >= 1 vectors");
  if (!space.is_sequence()) throw DimensionError("counterexample vectors live in a sequence space");
  const int n = static_cast<int>(xs.size());
  if (n > 24) throw RangeError("counterexample level N must not exceed 24");
  const std::size_t dim = space.dim();
  for (const auto& x : xs) {
    if (x.size() != dim) throw DimensionError("counterexample vector outside " + space.describe());
  }

  std::vector<Vector> ys(static_cast<std::size_t>(n) + 1, Vector(dim, 0.0));  // ys[j-1] = y_j, ys[N] = y_{N+1} = 0
  for (int j = 1; j <= n; ++j) {
    const double scale = std::pow(2.0, j / p);
    for (std::size_t c = 0; c < dim; ++c) ys[static_cast<std::size_t>(j - 1)][c] = scale * xs[static_cast<std::size_t>(j - 1)][c];
  }

  auto f = DyadicFunction::zeros(n, space);
  for (int j = 1; j <= n; ++j) {
    // [2^-j, 2^-j+1) is the run of level-N atoms [2^{N-j}, 2^{N-j+1}).
    const std::size_t lo = std::size_t{1} << (n - j);
    const std::size_t hi = std::size_t{1} << (n - j + 1);
    const auto& y = ys[static_cast<std::size_t>(j - 1)];
    const auto& y_next = ys[static_cast<std::size_t>(j)];
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t c = 0; c < dim; ++c) f.at(i)[c] = 2.0 * y[c] - y_next[c];
    }
  }

  const SpaceSpec scalars = SpaceSpec::scalars();
  std::vector<DyadicFunction> thetas;
  for (int j = 0; j < n; ++j) {
    auto t = DyadicFunction::zeros(n, scalars);
    t.at(0)[0] = std::pow(2.0, (n - j - 1) / p);
    thetas.push_back(std::move(t));
  }
  CarlesonFamily theta(n, scalars, std::move(thetas));

  const Martingale m(f);
  for (int j = 1; j <= n; ++j) {
    const auto& y = ys[static_cast<std::size_t>(j - 1)];
    const std::size_t end = std::size_t{1} << (n - j + 1);
    for (std::size_t i = 0; i < end; ++i) {
      const auto v = m.at(j - 1, i);
      for (std::size_t c = 0; c < dim; ++c) {
        if (!close(v[c], y[c], 1e-12)) {
          throw AssertionFailure("E_" + std::to_string(j - 1) + " f differs from y_" + std::to_string(j) +
                                 " on [0, 2^-" + std::to_string(j - 1) + ")");
        }
      }
    }
  }
  ys.pop_back();
  return CounterexamplePair{std::move(f), std::move(theta), std::move(ys)};
}

std::vector<Vector> counterexample_vectors(const SpaceSpec& space, std::size_t n, XsRule rule, std::uint64_t seed) {
  std::vector<Vector> xs;
  for (std::size_t j = 0; j < n; ++j) {
    if (rule == XsRule::ones) {
      xs.emplace_back(space.dim(), 1.0);
      continue;
    }
    CounterRng rng(seed, 0xc0ffeeULL + n, j);
    Vector x(space.dim());
    double len = 0.0;
    while (len == 0.0) {
      for (double& v : x) v = rng.normal();
      len = norm(space, x);
    }
    for (double& v : x) v /= len;
    xs.push_back(std::move(x));
  }
  return xs;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw RangeError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SweepResult counterexample_sweep(double p, int n_min, int n_max, const SpaceSpec& space, const SweepOptions& options) {
  if (n_min < 1 || n_max < n_min || n_max > 24) throw RangeError("sweep range must satisfy 1 <= n_min <= n_max <= 24");
  SweepResult out;
  for (int n = n_min; n <= n_max; ++n) {
    const auto xs = counterexample_vectors(space, static_cast<std::size_t>(n), options.rule, options.seed);
    const auto pair = counterexample_build(p, space, xs);
    MomentOptions mo;
    mo.seed = options.seed;
    mo.samples = options.samples;
    mo.mode = n <= options.exact_max ? MomentMode::exact : MomentMode::montecarlo;
    mo.exact_threshold = std::max<std::size_t>(mo.exact_threshold, static_cast<std::size_t>(options.exact_max));

    SweepRow row;
    row.n = n;
    row.exact = mo.mode == MomentMode::exact;
    row.embed_norm = embed_norm(pair.theta, pair.f, p, mo);
    row.lp_norm = lp_norm(pair.f, p);
    row.ratio = row.embed_norm / row.lp_norm;
    row.car_constant = car_constant(pair.theta, p, mo);
    double mass = 0.0;
    for (const auto& x : xs) mass += norm_pow(space, x, p);
    row.mass_ratio = row.embed_norm / root(mass, p);
    if (row.exact) {
      const double direct = rad_norm(space, xs, p, mo);
      if (!close(row.embed_norm, direct, 1e-12)) {
        throw AssertionFailure("embedding norm " + format_double(row.embed_norm) + " differs from the Rad_p norm " +
                               format_double(direct) + " at N = " + std::to_string(n));
      }
    }
    out.rows.push_back(row);
  }
  std::vector<double> ns, ratios, masses;
  for (const auto& r : out.rows) {
    if (r.n < 4) continue;
    ns.push_back(r.n);
    ratios.push_back(r.ratio);
    masses.push_back(r.mass_ratio);
  }
  if (ns.size() >= 2) {
    out.exponent = loglog_slope(ns, ratios);
    out.mass_exponent = loglog_slope(ns, masses);
  }
  return out;
}

DyadicFunction random_function(int level, const SpaceSpec& space, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, 0xf00dULL, stream);
  std::vector<double> values((std::size_t{1} << level) * space.dim());
  for (double& v : values) v = rng.normal();
  return DyadicFunction(level, space, std::move(values));
}

CarlesonFamily random_family(int level, const SpaceSpec& space, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, 0xfa111ULL, stream);
  std::vector<DyadicFunction> funcs;
  for (int j = 0; j <= level; ++j) {
    std::vector<double> values((std::size_t{1} << level) * space.dim());
    // Roughly a third of the entries vanish so that supports vary.
    for (double& v : values) v = rng.below(3) == 0 ? 0.0 : rng.normal();
    funcs.emplace_back(level, space, std::move(values));
  }
  return CarlesonFamily(level, space, std::move(funcs));
}

ScalarDyadicFunction probe_maximal(const DyadicFunction& f, const SearchParams& params) {
  if (f.space().is_hilbert()) return maximal_rad(f, RBoundMode::hilbert);
  const Martingale m(f);
  ScalarDyadicFunction g{f.level(), std::vector<double>(f.atoms(), 0.0)};
  parallel_for(f.atoms(), [&](std::size_t i) {
    std::vector<std::span<const double>> values;
    for (int j = 0; j <= f.level(); ++j) values.push_back(m.at(j, i));
    const auto ops = as_operators(f.space(), values);
    g.values[i] = rbound_fixed_selection(ops, 2.0, params).value;
  });
  return g;
}

RmfProbeRow rmf_probe(double q, double p, int level, const SearchParams& params) {
  if (q != 1.0 && q != 2.0) throw RangeError("the probe runs on l^1 or l^2");
  if (level < 0 || level > 8) throw RangeError("probe level must lie in [0, 8]");
  if (!(p >= 1.0) || std::isinf(p)) throw RangeError("probe exponent must lie in [1, inf)");
  const std::size_t n = std::size_t{1} << level;
  const SpaceSpec space = SpaceSpec::sequence(q, n);

  std::vector<std::pair<std::string, DyadicFunction>> candidates;
  auto haar = DyadicFunction::zeros(level, space);
  for (std::size_t i = 0; i < n; ++i) haar.at(i)[i] = 1.0;
  candidates.emplace_back("haar", std::move(haar));
  Vector e1(n, 0.0);
  e1[0] = 1.0;
  candidates.emplace_back("constant", DyadicFunction::constant(level, space, e1));
  for (std::size_t r = 0; r < params.restarts; ++r) {
    candidates.emplace_back("random" + std::to_string(r), random_function(level, space, params.seed, r));
  }

  RmfProbeRow best;
  best.level = level;
  best.dim = n;
  best.rad_ratio = -1.0;
  for (const auto& [name, f] : candidates) {
    const double denom = lp_norm(f, p);
    const double rad = lp_norm(probe_maximal(f, params), p) / denom;
    if (rad > best.rad_ratio) {
      best.rad_ratio = rad;
      best.std_ratio = lp_norm(maximal_std(f), p) / denom;
      best.candidate = name;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Config-driven runner.

namespace {

/// Typed access to the config object; unread keys are rejected at the end.
class Params {
 public:
  Params(const json& j, fs::path base) : j_(j), base_(std::move(base)) {
    if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    used_ = {"experiment", "out", "threads"};
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config field \"" + key + "\": " + e.what());
    }
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("config field \"" + key + "\" is required");
    return get<T>(key, T{});
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError("config field \"" + key + "\" is required");
    return j_.at(key);
  }

  fs::path path(const std::string& key) {
    fs::path p = require<std::string>(key);
    return p.is_absolute() ? p : base_ / p;
  }

  SpaceSpec space(const std::string& key, const SpaceSpec& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return io::space_from_json(j_.at(key));
  }

  SearchParams search(SearchParams defaults = {}) {
    SearchParams s = defaults;
    s.max_length = get<std::size_t>("nmax", s.max_length);
    s.multiplicity = get<std::size_t>("multiplicity", s.multiplicity);
    s.restarts = get<std::size_t>("restarts", s.restarts);
    s.sweeps = get<std::size_t>("sweeps", s.sweeps);
    s.seed = get<std::uint64_t>("seed", s.seed);
    return s;
  }

  MomentOptions moments() {
    MomentOptions m;
    const auto mode = get<std::string>("mode", "exact");
    if (mode == "exact") {
      m.mode = MomentMode::exact;
    } else if (mode == "mc" || mode == "montecarlo") {
      m.mode = MomentMode::montecarlo;
    } else {
      throw ConfigError("mode must be \"exact\" or \"mc\", got \"" + mode + "\"");
    }
    m.samples = get<std::uint64_t>("samples", m.samples);
    m.seed = get<std::uint64_t>("seed", m.seed);
    return m;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown config field \"" + key + "\"");
    }
  }

 private:
  const json& j_;
  fs::path base_;
  std::set<std::string> used_;
};

/// CSV table accumulated row by row.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { add_row(header); }

  void add(std::vector<std::string> cells) {
    if (cells.size() != width_) throw std::logic_error("CSV row width mismatch");
    add_row(cells);
  }

  const std::string& text() const { return text_; }

 private:
  void add_row(const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) text_ += ',';
      text_ += cells[c];
    }
    text_ += '\n';
  }

  std::size_t width_;
  std::string text_;
};

std::string fmt(double x) { return format_double(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

/// JSON numbers cannot hold infinities; they become the string "inf".
json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

struct Output {
  std::string csv;
  json summary;
  /// Extra files written next to the table (name -> contents).
  std::map<std::string, std::string> extra;
  bool assertion_failed = false;
  std::string assertion_message;
};

json witness_json(const std::vector<Vector>& vectors) {
  json arr = json::array();
  for (const auto& v : vectors) {
    json row = json::array();
    for (double x : v) row.push_back(num(x));
    arr.push_back(row);
  }
  return arr;
}

double positive(double x, const char* what) {
  if (!(x > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  return x;
}

Output run_counterexample(Params& in) {
  const double p = in.get<double>("p", 4.0);
  const int n_min = in.get<int>("n_min", 4);
  const int n_max = in.get<int>("n_max", 14);
  const auto space = in.space("space", SpaceSpec::scalars());
  SweepOptions opts;
  const auto rule = in.get<std::string>("xs", "ones");
  if (rule == "ones") {
    opts.rule = XsRule::ones;
  } else if (rule == "random") {
    opts.rule = XsRule::random_unit;
  } else {
    throw ConfigError("xs must be \"ones\" or \"random\"");
  }
  opts.seed = in.get<std::uint64_t>("seed", 0);
  opts.samples = in.get<std::uint64_t>("samples", opts.samples);
  opts.exact_max = in.get<int>("exact_max", opts.exact_max);
  if (opts.exact_max > 20) throw ConfigError("exact_max must not exceed 20");
  in.finish();
  if (!(p > 1.0) || std::isinf(p)) throw ConfigError("p must lie in (1, inf)");
  if (n_min < 1 || n_max < n_min || n_max > 20) throw ConfigError("need 1 <= n_min <= n_max <= 20");

  const auto sweep = counterexample_sweep(p, n_min, n_max, space, opts);
  Csv csv({"N", "embed_norm", "lp_norm", "ratio", "car_constant", "mass_ratio", "mode"});
  double car_lo = kInf, car_hi = 0.0;
  json rows = json::array();
  for (const auto& r : sweep.rows) {
    csv.add({fmt(r.n), fmt(r.embed_norm), fmt(r.lp_norm), fmt(r.ratio), fmt(r.car_constant), fmt(r.mass_ratio),
             r.exact ? "exact" : "mc"});
    car_lo = std::min(car_lo, r.car_constant);
    car_hi = std::max(car_hi, r.car_constant);
  }
  Output out;
  out.csv = csv.text();
  out.summary = {{"p", p},
                 {"n_min", n_min},
                 {"n_max", n_max},
                 {"xs", rule},
                 {"seed", opts.seed},
                 {"exponent", sweep.exponent},
                 {"mass_exponent", sweep.mass_exponent},
                 {"theory_exponent", 0.5 - 1.0 / p},
                 {"car_min", num(car_lo)},
                 {"car_max", num(car_hi)},
                 {"car_variation", car_lo > 0.0 ? num(car_hi / car_lo) : json(nullptr)},
                 {"rows", sweep.rows.size()}};
  return out;
}

Output run_rmf_probe(Params& in) {
  const double q = in.get<double>("q", 1.0);
  const double p = in.get<double>("p", 2.0);
  const int l_min = in.get<int>("l_min", 3);
  const int l_max = in.get<int>("l_max", 7);
  SearchParams defaults;
  defaults.restarts = 2;
  defaults.sweeps = 6;
  const auto params = in.search(defaults);
  in.finish();
  if (q != 1.0 && q != 2.0) throw ConfigError("q must be 1 or 2");
  if (l_min < 0 || l_max < l_min || l_max > 8) throw ConfigError("need 0 <= l_min <= l_max <= 8");

  Csv csv({"L", "dim", "rad_ratio", "std_ratio", "candidate"});
  bool increasing = true;
  double previous = -1.0;
  for (int level = l_min; level <= l_max; ++level) {
    const auto row = rmf_probe(q, p, level, params);
    csv.add({fmt(row.level), fmt(row.dim), fmt(row.rad_ratio), fmt(row.std_ratio), row.candidate});
    if (row.rad_ratio <= previous) increasing = false;
    previous = row.rad_ratio;
  }
  Output out;
  out.csv = csv.text();
  out.summary = {{"q", q}, {"p", p}, {"l_min", l_min}, {"l_max", l_max}, {"seed", params.seed},
                 {"restarts", params.restarts}, {"sweeps", params.sweeps}, {"increasing", increasing}};
  return out;
}

struct AuditInstance {
  CarlesonFamily theta;
  DyadicFunction f;
};

Output run_lemma_audit(Params& in) {
  const double p = in.get<double>("p", 4.0);
  const double r = in.get<double>("r", 2.0);
  const int start = in.get<int>("N", 0);
  const double tol = positive(in.get<double>("tol", 1e-9), "tol");
  std::vector<AuditInstance> instances;
  if (in.has("theta") || in.has("f")) {
    auto theta = io::read_carleson(in.path("theta"));
    const auto f_space = in.space("f_space", theta.space().dim() == 1 ? SpaceSpec::sequence(2.0, 1) : theta.space());
    auto f = io::read_dyadic(in.path("f"), f_space);
    instances.push_back({std::move(theta), std::move(f)});
  } else {
    const int count = in.get<int>("instances", 10);
    const int level = in.get<int>("level", 4);
    const int dim = in.get<int>("dim", 2);
    const auto seed = in.get<std::uint64_t>("seed", 1);
    if (count < 1 || level < 0 || level > 10 || dim < 1) throw ConfigError("need instances >= 1, 0 <= level <= 10, dim >= 1");
    for (int k = 0; k < count; ++k) {
      const auto e = SpaceSpec::sequence(2.0, static_cast<std::size_t>(dim));
      instances.push_back({random_family(level, SpaceSpec::scalars(), seed, static_cast<std::uint64_t>(k)),
                           random_function(level, e, seed, static_cast<std::uint64_t>(k))});
    }
  }
  in.finish();

  Csv csv({"instance", "p", "r", "s", "k_min", "k_max", "lhs", "car", "maximal_lorentz", "end_to_end", "a_max_error",
           "b_max_excess", "c_type_constant", "c_minkowski_ratio", "d_contraction_excess", "d_carleson_excess",
           "d_sum_excess", "e_ratio", "e_lower", "e_upper", "hard_steps_hold"});
  Output out;
  double worst_end_to_end = 0.0;
  int failures = 0;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto rep = lemma_audit(instances[k].theta, instances[k].f, p, r, start, tol);
    csv.add({fmt(k), fmt(rep.p), fmt(rep.r), fmt(rep.s), fmt(rep.k_min), fmt(rep.k_max), fmt(rep.lhs), fmt(rep.car),
             fmt(rep.maximal_lorentz), fmt(rep.end_to_end), fmt(rep.a_max_error), fmt(rep.b_max_excess),
             fmt(rep.c_type_constant), fmt(rep.c_minkowski_ratio), fmt(rep.d_contraction_excess),
             fmt(rep.d_carleson_excess), fmt(rep.d_sum_excess), fmt(rep.e_ratio), fmt(rep.e_lower), fmt(rep.e_upper),
             fmt(rep.hard_steps_hold())});
    worst_end_to_end = std::max(worst_end_to_end, rep.end_to_end);
    if (!rep.hard_steps_hold()) ++failures;
  }
  out.csv = csv.text();
  out.summary = {{"p", p}, {"r", r}, {"N", start}, {"tol", tol}, {"instances", instances.size()},
                 {"failures", failures}, {"max_end_to_end", num(worst_end_to_end)}};
  if (failures > 0) {
    out.assertion_failed = true;
    out.assertion_message = std::to_string(failures) + " audited instance(s) violate a hard step";
  }
  return out;
}

Output run_witness(Params& in) {
  const double p = in.get<double>("p", 2.0);
  const auto params = in.search();
  std::vector<DyadicFunction> fs;
  int level = 0;
  if (in.has("f")) {
    const auto space = in.space("space", SpaceSpec::sequence(2.0, 2));
    fs.push_back(io::read_dyadic(in.path("f"), space));
    level = in.get<int>("level", fs.back().level());
  } else {
    const int count = in.get<int>("instances", 5);
    level = in.get<int>("level", 3);
    const int dim = in.get<int>("dim", 2);
    const auto seed = in.get<std::uint64_t>("instance_seed", 3);
    if (count < 1 || level < 0 || level > 10 || dim < 1) throw ConfigError("need instances >= 1, 0 <= level <= 10, dim >= 1");
    for (int k = 0; k < count; ++k) {
      fs.push_back(random_function(level, SpaceSpec::sequence(2.0, static_cast<std::size_t>(dim)), seed,
                                   static_cast<std::uint64_t>(k)));
    }
  }
  in.finish();
  if (!(p >= 1.0) || std::isinf(p)) throw ConfigError("p must lie in [1, inf)");

  Csv csv({"instance", "level", "rbound_integral", "maximal_integral", "relative_gap", "embedding_integral", "car_1",
           "car_2", "car_4"});
  double worst_car = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    const auto& f = fs[k];
    if (level < 0 || level > f.level()) throw ConfigError("witness level must lie in [0, level of f]");
    const auto w = witness_family(f, p, level, params);
    const auto mf = maximal_std(cond_expect(f, level));
    const double mf_integral = std::pow(lp_norm(mf, p), p);
    const double gap = mf_integral > 0.0 ? (w.rbound_integral - mf_integral) / mf_integral : 0.0;
    const double c1 = car_constant(w.family, 1.0);
    const double c2 = car_constant(w.family, 2.0);
    const double c4 = car_constant(w.family, 4.0);
    worst_car = std::max({worst_car, c1, c2, c4});
    csv.add({fmt(k), fmt(level), fmt(w.rbound_integral), fmt(mf_integral), fmt(gap), fmt(w.embedding_integral), fmt(c1),
             fmt(c2), fmt(c4)});
  }
  Output out;
  out.csv = csv.text();
  out.summary = {{"p", p}, {"level", level}, {"instances", fs.size()}, {"max_car", worst_car}, {"seed", params.seed}};
  return out;
}

Output run_radnorm(Params& in) {
  const auto space = in.space("space", SpaceSpec::sequence(2.0, 2));
  const double p = in.get<double>("p", 2.0);
  std::vector<Vector> xs;
  if (in.has("vectors")) {
    xs = io::read_vectors(in.path("vectors"), space);
  } else {
    xs = in.require<std::vector<Vector>>("values");
    for (const auto& x : xs) {
      if (x.size() != space.dim()) throw ConfigError("vector outside " + space.describe());
    }
  }
  MomentOptions mo = in.moments();
  if (!in.has("samples")) mo.samples = 1000000;
  if (!in.has("seed")) mo.seed = 42;
  in.finish();
  const auto m = rad_moment(space, xs, p, mo);
  const double value = root(m.value, p);
  const std::string mode = m.mode == MomentMode::exact ? "exact" : "mc";
  Csv csv({"value", "moment", "p", "mode", "samples", "seed"});
  csv.add({fmt(value), fmt(m.value), fmt(p), mode, std::to_string(m.samples), std::to_string(m.seed)});
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", value}, {"moment", m.value}, {"p", p}, {"mode", mode}, {"samples", m.samples},
                 {"seed", m.seed}, {"count", xs.size()}};
  return out;
}

Output run_rbound(Params& in) {
  std::vector<Operator> family;
  const json& spec = in.raw("family");
  if (spec.is_string()) {
    fs::path path = spec.get<std::string>();
    family = io::family_from_json(io::read_json(path.is_absolute() ? path : in.path("family")));
  } else {
    family = io::family_from_json(spec);
  }
  const double p = in.get<double>("p", 2.0);
  const auto params = in.search();
  in.finish();
  const auto est = rbound_search(family, p, params);
  const bool hilbert = family.front().domain().is_hilbert() && family.front().codomain().is_hilbert();
  Csv csv({"value", "p", "lower_bound", "hilbert_value"});
  const double exact = hilbert ? rbound_hilbert(family) : -1.0;
  csv.add({fmt(est.value), fmt(p), "true", hilbert ? fmt(exact) : ""});
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", est.value},
                 {"p", p},
                 {"lower_bound", true},
                 {"hilbert_value", hilbert ? json(exact) : json(nullptr)},
                 {"nmax", params.max_length},
                 {"multiplicity", params.multiplicity},
                 {"restarts", params.restarts},
                 {"sweeps", params.sweeps},
                 {"seed", params.seed},
                 {"witness", {{"selection", est.witness.selection}, {"vectors", witness_json(est.witness.vectors)}}}};
  return out;
}

Output run_typeconst(Params& in) {
  const auto space = in.space("space", SpaceSpec::sequence(2.0, 4));
  const double p = in.get<double>("p", 2.0);
  const auto params = in.search();
  in.finish();
  const auto est = type_constant_search(space, p, params);
  Csv csv({"value", "p", "count"});
  csv.add({fmt(est.value), fmt(p), fmt(est.witness.size())});
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", est.value}, {"p", p}, {"space", io::space_to_json(space)}, {"nmax", params.max_length},
                 {"restarts", params.restarts}, {"seed", params.seed}, {"witness", witness_json(est.witness)}};
  return out;
}

Output run_car_constant(Params& in) {
  const auto theta = io::read_carleson(in.path("theta"));
  const double p = in.get<double>("p", 2.0);
  const auto mo = in.moments();
  in.finish();
  if (!(p >= 1.0) || std::isinf(p)) throw ConfigError("p must lie in [1, inf)");
  Csv csv({"m", "max_atom_average"});
  double best = 0.0;
  for (int m = 0; m <= theta.level(); ++m) {
    const auto tail = tail_energy(theta, m, p, mo);
    const std::size_t width = std::size_t{1} << (theta.level() - m);
    double level_max = 0.0;
    for (std::size_t b = 0; b < (std::size_t{1} << m); ++b) {
      CompensatedSum s;
      for (std::size_t i = b * width; i < (b + 1) * width; ++i) s.add(tail.values[i]);
      level_max = std::max(level_max, std::ldexp(s.value(), m - theta.level()));
    }
    best = std::max(best, level_max);
    csv.add({fmt(m), fmt(level_max)});
  }
  const double value = car_constant(theta, p, mo);
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", value}, {"p", p}, {"level", theta.level()}, {"max_atom_average", best}};
  return out;
}

Output run_embed_norm(Params& in) {
  const auto theta = io::read_carleson(in.path("theta"));
  const auto f_space = in.space("f_space", SpaceSpec::scalars());
  const auto f = io::read_dyadic(in.path("f"), f_space);
  const double p = in.get<double>("p", 2.0);
  const auto mo = in.moments();
  in.finish();
  const double value = embed_norm(theta, f, p, mo);
  const double denom = lp_norm(f, p);
  Csv csv({"embed_norm", "lp_norm", "ratio"});
  csv.add({fmt(value), fmt(denom), fmt(denom > 0.0 ? value / denom : 0.0)});
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", value}, {"lp_norm", denom}, {"p", p}};
  return out;
}

Output run_op_norm_search(Params& in) {
  const auto theta = io::read_carleson(in.path("theta"));
  const auto f_space = in.space("f_space", SpaceSpec::scalars());
  const double p = in.get<double>("p", 2.0);
  std::vector<DyadicFunction> initial;
  if (in.has("f")) initial.push_back(io::read_dyadic(in.path("f"), f_space));
  const auto params = in.search();
  in.finish();
  const auto est = operator_norm_search(theta, f_space, p, params, initial);
  Csv csv({"value", "p", "lower_bound"});
  csv.add({fmt(est.value), fmt(p), "true"});
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", est.value}, {"p", p}, {"lower_bound", true}, {"restarts", params.restarts},
                 {"sweeps", params.sweeps}, {"seed", params.seed}, {"witness_file", "op-norm-search_witness.csv"}};
  out.extra["op-norm-search_witness.csv"] = io::dyadic_to_csv(est.witness);
  return out;
}

Output run_condexp(Params& in) {
  const auto space = in.space("space", SpaceSpec::scalars());
  const auto f = io::read_dyadic(in.path("f"), space);
  const int j = in.require<int>("j");
  in.finish();
  const auto g = cond_expect(f, j);
  Output out;
  out.csv = io::dyadic_to_csv(g);
  out.summary = {{"level", g.level()}, {"j", j}, {"dim", g.dim()}};
  return out;
}

Output run_maximal(Params& in) {
  const auto space = in.space("space", SpaceSpec::scalars());
  const auto f = io::read_dyadic(in.path("f"), space);
  const auto kind = in.get<std::string>("kind", "std");
  const auto mode = in.get<std::string>("rbound", space.is_hilbert() ? "hilbert" : "search");
  const auto params = in.search();
  in.finish();
  ScalarDyadicFunction g;
  if (kind == "std") {
    g = maximal_std(f);
  } else if (kind == "rad") {
    if (mode != "hilbert" && mode != "search") throw ConfigError("rbound must be \"hilbert\" or \"search\"");
    g = maximal_rad(f, mode == "hilbert" ? RBoundMode::hilbert : RBoundMode::search, params);
  } else {
    throw ConfigError("kind must be \"std\" or \"rad\"");
  }
  Csv csv({"atom", "value"});
  double top = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    csv.add({fmt(i), fmt(g.values[i])});
    top = std::max(top, g.values[i]);
  }
  Output out;
  out.csv = csv.text();
  out.summary = {{"kind", kind}, {"level", g.level}, {"max", top}};
  if (kind == "rad") out.summary["rbound"] = mode;
  return out;
}

Output run_lorentz(Params& in) {
  const auto f = io::read_dyadic(in.path("g"), SpaceSpec::scalars());
  const double p = in.get<double>("p", 2.0);
  const double s = in.get<double>("s", 2.0);
  in.finish();
  ScalarDyadicFunction g{f.level(), f.values()};
  for (double& v : g.values) v = std::abs(v);
  const double value = lorentz_norm(g, p, s);
  Csv csv({"p", "s", "value"});
  csv.add({fmt(p), fmt(s), fmt(value)});
  Output out;
  out.csv = csv.text();
  out.summary = {{"value", value}, {"p", p}, {"s", s}, {"level", g.level}};
  return out;
}

using Runner = std::function<Output(Params&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"counterexample", run_counterexample}, {"rmf-probe", run_rmf_probe},   {"lemma-audit", run_lemma_audit},
      {"witness", run_witness},               {"radnorm", run_radnorm},       {"rbound", run_rbound},
      {"typeconst", run_typeconst},           {"car-constant", run_car_constant}, {"embed-norm", run_embed_norm},
      {"op-norm-search", run_op_norm_search}, {"condexp", run_condexp},       {"maximal", run_maximal},
      {"lorentz", run_lorentz},
  };
  return table;
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : runners()) names.push_back(name);
  return names;
}

int run(const json& config, const fs::path& base, std::ostream& err) {
  try {
    if (!config.is_object() || !config.contains("experiment") || !config.at("experiment").is_string()) {
      throw ConfigError("config needs a string field \"experiment\"");
    }
    const auto name = config.at("experiment").get<std::string>();
    const auto it = runners().find(name);
    if (it == runners().end()) throw ConfigError("unknown experiment \"" + name + "\"");
    fs::path out_dir = config.value("out", std::string("."));
    if (out_dir.is_relative()) out_dir = base / out_dir;
    if (config.contains("threads")) {
      const auto threads = config.at("threads").get<long long>();
      if (threads < 0) throw ConfigError("threads must be nonnegative");
      set_thread_count(static_cast<std::size_t>(threads));
    }

    Params params(config, base);
    Output out = it->second(params);
    json summary = out.summary;
    summary["schema"] = 1;
    summary["experiment"] = name;
    summary["table"] = name + ".csv";
    summary["status"] = out.assertion_failed ? "assertion-failed" : "ok";
    io::write_text(out_dir / (name + ".csv"), out.csv);
    io::write_text(out_dir / (name + ".json"), summary.dump(2) + "\n");
    for (const auto& [file, text] : out.extra) io::write_text(out_dir / file, text);
    if (out.assertion_failed) {
      err << "assertion failed: " << out.assertion_message << "\n";
      return kExitAssertion;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RangeError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AssertionFailure& e) {
    err << "assertion failed: " << e.what() << "\n";
    return kExitAssertion;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace drl
