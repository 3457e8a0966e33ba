// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "drl/carleson.hpp"
#include "drl/dyadic.hpp"
#include "drl/experiments.hpp"
#include "drl/parallel.hpp"
#include "drl/rademacher.hpp"
#include "drl/rbound.hpp"
#include "drl/rng.hpp"
#include "drl/spaces.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace drl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Outcome hilbert_rbound_oracle() {
  const auto t0 = Clock::now();
  CounterRng rng(101, 1);
  double lo = kInf, hi = 0.0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = 1 + rng.below(6);
    const std::size_t count = 1 + rng.below(5);
    const auto space = SpaceSpec::sequence(2.0, d);
    std::vector<Operator> family;
    for (std::size_t i = 0; i < count; ++i) family.push_back(oracle::gaussian_operator(rng, space, space));
    const double exact = rbound_hilbert(family);
    const double found = rbound_search(family).value;
    lo = std::min(lo, found / exact);
    hi = std::max(hi, found / exact);
  }
  const double elapsed = seconds_since(t0);
  const bool pass = lo >= 0.95 && hi <= 1.0 + 1e-6 && elapsed <= 120.0;
  return {pass, "search/exact in [" + num(lo) + ", " + num(hi) + "], " + num(elapsed) + " s"};
}

Outcome rad_of_hilbert() {
  CounterRng rng(102, 1);
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t d = 1 + rng.below(6);
    const auto space = SpaceSpec::sequence(2.0, d);
    std::vector<Vector> xs;
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      xs.push_back(oracle::gaussian(rng, d));
      for (double v : xs.back()) sq += v * v;
    }
    const double value = rad_norm(space, xs, 2.0);
    worst = std::max(worst, std::abs(value - std::sqrt(sq)) / std::max(1.0, std::sqrt(sq)));
  }
  return {worst <= 1e-10, "max relative deviation " + num(worst)};
}

Outcome maximal_hilbert() {
  CounterRng rng(103, 1);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int level = static_cast<int>(rng.below(7));
    const std::size_t d = 1 + rng.below(4);
    SpaceSpec space = SpaceSpec::sequence(2.0, d);
    if (k % 4 == 3) space = SpaceSpec::operators(SpaceSpec::sequence(2.0, 1 + rng.below(3)), space);
    const auto f = random_function(level, space, 103, static_cast<std::uint64_t>(k));
    const auto rad = maximal_rad(f, RBoundMode::hilbert);
    const auto std_ = maximal_std(f);
    for (std::size_t i = 0; i < f.atoms(); ++i) {
      worst = std::max(worst, std::abs(rad.values[i] - std_.values[i]) / std::max(1.0, std_.values[i]));
    }
  }
  return {worst <= 1e-9, "max pointwise deviation " + num(worst)};
}

Outcome type_two_of_hilbert() {
  double lo = kInf, hi = 0.0;
  for (std::size_t n = 1; n <= 6; ++n) {
    const double v = type_constant_search(SpaceSpec::sequence(2.0, n), 2.0).value;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo >= 1.0 - 1e-6 && hi <= 1.0 + 1e-6, "values in [" + num(lo) + ", " + num(hi) + "] for n = 1..6"};
}

Outcome counterexample_identity() {
  double worst = 0.0;
  double car_spread = 0.0;
  const std::vector<SpaceSpec> spaces = {SpaceSpec::scalars(), SpaceSpec::sequence(2.0, 3), SpaceSpec::sequence(1.0, 2)};
  for (double p : {2.0, 3.0, 4.0}) {
    for (std::size_t s = 0; s < spaces.size(); ++s) {
      const auto rule = s == 0 ? XsRule::ones : XsRule::random_unit;
      double car_lo = kInf, car_hi = 0.0;
      for (int n = 1; n <= 14; ++n) {
        const auto xs = counterexample_vectors(spaces[s], static_cast<std::size_t>(n), rule, 5);
        const auto pair = counterexample_build(p, spaces[s], xs);
        const double lhs = std::pow(embed_norm(pair.theta, pair.f, p), p);
        const double rhs = oracle::rad_moment(spaces[s], xs, p);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, rhs));
        if (n >= 4) {
          const double c = car_constant(pair.theta, p);
          car_lo = std::min(car_lo, c);
          car_hi = std::max(car_hi, c);
        }
      }
      car_spread = std::max(car_spread, car_hi / car_lo);
    }
  }
  return {worst <= 1e-12 && car_spread <= 2.0,
          "max relative error " + num(worst) + ", Car^p max/min over N = 4..14 " + num(car_spread)};
}

Outcome counterexample_growth() {
  const auto t0 = Clock::now();
  SweepOptions opts;
  const auto s4 = counterexample_sweep(4.0, 4, 14, SpaceSpec::scalars(), opts);
  const auto s2 = counterexample_sweep(2.0, 4, 14, SpaceSpec::scalars(), opts);
  const double elapsed = seconds_since(t0);
  const bool pass = s4.exponent >= 0.2 && s4.exponent <= 0.3 && std::abs(s2.exponent) <= 0.05 && elapsed <= 600.0;
  return {pass, "ratio exponent p=4 " + num(s4.exponent) + " (target [0.2, 0.3]), p=2 " + num(s2.exponent) +
                    " (target +-0.05); against the x_j mass: p=4 " + num(s4.mass_exponent) + ", p=2 " +
                    num(s2.mass_exponent) + "; " + num(elapsed) + " s"};
}

Outcome lemma_audit_hilbert() {
  CounterRng rng(107, 1);
  int failures = 0;
  double a = 0.0, b = -kInf, d = -kInf, worst_ratio = 0.0;
  bool finite = true;
  for (int k = 0; k < 100; ++k) {
    const int level = 1 + static_cast<int>(rng.below(6));
    const std::size_t dim = 1 + rng.below(4);
    const double p = 2.0 + static_cast<double>(rng.below(3));
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(level) + 1));
    const auto theta = random_family(level, SpaceSpec::scalars(), 107, static_cast<std::uint64_t>(k));
    const auto f = random_function(level, SpaceSpec::sequence(2.0, dim), 107, static_cast<std::uint64_t>(k));
    const auto rep = lemma_audit(theta, f, p, 2.0, start, 1e-9);
    if (!(rep.a_holds && rep.b_holds && rep.d_holds)) ++failures;
    a = std::max(a, rep.a_max_error);
    b = std::max(b, rep.b_max_excess);
    d = std::max({d, rep.d_contraction_excess, rep.d_carleson_excess, rep.d_sum_excess});
    finite = finite && std::isfinite(rep.end_to_end);
    worst_ratio = std::max(worst_ratio, rep.end_to_end);
  }
  return {failures == 0 && finite, std::to_string(failures) + " failing instances; max (a) error " + num(a) +
                                       ", (b) excess " + num(b) + ", (d) excess " + num(d) +
                                       "; max end-to-end ratio " + num(worst_ratio)};
}

Outcome carleson_brute_force() {
  CounterRng rng(108, 1);
  double worst = 0.0;
  for (int k = 0; k < 60; ++k) {
    const int level = static_cast<int>(rng.below(4));
    const auto space = SpaceSpec::sequence(k % 3 == 0 ? 1.0 : 2.0, 1 + rng.below(3));
    const auto theta = random_family(level, space, 108, static_cast<std::uint64_t>(k));
    for (double p : {1.0, 2.0, 3.0}) {
      const double fast = car_constant(theta, p);
      const double slow = oracle::car_constant(theta, p);
      worst = std::max(worst, std::abs(fast - slow) / std::max(1.0, slow));
    }
  }
  int violations = 0;
  for (int k = 0; k < 200; ++k) {
    const int level = static_cast<int>(rng.below(5));
    const auto theta = random_family(level, SpaceSpec::sequence(2.0, 1 + rng.below(3)), 1108, static_cast<std::uint64_t>(k));
    if (car_constant(theta, 2.0) > car_constant(theta, 4.0) * (1.0 + 1e-12)) ++violations;
  }
  return {worst <= 1e-12 && violations == 0,
          "max deviation from exhaustive sup " + num(worst) + "; Car^2 > Car^4 on " + std::to_string(violations) +
              " of 200 families"};
}

Outcome witness_extraction() {
  double worst_gap = 0.0, worst_car = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int level = 1 + k % 4;
    const std::size_t dim = 1 + static_cast<std::size_t>(k % 3);
    const double p = k % 2 == 0 ? 2.0 : 3.0;
    const auto f = random_function(level, SpaceSpec::sequence(2.0, dim), 109, static_cast<std::uint64_t>(k));
    const auto w = witness_family(f, p, level);
    const double exact = std::pow(lp_norm(maximal_std(f), p), p);
    worst_gap = std::max(worst_gap, std::abs(w.rbound_integral - exact) / exact);
    for (double q : {1.0, 2.0, 3.0, 4.0}) worst_car = std::max(worst_car, car_constant(w.family, q));
  }
  return {worst_gap <= 0.10 && worst_car <= 1.0 + 1e-6,
          "max relative gap to int (Mf)^p " + num(worst_gap) + ", max Car^q " + num(worst_car)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("drl_acceptance_" + std::to_string(::getpid()));
  const std::vector<nlohmann::json> configs = {
      {{"experiment", "counterexample"}, {"p", 4.0}, {"n_min", 4}, {"n_max", 16}, {"exact_max", 12}, {"samples", 20000}},
      {{"experiment", "counterexample"}, {"p", 3.0}, {"n_max", 8}, {"xs", "random"}, {"space", {{"kind", "seq"}, {"q", 1.0}, {"dim", 3}}}},
      {{"experiment", "rmf-probe"}, {"q", 1.0}, {"l_min", 2}, {"l_max", 4}},
      {{"experiment", "lemma-audit"}, {"p", 3.0}, {"instances", 4}, {"level", 4}, {"dim", 2}},
      {{"experiment", "witness"}, {"p", 2.0}, {"instances", 3}, {"level", 3}},
      {{"experiment", "radnorm"}, {"values", {{1.0, 2.0}, {0.5, -1.0}, {3.0, 0.0}}}, {"mode", "mc"}, {"samples", 50000}},
      {{"experiment", "typeconst"}, {"space", {{"kind", "seq"}, {"q", 1.0}, {"dim", 3}}}, {"nmax", 4}, {"restarts", 4}},
  };
  int mismatches = 0;
  int errors = 0;
  std::ostringstream sink;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 3; ++rep) {
      auto cfg = configs[c];
      cfg["out"] = (root / ("run" + std::to_string(rep))).string();
      cfg["threads"] = rep == 2 ? 4 : 1;
      if (run(cfg, root, sink) != kExitOk) ++errors;
      const std::string name = cfg["experiment"];
      outputs.push_back(slurp(fs::path(cfg["out"].get<std::string>()) / (name + ".csv")) +
                        slurp(fs::path(cfg["out"].get<std::string>()) / (name + ".json")));
    }
    if (outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].empty()) ++mismatches;
  }
  set_thread_count(0);
  fs::remove_all(root);
  return {mismatches == 0 && errors == 0, std::to_string(configs.size()) + " experiments x 3 runs (1, 1, 4 threads): " +
                                              std::to_string(mismatches) + " mismatches, " + std::to_string(errors) +
                                              " failed runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Hilbert R-bound oracle", hilbert_rbound_oracle},
      {"Rad(H) = l^2(H)", rad_of_hilbert},
      {"M_R = M in Hilbert mode", maximal_hilbert},
      {"type-2 constant of l^2", type_two_of_hilbert},
      {"counterexample identity and Car^p stability", counterexample_identity},
      {"counterexample growth exponents", counterexample_growth},
      {"stopping-time audit", lemma_audit_hilbert},
      {"Carleson constant vs exhaustive sup", carleson_brute_force},
      {"witness extraction", witness_extraction},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << " -- "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria pass"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
