#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "drl/carleson.hpp"
#include "drl/error.hpp"
#include "drl/experiments.hpp"
#include "oracles.hpp"

using namespace drl;

namespace {

CarlesonFamily constant_family(int level, const SpaceSpec& space, const std::vector<Vector>& xs) {
  std::vector<DyadicFunction> funcs;
  for (const auto& x : xs) funcs.push_back(DyadicFunction::constant(level, space, x));
  return CarlesonFamily(level, space, std::move(funcs));
}

}  // namespace

TEST_CASE("Carleson constant examples") {
  const auto s = SpaceSpec::scalars();
  // theta_j = 1 for all j: the tail from m has L+1-m unit terms.
  const CarlesonFamily ones = constant_family(2, s, {{1.0}, {1.0}, {1.0}});
  CHECK(car_constant(ones, 2.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
  CHECK(tail_energy(ones, 1, 2.0).values == std::vector<double>(4, 2.0));
  CHECK(car_constant(CarlesonFamily::zeros(3, s), 2.0) == 0.0);

  // A single spike theta_L = 1 on atom 0: the best set is that atom at level L.
  auto spike = CarlesonFamily::zeros(2, s);
  spike[2].at(0)[0] = 1.0;
  CHECK(car_constant(spike, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spike.support() == std::vector<std::size_t>{2});
  CHECK_THROWS(car_constant(ones, 0.5));
}

TEST_CASE("Carleson constants agree with the literal supremum") {
  for (int k = 0; k < 24; ++k) {
    const int level = k % 4;
    const SpaceSpec space = k % 2 ? SpaceSpec::sequence(1.0, 2) : SpaceSpec::sequence(2.0, 2);
    const auto theta = random_family(level, space, 51, static_cast<std::uint64_t>(k));
    for (double p : {1.0, 2.0, 3.0}) {
      CHECK(car_constant(theta, p) == doctest::Approx(oracle::car_constant(theta, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalized Carleson constants increase with p") {
  for (int k = 0; k < 10; ++k) {
    const auto theta = random_family(3, SpaceSpec::sequence(1.0, 2), 52, static_cast<std::uint64_t>(k));
    double previous = 0.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 5.0}) {
      const double v = car_constant(theta, p);
      CHECK(v >= previous * (1.0 - 1e-12));
      previous = v;
    }
  }
}

TEST_CASE("embedding is linear and supported on the family") {
  const auto sf = SpaceSpec::sequence(2.0, 2);
  const auto theta_space = SpaceSpec::scalars();
  CHECK(embedding_codomain(sf, theta_space) == sf);
  const auto theta = random_family(3, theta_space, 53, 0);
  const auto f = random_function(3, sf, 53, 1);
  const auto g = random_function(3, sf, 53, 2);
  const auto sum = embed(theta, f + 2.0 * g);
  const auto a = embed(theta, f);
  const auto b = embed(theta, g);
  for (std::size_t i = 0; i < sum.atoms(); ++i) {
    for (std::size_t j = 0; j < sum.terms(); ++j) {
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(sum.at(i, j)[c] == doctest::Approx(a.at(i, j)[c] + 2.0 * b.at(i, j)[c]).epsilon(1e-12));
      }
    }
  }
  // Each term is E_j f times the scalar theta_j.
  for (std::size_t i = 0; i < a.atoms(); ++i) {
    for (int j = 0; j <= 3; ++j) {
      const auto ej = oracle::cond_expect(f, j);
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(a.at(i, static_cast<std::size_t>(j))[c] ==
              doctest::Approx(ej[i][c] * theta.at(static_cast<std::size_t>(j), i)[0]).epsilon(1e-12));
      }
    }
  }
  auto sparse = CarlesonFamily::zeros(3, theta_space);
  sparse[1] = theta[1];
  const auto only = embed(sparse, f);
  for (std::size_t i = 0; i < only.atoms(); ++i) {
    for (std::size_t j : {0, 2, 3}) {
      for (double v : only.at(i, j)) CHECK(v == 0.0);
    }
  }
  CHECK(embed_norm(theta, DyadicFunction::zeros(3, sf), 2.0) == 0.0);
  CHECK_THROWS(embed(theta, random_function(2, sf, 53, 3)));
}

TEST_CASE("operator-valued functions act on vector-valued families") {
  const auto dom = SpaceSpec::sequence(2.0, 2);
  const auto cod = SpaceSpec::sequence(1.0, 3);
  const auto f_space = SpaceSpec::operators(dom, cod);
  CHECK(embedding_codomain(f_space, dom) == cod);
  CHECK_THROWS(embedding_codomain(f_space, SpaceSpec::sequence(2.0, 3)));
  CounterRng rng(54, 0);
  const auto t = oracle::gaussian_operator(rng, dom, cod);
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < t.matrix().rows(); ++r) {
    for (Eigen::Index c = 0; c < t.matrix().cols(); ++c) flat.push_back(t.matrix()(r, c));
  }
  const auto f = DyadicFunction::constant(2, f_space, flat);
  const std::vector<Vector> xs{{1, 0}, {0, 1}, {1, 1}};
  const auto theta = constant_family(2, dom, xs);
  const auto image = embed(theta, f);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto expected = t.apply(xs[j]);
    for (std::size_t c = 0; c < 3; ++c) CHECK(image.at(1, j)[c] == doctest::Approx(expected[c]).epsilon(1e-14));
  }
}

TEST_CASE("embedding of constants reduces to a Rademacher norm") {
  // f = c constant gives Theta f = (c x_j), so |Theta f| = |c| Rad_p(x_j).
  CounterRng rng(55, 0);
  const auto space = SpaceSpec::sequence(1.0, 2);
  for (int k = 0; k < 10; ++k) {
    const double c = rng.normal();
    std::vector<Vector> xs;
    for (int j = 0; j < 4; ++j) xs.push_back({rng.normal()});
    const auto theta = constant_family(3, SpaceSpec::scalars(), xs);
    const Vector value = oracle::gaussian(rng, 2);
    Vector scaled = value;
    for (double& v : scaled) v *= c;
    const auto f = DyadicFunction::constant(3, space, scaled);
    std::vector<Vector> terms;
    for (const auto& x : xs) {
      Vector t = value;
      for (double& v : t) v *= x[0];
      terms.push_back(t);
    }
    const double expected = std::abs(c) * std::pow(oracle::rad_moment(space, terms, 3.0), 1.0 / 3.0);
    CHECK(embed_norm(theta, f, 3.0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("operator norm search") {
  const auto sf = SpaceSpec::sequence(2.0, 2);
  const auto zero = CarlesonFamily::zeros(2, SpaceSpec::scalars());
  SearchParams params;
  params.restarts = 3;
  params.sweeps = 3;
  CHECK(operator_norm_search(zero, sf, 2.0, params).value == 0.0);

  const auto theta = random_family(2, SpaceSpec::scalars(), 56, 0);
  const auto f = random_function(2, sf, 56, 1);
  const std::vector<DyadicFunction> initial{f};
  const auto est = operator_norm_search(theta, sf, 2.0, params, initial);
  CHECK(est.lower_bound);
  CHECK(est.value >= embed_norm(theta, f, 2.0) / lp_norm(f, 2.0) * (1.0 - 1e-12));
  CHECK(est.value == doctest::Approx(embed_norm(theta, est.witness, 2.0) / lp_norm(est.witness, 2.0)).epsilon(1e-9));
  // Hilbert values: |Theta f|_p <= Car_p |M f|_p <= Car_p p' |f|_p.
  CHECK(est.value <= car_constant(theta, 2.0) * 2.0 * (1.0 + 1e-9));
}

TEST_CASE("stopping times of the zero function never fire") {
  const auto f = DyadicFunction::zeros(3, SpaceSpec::sequence(2.0, 2));
  const auto d = stopping_decompose(f, 0, RBoundMode::hilbert);
  for (std::size_t i = 0; i < d.atoms(); ++i) {
    for (int k = d.k_min - 2; k <= d.k_max + 2; ++k) CHECK(d.stop(i, k) == StoppingDecomposition::kNever);
    CHECK(d.leading(i) == std::vector<int>{0, 1, 2, 3});
  }
}

TEST_CASE("stopping times of a doubling function step by one") {
  const int level = 5;
  const auto f = oracle::doubling_function(level, 1.0);
  const auto d = stopping_decompose(f, 0, RBoundMode::hilbert);
  // On atom 0, |E_j f| = 2^j, so the prefix bound first exceeds 2^k at j = k + 1.
  for (int k = 0; k < level; ++k) CHECK(d.stop(0, k) == k + 1);
  CHECK(d.stop(0, level) == StoppingDecomposition::kNever);
  CHECK(d.stop(0, -1) == 0);
  CHECK(d.maximal(0) == 32.0);
  CHECK_THROWS(stopping_decompose(f, -1, RBoundMode::hilbert));
  CHECK_THROWS(stopping_decompose(random_function(2, SpaceSpec::sequence(1.0, 2), 1, 1), 0, RBoundMode::hilbert));
}

TEST_CASE("stopping decompositions match their definition") {
  for (int k = 0; k < 30; ++k) {
    const int level = 1 + k % 5;
    const int start = k % (level + 1);
    const auto f = random_function(level, SpaceSpec::sequence(2.0, 2), 57, static_cast<std::uint64_t>(k));
    const auto d = stopping_decompose(f, start, RBoundMode::hilbert);
    CHECK(std::ldexp(1.0, d.k_max) >= d.maximal(0));
    for (std::size_t i = 0; i < d.atoms(); ++i) {
      // Prefix bounds equal the running maximum of |E_j f| in Hilbert spaces.
      double running = 0.0;
      for (int j = 0; j <= level; ++j) {
        const auto e = oracle::cond_expect(f, j)[i];
        running = std::max(running, std::hypot(e[0], e[1]));
        CHECK(d.prefix_bound(i, j) == doctest::Approx(running).epsilon(1e-12));
      }
      for (int kk = d.k_min; kk <= d.k_max; ++kk) {
        const double threshold = std::ldexp(1.0, kk);
        int expected = StoppingDecomposition::kNever;
        for (int j = start; j <= level; ++j) {
          if (d.prefix_bound(i, j) > threshold) {
            expected = j;
            break;
          }
        }
        CHECK(d.stop(i, kk) == expected);
        CHECK((d.stop(i, kk) != StoppingDecomposition::kNever) == (d.maximal(i) > threshold));
        if (kk < d.k_max) CHECK(d.stop(i, kk) <= d.stop(i, kk + 1));
      }
      // Leading indices and blocks partition {start, ..., L}.
      std::multiset<int> seen;
      for (int j : d.leading(i)) seen.insert(j);
      for (int kk = d.k_min; kk <= d.k_max; ++kk) {
        for (int j : d.block(i, kk)) seen.insert(j);
      }
      std::multiset<int> all;
      for (int j = start; j <= level; ++j) all.insert(j);
      CHECK(seen == all);
      for (int j : d.leading(i)) {
        for (double v : oracle::cond_expect(f, j)[i]) CHECK(std::abs(v) <= std::ldexp(1.0, d.k_min));
      }
    }
  }
}

TEST_CASE("audit of the zero function") {
  const auto f = DyadicFunction::zeros(3, SpaceSpec::sequence(2.0, 2));
  const auto theta = random_family(3, SpaceSpec::scalars(), 58, 0);
  const auto rep = lemma_audit(theta, f, 4.0, 2.0, 0);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.hard_steps_hold());
}

TEST_CASE("audit holds on random instances") {
  for (int k = 0; k < 12; ++k) {
    const int level = 2 + k % 3;
    const double p = 2.0 + static_cast<double>(k % 3);
    const auto f = random_function(level, SpaceSpec::sequence(2.0, 2), 59, static_cast<std::uint64_t>(k));
    const auto theta = random_family(level, SpaceSpec::scalars(), 60, static_cast<std::uint64_t>(k));
    const auto rep = lemma_audit(theta, f, p, 2.0, k % 2);
    CHECK(rep.hard_steps_hold());
    CHECK(rep.e_ratio >= rep.e_lower * (1.0 - 1e-9));
    CHECK(rep.e_ratio <= rep.e_upper * (1.0 + 1e-9));
    CHECK(rep.end_to_end <= 10.0);
  }
  const auto l1 = random_function(2, SpaceSpec::sequence(1.0, 2), 61, 0);
  CHECK_THROWS(lemma_audit(random_family(2, SpaceSpec::scalars(), 61, 1), l1, 4.0, 2.0, 0));
}

TEST_CASE("the embedding stays bounded by Car times the maximal Lorentz norm") {
  for (int level = 4; level <= 10; level += 2) {
    const auto f = random_function(level, SpaceSpec::sequence(2.0, 2), 62, static_cast<std::uint64_t>(level));
    const auto theta = random_family(level, SpaceSpec::scalars(), 63, static_cast<std::uint64_t>(level));
    const auto rep = lemma_audit(theta, f, 4.0, 2.0, 0);
    CHECK(rep.hard_steps_hold());
    CHECK(rep.end_to_end <= 10.0);
  }
}

TEST_CASE("witness families") {
  SearchParams params;
  params.restarts = 4;
  params.sweeps = 4;
  // Constant f: the prefix bound on every atom is |x|, and the embedding
  // integral matches the searched R-bound integral.
  const auto c = DyadicFunction::constant(2, SpaceSpec::sequence(2.0, 2), Vector{3, 4});
  const auto w = witness_family(c, 2.0, 2, params);
  for (double v : w.atom_values) CHECK(v == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(w.rbound_integral == doctest::Approx(25.0).epsilon(1e-9));
  for (int k = 0; k < 6; ++k) {
    const int level = 2 + k % 2;
    const auto f = random_function(level, SpaceSpec::sequence(2.0, 2), 64, static_cast<std::uint64_t>(k));
    const auto r = witness_family(f, 3.0, level, params);
    CHECK(r.embedding_integral >= 0.9 * r.rbound_integral);
    CHECK(r.embedding_integral <= r.rbound_integral * (1.0 + 1e-9));
    for (double q : {1.0, 2.0, 4.0}) CHECK(car_constant(r.family, q) <= 1.0 + 1e-9);
  }
}
