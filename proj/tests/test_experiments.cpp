#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drl/carleson.hpp"
#include "drl/experiments.hpp"
#include "drl/io.hpp"
#include "oracles.hpp"

using namespace drl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("drl_test_experiments_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("counterexample at N = 1") {
  const double p = 4.0;
  const auto pair = counterexample_build(p, SpaceSpec::scalars(), std::vector<Vector>{{1.0}});
  // y_1 = 2^{1/p}; f = 2 y_1 on [1/2, 1) and 0 on [0, 1/2); theta_0 = 1 on [0, 1/2).
  const double y1 = std::pow(2.0, 1.0 / p);
  CHECK(pair.ys.size() == 1);
  CHECK(pair.ys[0][0] == doctest::Approx(y1).epsilon(1e-15));
  CHECK(pair.f.values() == std::vector<double>{0.0, 2.0 * y1});
  CHECK(pair.theta[0].values() == std::vector<double>{1.0, 0.0});
  CHECK(pair.theta[1].values() == std::vector<double>{0.0, 0.0});
}

TEST_CASE("counterexample structure") {
  for (double p : {2.0, 3.0, 4.0}) {
    for (std::size_t n = 1; n <= 7; ++n) {
      const auto space = SpaceSpec::sequence(1.0, 2);
      const auto xs = counterexample_vectors(space, n, XsRule::random_unit, 9);
      for (const auto& x : xs) CHECK(norm(space, x) == doctest::Approx(1.0).epsilon(1e-14));
      const auto pair = counterexample_build(p, space, xs);
      const int level = static_cast<int>(n);
      CHECK(pair.f.level() == level);
      // E_{j-1} f = y_j on atom 0 and y_j = 2^{j/p} x_j.
      for (std::size_t j = 1; j <= n; ++j) {
        const auto e = oracle::cond_expect(pair.f, static_cast<int>(j) - 1)[0];
        for (std::size_t c = 0; c < 2; ++c) {
          CHECK(pair.ys[j - 1][c] == doctest::Approx(std::pow(2.0, static_cast<double>(j) / p) * xs[j - 1][c]).epsilon(1e-14));
          CHECK(e[c] == doctest::Approx(pair.ys[j - 1][c]).epsilon(1e-12));
        }
      }
      // E_N f vanishes on atom 0.
      for (double v : pair.f.at(0)) CHECK(v == 0.0);
      // |Theta f|_p equals (2^-N E|sum eps_j 2^{(N-j)/p} y_{j+1}|^p)^{1/p} = Rad_p(x_j).
      std::vector<Vector> terms;
      for (std::size_t j = 0; j < n; ++j) terms.push_back(xs[j]);
      const double rad = std::pow(oracle::rad_moment(space, terms, p), 1.0 / p);
      CHECK(embed_norm(pair.theta, pair.f, p) == doctest::Approx(rad).epsilon(1e-12));
      // |f|_p^p <= 3^p sum |y_j|^p 2^-j = 3^p sum |x_j|^p.
      CHECK(std::pow(lp_norm(pair.f, p), p) <= std::pow(3.0, p) * static_cast<double>(n) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("counterexample L^p norm formula with unit scalars") {
  const double p = 4.0;
  for (int n = 1; n <= 8; ++n) {
    const auto xs = counterexample_vectors(SpaceSpec::scalars(), static_cast<std::size_t>(n), XsRule::ones, 0);
    const auto pair = counterexample_build(p, SpaceSpec::scalars(), xs);
    // Atom [2^-j, 2^-j+1) has measure 2^-j and value 2^{1+j/p} - 2^{(j+1)/p}, except j = N with 2^{1+N/p}.
    double expected = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double y = std::pow(2.0, j / p);
      const double next = j < n ? std::pow(2.0, (j + 1) / p) : 0.0;
      expected += std::ldexp(std::pow(2.0 * y - next, p), -j);
    }
    CHECK(std::pow(lp_norm(pair.f, p), p) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("sweep rows recompute from their definitions") {
  const double p = 3.0;
  const auto space = SpaceSpec::sequence(2.0, 2);
  SweepOptions opts;
  opts.rule = XsRule::random_unit;
  opts.seed = 4;
  const auto sweep = counterexample_sweep(p, 2, 7, space, opts);
  CHECK(sweep.rows.size() == 6);
  for (const auto& row : sweep.rows) {
    const auto xs = counterexample_vectors(space, static_cast<std::size_t>(row.n), opts.rule, opts.seed);
    const auto pair = counterexample_build(p, space, xs);
    CHECK(row.exact);
    CHECK(row.embed_norm == doctest::Approx(embed_norm(pair.theta, pair.f, p)).epsilon(1e-12));
    CHECK(row.lp_norm == doctest::Approx(lp_norm(pair.f, p)).epsilon(1e-12));
    CHECK(row.ratio == doctest::Approx(row.embed_norm / row.lp_norm).epsilon(1e-12));
    const double car = row.n <= 3 ? oracle::car_constant(pair.theta, p) : car_constant(pair.theta, p);
    CHECK(row.car_constant == doctest::Approx(car).epsilon(1e-12));
    CHECK(row.mass_ratio == doctest::Approx(row.embed_norm / std::pow(static_cast<double>(row.n), 1.0 / p)).epsilon(1e-12));
  }
  const std::vector<double> x{1, 2, 4, 8}, y{3, 6 * std::sqrt(2.0), 24, 48 * std::sqrt(2.0)};
  CHECK(loglog_slope(x, y) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("maximal probe") {
  SearchParams params;
  params.restarts = 1;
  params.sweeps = 2;
  const auto l2 = rmf_probe(2.0, 2.0, 3, params);
  CHECK(l2.rad_ratio == doctest::Approx(l2.std_ratio).epsilon(1e-12));
  const auto l1 = rmf_probe(1.0, 2.0, 3, params);
  CHECK(l1.rad_ratio >= l1.std_ratio * (1.0 - 1e-12));
  CHECK(l1.dim == 8);
  CHECK(l1.rad_ratio > 1.0);
}

TEST_CASE("run reports configuration errors") {
  const auto dir = scratch("errors");
  std::ostringstream err;
  CHECK(run(json{{"experiment", "nonsense"}, {"out", dir.string()}}, dir, err) == kExitConfig);
  CHECK(run(json::array(), dir, err) == kExitConfig);
  CHECK(run(json{{"experiment", "counterexample"}, {"out", dir.string()}, {"p", 0.5}}, dir, err) == kExitConfig);
  CHECK(run(json{{"experiment", "counterexample"}, {"out", dir.string()}, {"bogus", 1}}, dir, err) == kExitConfig);
  CHECK(run(json{{"experiment", "radnorm"}, {"out", dir.string()}, {"vectors", "missing.csv"}}, dir, err) == kExitIo);
  CHECK_FALSE(err.str().empty());
  CHECK(experiment_names().size() == 13);
}

TEST_CASE("runs write deterministic tables") {
  const auto dir = scratch("runs");
  const json config{{"experiment", "counterexample"}, {"out", "a"}, {"n_min", 2}, {"n_max", 6}, {"p", 4.0}};
  std::ostringstream err;
  REQUIRE(run(config, dir, err) == kExitOk);
  json second = config;
  second["out"] = "b";
  second["threads"] = 3;
  REQUIRE(run(second, dir, err) == kExitOk);
  const auto csv = slurp(dir / "a" / "counterexample.csv");
  CHECK(csv.rfind("N,embed_norm,lp_norm,ratio,car_constant,mass_ratio,mode\n", 0) == 0);
  CHECK(csv == slurp(dir / "b" / "counterexample.csv"));
  CHECK(slurp(dir / "a" / "counterexample.json") == slurp(dir / "b" / "counterexample.json"));
  const auto summary = json::parse(slurp(dir / "a" / "counterexample.json"));
  CHECK(summary.at("schema") == 1);
  CHECK(summary.at("status") == "ok");
  CHECK(summary.at("rows") == 5);
}

TEST_CASE("small runs of every experiment succeed") {
  const auto dir = scratch("all");
  io::write_dyadic(dir / "f.csv", random_function(2, SpaceSpec::sequence(2.0, 2), 1, 1));
  io::write_dyadic(dir / "g.csv", random_function(2, SpaceSpec::scalars(), 1, 2));
  io::write_carleson(dir / "theta.json", random_family(2, SpaceSpec::scalars(), 1, 3));
  const json l2 = {{"kind", "seq"}, {"q", 2.0}, {"dim", 2}};
  const std::vector<json> configs{
      {{"experiment", "rmf-probe"}, {"l_min", 2}, {"l_max", 3}, {"restarts", 1}, {"sweeps", 2}},
      {{"experiment", "lemma-audit"}, {"instances", 2}, {"level", 3}, {"dim", 2}, {"seed", 5}},
      {{"experiment", "witness"}, {"p", 2.0}, {"level", 2}, {"instances", 1}, {"dim", 2}, {"restarts", 2}, {"sweeps", 2}},
      {{"experiment", "radnorm"}, {"space", l2}, {"values", {{1, 0}, {0, 1}}}, {"p", 2.0}},
      {{"experiment", "typeconst"}, {"space", {{"kind", "seq"}, {"q", 1.0}, {"dim", 3}}}, {"p", 2.0}, {"restarts", 2}},
      {{"experiment", "car-constant"}, {"theta", "theta.json"}, {"p", 2.0}},
      {{"experiment", "embed-norm"}, {"theta", "theta.json"}, {"f", "f.csv"}, {"f_space", l2}, {"p", 2.0}},
      {{"experiment", "condexp"}, {"f", "f.csv"}, {"space", l2}, {"j", 1}},
      {{"experiment", "maximal"}, {"f", "f.csv"}, {"space", l2}, {"kind", "rad"}, {"rbound", "hilbert"}},
      {{"experiment", "lorentz"}, {"g", "g.csv"}, {"p", 3.0}, {"s", 2.0}},
  };
  for (auto config : configs) {
    config["out"] = "out";
    std::ostringstream err;
    INFO(config.dump());
    const int code = run(config, dir, err);
    INFO(err.str());
    CHECK(code == kExitOk);
    const auto name = config.at("experiment").get<std::string>();
    CHECK(fs::exists(dir / "out" / (name + ".csv")));
    CHECK(json::parse(slurp(dir / "out" / (name + ".json"))).at("status") == "ok");
  }
}
