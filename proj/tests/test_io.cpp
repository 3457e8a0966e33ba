#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "drl/error.hpp"
#include "drl/experiments.hpp"
#include "drl/io.hpp"
#include "oracles.hpp"

using namespace drl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("drl_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("space JSON round trips") {
  const std::vector<SpaceSpec> spaces{SpaceSpec::sequence(1.0, 3), SpaceSpec::sequence(kInf, 2),
                                      SpaceSpec::operators(SpaceSpec::sequence(2.0, 2), SpaceSpec::sequence(kInf, 4))};
  for (const auto& s : spaces) CHECK(io::space_from_json(io::space_to_json(s)) == s);
  CHECK(io::space_to_json(SpaceSpec::sequence(kInf, 2)).at("q") == "inf");
  CHECK(io::space_from_json(io::json::parse(R"({"kind":"seq","q":"inf","dim":2})")) == SpaceSpec::sequence(kInf, 2));
  CHECK_THROWS(io::space_from_json(io::json::parse(R"({"kind":"tree","dim":2})")));
  CHECK_THROWS(io::space_from_json(io::json::parse(R"({"kind":"seq","q":0.5,"dim":2})")));
}

TEST_CASE("doubles print exactly") {
  CounterRng rng(71, 0);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(kInf) == "inf");
}

TEST_CASE("dyadic files round trip") {
  const auto dir = scratch("dyadic");
  const auto space = SpaceSpec::sequence(1.0, 3);
  const auto f = random_function(3, space, 72, 0);
  io::write_dyadic(dir / "f.csv", f);
  CHECK(io::read_dyadic(dir / "f.csv", space) == f);

  put(dir / "plain.csv", "1,2\n0.5,1\n-2,3\n");
  const auto g = io::read_dyadic(dir / "plain.csv", SpaceSpec::sequence(2.0, 2));
  CHECK(g.values() == std::vector<double>{0.5, 1, -2, 3});
  put(dir / "labelled.csv", "# comment\nlevel,dim\n1,2\n\n0.5,1\n-2,3\n");
  CHECK(io::read_dyadic(dir / "labelled.csv", SpaceSpec::sequence(2.0, 2)) == g);

  put(dir / "short.csv", "2,1\n1\n2\n3\n");
  CHECK_THROWS(io::read_dyadic(dir / "short.csv", SpaceSpec::scalars()));
  put(dir / "wrongdim.csv", "1,2\n1,2\n3,4\n");
  CHECK_THROWS(io::read_dyadic(dir / "wrongdim.csv", SpaceSpec::sequence(2.0, 3)));
  put(dir / "garbage.csv", "1,2\n1,x\n3,4\n");
  CHECK_THROWS(io::read_dyadic(dir / "garbage.csv", SpaceSpec::sequence(2.0, 2)));
  CHECK_THROWS_AS(io::read_dyadic(dir / "absent.csv", SpaceSpec::scalars()), std::ios_base::failure);
}

TEST_CASE("vector files") {
  const auto dir = scratch("vectors");
  put(dir / "v.csv", "x,y\n1,2\n3,4\n");
  const auto xs = io::read_vectors(dir / "v.csv", SpaceSpec::sequence(2.0, 2));
  CHECK(xs == std::vector<Vector>{{1, 2}, {3, 4}});
  CHECK_THROWS(io::read_vectors(dir / "v.csv", SpaceSpec::sequence(2.0, 3)));
}

TEST_CASE("Carleson manifests round trip") {
  const auto dir = scratch("carleson");
  const auto theta = random_family(3, SpaceSpec::sequence(2.0, 2), 73, 0);
  io::write_carleson(dir / "sub" / "theta.json", theta);
  const auto back = io::read_carleson(dir / "sub" / "theta.json");
  CHECK(back.level() == theta.level());
  CHECK(back.space() == theta.space());
  CHECK(back.size() == theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) CHECK(back[j] == theta[j]);

  put(dir / "bad.json", R"({"level": 2, "space": {"kind":"seq","q":2,"dim":1}, "indices": [0], "files": []})");
  CHECK_THROWS(io::read_carleson(dir / "bad.json"));
  put(dir / "broken.json", "{ not json");
  CHECK_THROWS(io::read_carleson(dir / "broken.json"));
}

TEST_CASE("operator families round trip") {
  CounterRng rng(74, 0);
  const auto dom = SpaceSpec::sequence(1.0, 2);
  const auto cod = SpaceSpec::sequence(3.0, 3);
  std::vector<Operator> family{oracle::gaussian_operator(rng, dom, cod), oracle::gaussian_operator(rng, dom, cod)};
  const auto back = io::family_from_json(io::family_to_json(family));
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].matrix() == family[i].matrix());
    CHECK(back[i].domain() == dom);
    CHECK(back[i].codomain() == cod);
  }
  const auto ragged = io::json::parse(
      R"({"domain":{"kind":"seq","q":2,"dim":2},"codomain":{"kind":"seq","q":2,"dim":2},"operators":[[[1,2],[3]]]})");
  CHECK_THROWS(io::family_from_json(ragged));
}

TEST_CASE("writing into an unusable path fails with an I/O error") {
  const auto dir = scratch("write");
  put(dir / "file", "x");
  CHECK_THROWS(io::write_text(dir / "file" / "below.txt", "y"));
}
