#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drl/carleson.hpp"
#include "drl/dyadic.hpp"
#include "drl/rademacher.hpp"
#include "drl/rbound.hpp"
#include "drl/spaces.hpp"

namespace drl {

/// The pair (f, theta) at level N built from x_1..x_N: with y_j = 2^{j/p} x_j
/// and y_{N+1} = 0, f = 2y_j - y_{j+1} on [2^-j, 2^-j+1), f = 0 on
/// [0, 2^-N), and theta_j = 2^{(N-j-1)/p} on [0, 2^-N) for j < N.
struct CounterexamplePair {
  DyadicFunction f;
  CarlesonFamily theta;
  /// y_1..y_N.
  std::vector<Vector> ys;
};

/// Builds the pair and checks E_{j-1} f = y_j on [0, 2^{-j+1}) for every j,
/// throwing AssertionFailure otherwise.
CounterexamplePair counterexample_build(double p, const SpaceSpec& space, std::span<const Vector> xs);

enum class XsRule { ones, random_unit };

/// x_1..x_N under the given rule: all coordinates equal to 1 (scalars) or
/// vectors drawn from (seed, N) and normalized in the space.
std::vector<Vector> counterexample_vectors(const SpaceSpec& space, std::size_t n, XsRule rule, std::uint64_t seed);

struct SweepRow {
  int n = 0;
  double embed_norm = 0.0;
  double lp_norm = 0.0;
  /// embed_norm / lp_norm.
  double ratio = 0.0;
  double car_constant = 0.0;
  /// embed_norm / (sum |x_j|^p)^{1/p}.
  double mass_ratio = 0.0;
  bool exact = true;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Least-squares slope of log(ratio) against log(N) over rows with N >= 4.
  double exponent = 0.0;
  /// The same slope for mass_ratio.
  double mass_exponent = 0.0;
};

struct SweepOptions {
  XsRule rule = XsRule::ones;
  std::uint64_t seed = 0;
  /// Rows with N above this use Monte-Carlo moments.
  int exact_max = 14;
  std::uint64_t samples = 200000;
};

SweepResult counterexample_sweep(double p, int n_min, int n_max, const SpaceSpec& space,
                                 const SweepOptions& options = {});

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct RmfProbeRow {
  int level = 0;
  std::size_t dim = 0;
  /// Largest |M_R f|_p / |f|_p over the candidates (M_R searched from below).
  double rad_ratio = 0.0;
  /// |Mf|_p / |f|_p for the same candidate.
  double std_ratio = 0.0;
  /// Which candidate attained rad_ratio.
  std::string candidate;
};

/// Candidate f: the Haar witness f(xi) = e_{atom(xi)} in l^q_{2^L}, a
/// constant, and `params.restarts` Gaussian functions.
RmfProbeRow rmf_probe(double q, double p, int level, const SearchParams& params);

/// Maximal function for the probe: exact in Hilbert spaces, otherwise the
/// fixed-selection search (a lower bound dominating Mf).
ScalarDyadicFunction probe_maximal(const DyadicFunction& f, const SearchParams& params);

DyadicFunction random_function(int level, const SpaceSpec& space, std::uint64_t seed, std::uint64_t stream);
CarlesonFamily random_family(int level, const SpaceSpec& space, std::uint64_t seed, std::uint64_t stream);

/// Exit statuses of run().
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitAssertion = 3, kExitIo = 4 };

/// Names accepted in the "experiment" field.
std::vector<std::string> experiment_names();

/// Runs the experiment described by `config`, writing <out>/<experiment>.csv
/// and <out>/<experiment>.json. Relative input paths are resolved against
/// `base`. Errors are reported on `err` and mapped to an ExitCode.
int run(const nlohmann::json& config, const std::filesystem::path& base, std::ostream& err);

}  // namespace drl
