#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drl/error.hpp"
#include "drl/experiments.hpp"
#include "drl/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flag {
  std::string name;  // command-line flag without dashes
  std::string key;   // config field
  std::string help;
  bool is_path = false;
};

struct Command {
  std::string name;
  std::string description;
  std::string columns;
  std::vector<Flag> flags;
};

const std::vector<Flag> kSearchFlags = {
    {"nmax", "nmax", "longest selection tried by the search"},
    {"multiplicity", "multiplicity", "uses of one operator per selection"},
    {"restarts", "restarts", "random restarts"},
    {"sweeps", "sweeps", "polishing sweeps per restart"},
    {"seed", "seed", "search seed"},
};

std::vector<Flag> with_search(std::vector<Flag> flags) {
  flags.insert(flags.end(), kSearchFlags.begin(), kSearchFlags.end());
  return flags;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"counterexample", "Sweep of the embedding counterexample over N.",
       "N,embed_norm,lp_norm,ratio,car_constant,mass_ratio,mode",
       {{"p", "p", "exponent (default 4)"},
        {"n-min", "n_min", "smallest N (default 4)"},
        {"n-max", "n_max", "largest N (default 14)"},
        {"space", "space", "space of the x_j as JSON (default scalars)"},
        {"xs", "xs", "ones | random"},
        {"exact-max", "exact_max", "largest N evaluated exactly (default 14)"},
        {"samples", "samples", "Monte-Carlo samples above exact-max"},
        {"seed", "seed", "seed for random x_j and sampling"}}},
      {"rmf-probe", "Rademacher maximal function ratio on l^1 or l^2 of dimension 2^L.",
       "L,dim,rad_ratio,std_ratio,candidate",
       with_search({{"q", "q", "1 or 2"},
                    {"p", "p", "exponent (default 2)"},
                    {"l-min", "l_min", "smallest level"},
                    {"l-max", "l_max", "largest level (at most 8)"}})},
      {"lemma-audit", "Step-by-step audit of the stopping-time estimate (Hilbert values).",
       "instance,p,r,s,k_min,k_max,lhs,car,maximal_lorentz,end_to_end,a_max_error,b_max_excess,c_type_constant,"
       "c_minkowski_ratio,d_contraction_excess,d_carleson_excess,d_sum_excess,e_ratio,e_lower,e_upper,hard_steps_hold",
       {{"p", "p", "exponent p (default 4)"},
        {"r", "r", "type exponent r (default 2)"},
        {"N", "N", "truncation level"},
        {"tol", "tol", "relative tolerance (default 1e-9)"},
        {"theta", "theta", "Carleson family manifest", true},
        {"f", "f", "function file", true},
        {"f-space", "f_space", "space of f as JSON"},
        {"instances", "instances", "random instances when no files are given"},
        {"level", "level", "level of random instances"},
        {"dim", "dim", "dimension of random instances"},
        {"seed", "seed", "seed of random instances"}}},
      {"witness", "Witness Carleson families from R-bound searches.",
       "instance,level,rbound_integral,maximal_integral,relative_gap,embedding_integral,car_1,car_2,car_4",
       with_search({{"p", "p", "exponent (default 2)"},
                    {"level", "level", "witness level N"},
                    {"f", "f", "function file", true},
                    {"space", "space", "space of f as JSON"},
                    {"instances", "instances", "random instances when no file is given"},
                    {"dim", "dim", "dimension of random instances"},
                    {"instance-seed", "instance_seed", "seed of random instances"}})},
      {"radnorm", "Rad_p norm of a finite sequence; JSON {value, mode, samples, seed}.",
       "value,moment,p,mode,samples,seed",
       {{"space", "space", "space as JSON"},
        {"vectors", "vectors", "CSV with one vector per row", true},
        {"p", "p", "exponent"},
        {"mode", "mode", "exact | mc"},
        {"samples", "samples", "Monte-Carlo samples"},
        {"seed", "seed", "Monte-Carlo seed"}}},
      {"rbound", "Lower bound on the R_p-bound of an operator family.", "value,p,lower_bound,hilbert_value",
       with_search({{"family", "family", "operator family JSON file", true}, {"p", "p", "exponent"}})},
      {"typeconst", "Lower bound on the type-p constant of a sequence space.", "value,p,count",
       with_search({{"space", "space", "space as JSON"}, {"p", "p", "type exponent in [1, 2]"}})},
      {"car-constant", "p-Carleson constant of a family.", "m,max_atom_average",
       {{"theta", "theta", "Carleson family manifest", true},
        {"p", "p", "exponent"},
        {"mode", "mode", "exact | mc"},
        {"samples", "samples", "Monte-Carlo samples"},
        {"seed", "seed", "Monte-Carlo seed"}}},
      {"embed-norm", "L^p(Rad_p) norm of the embedded function.", "embed_norm,lp_norm,ratio",
       {{"theta", "theta", "Carleson family manifest", true},
        {"f", "f", "function file", true},
        {"f-space", "f_space", "space of f as JSON"},
        {"p", "p", "exponent"},
        {"mode", "mode", "exact | mc"},
        {"samples", "samples", "Monte-Carlo samples"},
        {"seed", "seed", "Monte-Carlo seed"}}},
      {"op-norm-search", "Lower bound on the norm of the embedding operator.", "value,p,lower_bound",
       with_search({{"theta", "theta", "Carleson family manifest", true},
                    {"f", "f", "initial function file", true},
                    {"f-space", "f_space", "space of f as JSON"},
                    {"p", "p", "exponent"}})},
      {"condexp", "Conditional expectation E_j f, written in the function file format.", "level,dim header then values",
       {{"f", "f", "function file", true}, {"space", "space", "space of f as JSON"}, {"j", "j", "level j"}}},
      {"maximal", "Maximal function Mf or M_R f per atom.", "atom,value",
       with_search({{"f", "f", "function file", true},
                    {"space", "space", "space of f as JSON"},
                    {"kind", "kind", "std | rad"},
                    {"rbound", "rbound", "hilbert | search"}})},
      {"lorentz", "Lorentz L^{p,s} norm of |g| for a scalar function file.", "p,s,value",
       {{"g", "g", "scalar function file", true}, {"p", "p", "exponent p"}, {"s", "s", "exponent s"}}},
  };
  return table;
}

/// Flag text becomes JSON when it parses as JSON, otherwise a string.
json flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc >= 2 && argv[1][0] != '-') {
    const std::string name = argv[1];
    bool known = name == "run";
    for (const auto& c : commands()) known = known || c.name == name;
    if (!known) {
      std::cerr << "config error: unknown experiment \"" << name << "\"\n";
      return drl::kExitConfig;
    }
  }

  CLI::App app{"Numerical laboratory for Rademacher maximal functions and Carleson embeddings.\n"
               "Each experiment writes <out>/<experiment>.csv and <out>/<experiment>.json (schema 1).\n"
               "Exit codes: 0 ok, 2 config error, 3 numeric assertion failure, 4 i/o error."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = -1;
  std::map<std::string, std::string> values;
  std::map<std::string, const Flag*> flag_of;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)");
    sub->add_option("--out", out_dir, "output directory (default: current directory)");
    sub->add_option("--threads", threads, "worker threads, 0 = hardware concurrency");
  };

  auto* run_cmd = app.add_subcommand("run", "Run the experiment named in the config file.");
  add_common(run_cmd);

  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.description);
    sub->footer("CSV columns: " + cmd.columns);
    add_common(sub);
    for (const auto& flag : cmd.flags) {
      const std::string id = cmd.name + "/" + flag.key;
      flag_of[id] = &flag;
      sub->add_option("--" + flag.name, values[id], flag.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return drl::kExitConfig;
  }

  const auto* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();

  json config = json::object();
  fs::path base = fs::current_path();
  try {
    if (!config_path.empty()) {
      config = drl::io::read_json(config_path);
      if (!config.is_object()) throw drl::ConfigError("config must be a JSON object");
      base = fs::absolute(config_path).parent_path();
    }
  } catch (const drl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return drl::kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return drl::kExitIo;
  }

  if (name == "run") {
    if (!config.contains("experiment")) {
      std::cerr << "config error: run needs --config with an \"experiment\" field\n";
      return drl::kExitConfig;
    }
  } else {
    if (config.contains("experiment") && config["experiment"] != name) {
      std::cerr << "config error: config is for \"" << config["experiment"].get<std::string>() << "\", not \"" << name
                << "\"\n";
      return drl::kExitConfig;
    }
    config["experiment"] = name;
    for (const auto& [id, text] : values) {
      if (text.empty() || id.rfind(name + "/", 0) != 0) continue;
      const Flag& flag = *flag_of.at(id);
      config[flag.key] = flag.is_path ? json(fs::absolute(text).string()) : flag_value(text);
    }
  }
  if (!out_dir.empty()) config["out"] = fs::absolute(out_dir).string();
  if (threads >= 0) config["threads"] = threads;

  return drl::run(config, base, std::cerr);
}
