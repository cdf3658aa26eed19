#include "snaprg/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace snaprg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("config: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
}

template <typename T>
T require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) fail(path + "." + key, "missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path + "." + key, "wrong type");
  }
}

template <typename T>
T optional_or(const json& obj, const std::string& path, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path + "." + key, "wrong type");
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  check_keys(j, "config", {"lattice", "model", "sampler", "rg", "wfn", "fit", "io"});
  RunConfig cfg;

  // lattice
  {
    if (!j.contains("lattice")) fail("lattice", "missing section");
    const json& l = j.at("lattice");
    check_keys(l, "lattice", {"dimension", "lengths"});
    const int dim = require<int>(l, "lattice", "dimension");
    const auto lengths = require<std::vector<int>>(l, "lattice", "lengths");
    try {
      cfg.lattice = build_lattice(dim, lengths);
    } catch (const std::exception& e) {
      fail("lattice", e.what());
    }
  }

  // model
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"j", "perturbation", "strength"});
    cfg.coupling = optional_or<double>(m, "model", "j", 1.0);
    if (!(cfg.coupling > 0)) fail("model.j", "must be > 0");
    const auto pert = optional_or<std::string>(m, "model", "perturbation", "none");
    if (pert == "none")
      cfg.perturbation = Perturbation::None;
    else if (pert == "nnn")
      cfg.perturbation = Perturbation::NextNearest;
    else if (pert == "field")
      cfg.perturbation = Perturbation::Field;
    else
      fail("model.perturbation", "must be one of none | nnn | field");
    if (m.contains("strength")) {
      if (cfg.perturbation == Perturbation::None)
        fail("model.strength", "set without a perturbation");
      cfg.perturbation_strength = require<double>(m, "model", "strength");
    }
  }

  // sampler
  {
    if (!j.contains("sampler")) fail("sampler", "missing section");
    const json& s = j.at("sampler");
    check_keys(s, "sampler",
               {"beta", "t", "t_over_tc", "n_snapshots", "thermalization", "decorrelation",
                "n_chains", "mix", "seed", "threads"});
    const int given = s.contains("beta") + s.contains("t") + s.contains("t_over_tc");
    if (given != 1) fail("sampler", "give exactly one of beta | t | t_over_tc");
    if (s.contains("beta")) {
      cfg.sampler.beta = require<double>(s, "sampler", "beta");
    } else if (s.contains("t")) {
      const double t = require<double>(s, "sampler", "t");
      if (!(t > 0)) fail("sampler.t", "must be > 0");
      cfg.sampler.beta = 1.0 / t;  // k_B = 1
    } else {
      const double frac = require<double>(s, "sampler", "t_over_tc");
      if (!(frac > 0)) fail("sampler.t_over_tc", "must be > 0");
      if (cfg.perturbation != Perturbation::None)
        fail("sampler.t_over_tc", "T_c is built in only for the unperturbed model");
      const double tc = cfg.lattice.dimension() == 2 ? critical_temperature_2d(cfg.coupling)
                                                     : critical_temperature_3d(cfg.coupling);
      cfg.sampler.beta = 1.0 / (frac * tc);
    }
    if (cfg.sampler.beta < 0) fail("sampler.beta", "must be >= 0");
    cfg.sampler.n_snapshots = require<int64_t>(s, "sampler", "n_snapshots");
    if (cfg.sampler.n_snapshots < 1) fail("sampler.n_snapshots", "must be >= 1");
    cfg.sampler.thermalization = optional_or<int64_t>(s, "sampler", "thermalization", 1000);
    if (cfg.sampler.thermalization < 1) fail("sampler.thermalization", "must be >= 1");
    cfg.sampler.decorrelation = optional_or<int64_t>(s, "sampler", "decorrelation", 2);
    if (cfg.sampler.decorrelation < 1) fail("sampler.decorrelation", "must be >= 1");
    cfg.sampler.n_chains = optional_or<int>(s, "sampler", "n_chains", 8);
    if (cfg.sampler.n_chains < 1) fail("sampler.n_chains", "must be >= 1");
    cfg.sampler.wolff_fraction = optional_or<double>(s, "sampler", "mix", 0.5);
    if (cfg.sampler.wolff_fraction < 0 || cfg.sampler.wolff_fraction > 1)
      fail("sampler.mix", "must be in [0, 1]");
    if (cfg.perturbation == Perturbation::Field && cfg.sampler.wolff_fraction > 0)
      fail("sampler.mix", "must be 0 for field models (Wolff is invalid under a field)");
    cfg.sampler.seed = optional_or<uint64_t>(s, "sampler", "seed", 1);
    cfg.sampler.threads = optional_or<int>(s, "sampler", "threads", 0);
  }

  // rg
  if (j.contains("rg")) {
    const json& r = j.at("rg");
    check_keys(r, "rg", {"n_steps"});
    cfg.rg_steps = require<int>(r, "rg", "n_steps");
    if (cfg.rg_steps < 0) fail("rg.n_steps", "must be >= 0");
    try {
      decimation_mask(cfg.lattice, cfg.rg_steps);
    } catch (const std::exception& e) {
      fail("rg.n_steps", e.what());
    }
  }

  // wfn
  if (j.contains("wfn")) {
    const json& w = j.at("wfn");
    check_keys(w, "wfn", {"cutoff_inclusive", "bin_ratio", "block_rows"});
    cfg.wfn.cutoff_inclusive = optional_or<bool>(w, "wfn", "cutoff_inclusive", false);
    cfg.wfn.block_rows = optional_or<int>(w, "wfn", "block_rows", 256);
    if (cfg.wfn.block_rows < 1) fail("wfn.block_rows", "must be >= 1");
    cfg.bin_ratio = optional_or<double>(w, "wfn", "bin_ratio", 1.3);
    if (!(cfg.bin_ratio > 1)) fail("wfn.bin_ratio", "must be > 1");
  }

  // fit
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, "fit", {"window"});
    if (f.contains("window") && !f.at("window").is_null()) {
      const json& w = f.at("window");
      if (w.is_string() && w.get<std::string>() == "auto") {
        // auto is the default
      } else if (w.is_array() && w.size() == 2) {
        const double lo = w.at(0).get<double>(), hi = w.at(1).get<double>();
        if (!(lo > 0 && hi > lo)) fail("fit.window", "need 0 < k_low < k_high");
        cfg.fit_window = {lo, hi};
      } else {
        fail("fit.window", "expected \"auto\" or [k_low, k_high]");
      }
    }
  }

  // io
  if (j.contains("io")) {
    const json& io = j.at("io");
    check_keys(io, "io", {"output_dir", "basename"});
    cfg.output_dir = optional_or<std::string>(io, "io", "output_dir", "out");
    cfg.basename = optional_or<std::string>(io, "io", "basename", "run");
    if (cfg.basename.empty()) fail("io.basename", "must be nonempty");
  }

  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace snaprg
