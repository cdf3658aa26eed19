#include "snaprg/pipeline.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "snaprg/rg.hpp"
#include "snaprg/sha256.hpp"

namespace snaprg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void log_line(std::ostream* log, const std::string& line) {
  if (log) *log << line << "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Text tables
// ---------------------------------------------------------------------------

void write_degree_file(const fs::path& path, const WfnResult& wfn) {
  std::ofstream out = open_out(path);
  out << "# node\tdegree\tr1\n";
  for (int64_t i = 0; i < wfn.n_nodes; ++i)
    out << i << '\t' << wfn.degrees[static_cast<size_t>(i)] << '\t'
        << wfn.r1[static_cast<size_t>(i)] << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<int64_t> read_degree_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open degree file " + path.string());
  std::vector<int64_t> degrees;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int64_t node, degree;
    if (!(ls >> node >> degree))
      throw std::runtime_error("degree file " + path.string() + ": malformed line " +
                               std::to_string(line_no));
    degrees.push_back(degree);
  }
  if (degrees.empty()) throw std::runtime_error("degree file " + path.string() + " is empty");
  return degrees;
}

void write_histogram_file(const fs::path& path, const DegreeHistogram& hist) {
  std::ofstream out = open_out(path);
  out << "# zero_degree_nodes\t" << hist.zero_count << "\n";
  out << "# total_nonzero\t" << hist.total_nonzero << "\n";
  out << "# bin_low\tbin_high\tcenter\tcount\tdensity\n";
  for (size_t m = 0; m < hist.counts.size(); ++m)
    out << hist.edges[m] << '\t' << hist.edges[m + 1] << '\t' << fmt_double(hist.centers[m])
        << '\t' << hist.counts[m] << '\t' << fmt_double(hist.density[m]) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_correlation_file(const fs::path& path, const CorrelationFunction& corr,
                            const CorrelationFunction* rescaled) {
  std::ofstream out = open_out(path);
  out << "# n_steps\t" << corr.n_steps << "\n";
  out << "# d\tvalue\tstderr";
  if (rescaled) out << "\trescaled\trescaled_stderr";
  out << "\n";
  for (size_t d = 0; d < corr.values.size(); ++d) {
    out << d << '\t' << fmt_double(corr.values[d]) << '\t' << fmt_double(corr.stderrs[d]);
    if (rescaled)
      out << '\t' << fmt_double(rescaled->values[d]) << '\t' << fmt_double(rescaled->stderrs[d]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::filesystem::path cmd_sample(const RunConfig& cfg, std::ostream* log) {
  fs::create_directories(cfg.output_dir);
  const IsingModel model = cfg.make_model();
  SampleReport report;
  const SnapshotDataset ds = sample_snapshots(model, cfg.sampler, &report);
  const fs::path path = cfg.output_dir / (cfg.basename + ".step0.snaprg");
  write_dataset(ds, path);
  log_line(log, "sampled " + std::to_string(ds.n_snapshots()) + " snapshots of " +
                    model.description() + " at beta=" + fmt_double(cfg.sampler.beta));
  log_line(log, "metropolis acceptance rate: " + fmt_double(report.acceptance_rate()) + " (" +
                    std::to_string(report.metropolis_proposals) + " proposals)");
  log_line(log, "wolff updates: " + std::to_string(report.wolff_updates) +
                    ", mean cluster size: " + fmt_double(report.mean_cluster_size()));
  log_line(log, "wrote " + path.string());
  return path;
}

std::filesystem::path cmd_ingest(const fs::path& input, const LatticeSpec& lattice,
                                 SpinEncoding encoding, const fs::path& output,
                                 std::ostream* log) {
  const SnapshotDataset ds = ingest_text(input, lattice, encoding);
  write_dataset(ds, output);
  log_line(log, "ingested " + std::to_string(ds.n_snapshots()) + " configurations from " +
                    input.string() + " -> " + output.string());
  return output;
}

namespace {

fs::path step_path(const fs::path& dir, const std::string& base, int step) {
  return dir / (base + ".step" + std::to_string(step) + ".snaprg");
}

std::string strip_step_suffix(const fs::path& input) {
  std::string stem = input.stem().string();  // e.g. "run.step0"
  const auto pos = stem.rfind(".step");
  if (pos != std::string::npos) stem = stem.substr(0, pos);
  return stem;
}

}  // namespace

std::vector<fs::path> cmd_rg(const fs::path& input, int n_steps, const fs::path& out_dir,
                             int threads, std::ostream* log) {
  fs::create_directories(out_dir);
  SnapshotDataset ds = read_dataset(input);
  const std::string base = strip_step_suffix(input);
  std::vector<fs::path> outputs;
  if (n_steps == 0) {
    const fs::path path = step_path(out_dir, base, ds.n_steps_applied());
    write_dataset(ds, path);
    outputs.push_back(path);
    log_line(log, "n_steps=0: copied input to " + path.string());
    return outputs;
  }
  for (int k = 1; k <= n_steps; ++k) {
    const SiteMask mask = decimation_mask(ds.lattice(), ds.n_steps_applied() + 1);
    ds = apply_rg(ds, mask, threads);
    const fs::path path = step_path(out_dir, base, ds.n_steps_applied());
    write_dataset(ds, path);
    outputs.push_back(path);
    log_line(log, "step " + std::to_string(ds.n_steps_applied()) + ": " +
                      std::to_string(ds.n_bits()) + " bits/snapshot -> " + path.string());
  }
  return outputs;
}

WfnFileOutputs cmd_wfn(const fs::path& input, const WfnOptions& options,
                       const fs::path& out_prefix, std::ostream* log) {
  const SnapshotDataset ds = read_dataset(input);
  const DedupDataset uniq = deduplicate(ds);
  const WfnResult wfn = build_wfn(uniq, options);

  WfnFileOutputs out;
  out.degrees_path = out_prefix.string() + ".degrees.tsv";
  out.summary_path = out_prefix.string() + ".wfn.json";
  out.n_unique = wfn.n_nodes;
  out.cutoff = wfn.cutoff;
  write_degree_file(out.degrees_path, wfn);

  int64_t zero_nodes = 0;
  for (int64_t k : wfn.degrees) zero_nodes += k == 0;
  const json summary{{"n_unique", wfn.n_nodes},
                     {"n_total", uniq.n_total},
                     {"bits_per_snapshot", ds.n_bits()},
                     {"n_steps_applied", ds.n_steps_applied()},
                     {"cutoff_r", wfn.cutoff},
                     {"r1_sum", wfn.r1_sum},
                     {"cutoff_inclusive", wfn.cutoff_inclusive},
                     {"zero_degree_nodes", zero_nodes}};
  std::ofstream js = open_out(out.summary_path);
  js << summary.dump(2) << "\n";
  log_line(log, "wfn: " + std::to_string(wfn.n_nodes) + " unique nodes, R=" +
                    fmt_double(wfn.cutoff) + " -> " + out.degrees_path.string());
  return out;
}

std::vector<fs::path> cmd_analyze(const AnalyzeRequest& request, std::ostream* log) {
  fs::create_directories(request.out_dir);
  std::vector<fs::path> written;

  std::vector<std::vector<int64_t>> samples;
  for (const fs::path& f : request.degree_files) samples.push_back(read_degree_file(f));

  // Histogram + fit per degree file.
  if (!request.degree_files.empty()) {
    const fs::path fits_path = request.out_dir / "fits.tsv";
    std::ofstream fits = open_out(fits_path);
    fits << "# file\tgamma\tstderr\tk_low\tk_high\tr_squared\tn_bins\tstatus\n";
    for (size_t i = 0; i < samples.size(); ++i) {
      const std::string stem = request.degree_files[i].stem().string();
      const fs::path hist_path = request.out_dir / (stem + ".hist.tsv");
      try {
        const DegreeHistogram hist = log_binned_histogram(samples[i], request.bin_ratio);
        write_histogram_file(hist_path, hist);
        written.push_back(hist_path);
        const PowerLawFit fit = fit_power_law(hist, request.fit_window);
        fits << request.degree_files[i].filename().string() << '\t' << fmt_double(fit.gamma)
             << '\t' << fmt_double(fit.gamma_stderr) << '\t' << fmt_double(fit.k_low) << '\t'
             << fmt_double(fit.k_high) << '\t' << fmt_double(fit.r_squared) << '\t' << fit.n_bins
             << "\tok\n";
        log_line(log, stem + ": gamma=" + fmt_double(fit.gamma) + " +- " +
                          fmt_double(fit.gamma_stderr) + " over k in [" + fmt_double(fit.k_low) +
                          ", " + fmt_double(fit.k_high) + "], R^2=" + fmt_double(fit.r_squared));
      } catch (const std::exception& e) {
        fits << request.degree_files[i].filename().string()
             << "\tnan\tnan\tnan\tnan\tnan\t0\t" << e.what() << "\n";
        log_line(log, stem + ": " + e.what());
      }
    }
    written.push_back(fits_path);

    if (samples.size() >= 2) {
      const fs::path ks_path = request.out_dir / "ks.tsv";
      std::ofstream ks = open_out(ks_path);
      ks << "# two-sample KS statistic matrix\n#";
      for (const fs::path& f : request.degree_files) ks << '\t' << f.filename().string();
      ks << '\n';
      for (size_t i = 0; i < samples.size(); ++i) {
        ks << request.degree_files[i].filename().string();
        for (size_t j = 0; j < samples.size(); ++j)
          ks << '\t' << fmt_double(i == j ? 0.0 : ks_distance(samples[i], samples[j]).statistic);
        ks << '\n';
      }
      written.push_back(ks_path);
    }
  }

  // Correlation tables per dataset file.
  for (const fs::path& f : request.corr_datasets) {
    const SnapshotDataset ds = read_dataset(f);
    int max_d = request.max_d;
    if (request.clamp_max_d)
      max_d = std::min(max_d, max_correlation_separation(ds.lattice(), ds.n_steps_applied()));
    const CorrelationFunction corr = correlation_function(ds, max_d, request.threads);
    std::optional<CorrelationFunction> rescaled;
    if (request.rescale && corr.dimension == 2)
      rescaled = rescale_correlation(corr, request.eta);
    const fs::path corr_path = request.out_dir / (f.stem().string() + ".corr.tsv");
    write_correlation_file(corr_path, corr, rescaled ? &*rescaled : nullptr);
    written.push_back(corr_path);
    if (request.corr_length) {
      try {
        log_line(log, f.stem().string() +
                          ": correlation length xi=" + fmt_double(correlation_length(corr)));
      } catch (const std::exception& e) {
        log_line(log, f.stem().string() + ": " + e.what());
      }
    }
  }
  return written;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

json config_echo(const RunConfig& cfg) {
  json j{{"dimension", cfg.lattice.dimension()},
         {"lengths", cfg.lattice.lengths()},
         {"j", cfg.coupling},
         {"perturbation", static_cast<int>(cfg.perturbation)},
         {"beta", cfg.sampler.beta},
         {"n_snapshots", cfg.sampler.n_snapshots},
         {"thermalization", cfg.sampler.thermalization},
         {"decorrelation", cfg.sampler.decorrelation},
         {"n_chains", cfg.sampler.n_chains},
         {"mix", cfg.sampler.wolff_fraction},
         {"seed", cfg.sampler.seed},
         {"rg_steps", cfg.rg_steps},
         {"cutoff_inclusive", cfg.wfn.cutoff_inclusive},
         {"bin_ratio", cfg.bin_ratio},
         {"basename", cfg.basename}};
  if (cfg.perturbation_strength) j["strength"] = *cfg.perturbation_strength;
  if (cfg.fit_window) j["fit_window"] = {cfg.fit_window->first, cfg.fit_window->second};
  return j;
}

// Records stage outputs as filename -> sha256; a stage can be skipped on
// resume when its recorded outputs all exist unchanged.
struct StageRunner {
  const fs::path& dir;
  json& manifest;
  json prior;
  bool resume;
  std::ostream* log;

  template <typename Fn>
  void run(const std::string& name, Fn&& fn) {
    if (resume && prior.contains("stages") && prior["stages"].contains(name) &&
        prior["config"] == manifest["config"]) {
      const json& outputs = prior["stages"][name]["outputs"];
      bool intact = !outputs.empty();
      for (const auto& [file, sum] : outputs.items()) {
        const fs::path p = dir / file;
        if (!fs::exists(p) || sha256_file(p) != sum.template get<std::string>()) {
          intact = false;
          break;
        }
      }
      if (intact) {
        manifest["stages"][name] = prior["stages"][name];
        log_line(log, "[" + name + "] up to date, skipped");
        return;
      }
    }
    std::vector<fs::path> outputs;
    try {
      outputs = fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("[stage " + name + "] " + e.what());
    }
    json sums = json::object();
    for (const fs::path& p : outputs) sums[p.filename().string()] = sha256_file(p);
    manifest["stages"][name] = {{"outputs", sums}};
  }
};

}  // namespace

json cmd_pipeline(const RunConfig& cfg, const PipelineOptions& options, std::ostream* log) {
  fs::create_directories(cfg.output_dir);
  const fs::path manifest_path = cfg.output_dir / (cfg.basename + ".manifest.json");

  json manifest{{"format", "snaprg-manifest-v1"},
                {"config", config_echo(cfg)},
                {"stages", json::object()}};
  json prior;
  if (options.resume && fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      prior = json::parse(in);
    } catch (const json::exception&) {
      prior = json();  // unreadable manifest: rebuild everything
    }
  }
  StageRunner runner{cfg.output_dir, manifest, prior, options.resume, log};

  RunConfig run_cfg = cfg;
  if (options.threads > 0) {
    run_cfg.sampler.threads = options.threads;
    run_cfg.wfn.threads = options.threads;
  }
  const int threads = options.threads;

  runner.run("sample", [&] {
    return std::vector<fs::path>{cmd_sample(run_cfg, log)};
  });

  runner.run("rg", [&] {
    if (run_cfg.rg_steps == 0) return std::vector<fs::path>{};
    return cmd_rg(step_path(cfg.output_dir, cfg.basename, 0), run_cfg.rg_steps, cfg.output_dir,
                  threads, log);
  });

  runner.run("wfn", [&] {
    std::vector<fs::path> outputs;
    for (int k = 0; k <= run_cfg.rg_steps; ++k) {
      const fs::path prefix = cfg.output_dir / (cfg.basename + ".step" + std::to_string(k));
      const WfnFileOutputs w =
          cmd_wfn(step_path(cfg.output_dir, cfg.basename, k), run_cfg.wfn, prefix, log);
      outputs.push_back(w.degrees_path);
      outputs.push_back(w.summary_path);
    }
    return outputs;
  });

  runner.run("analyze", [&] {
    AnalyzeRequest req;
    for (int k = 0; k <= run_cfg.rg_steps; ++k)
      req.degree_files.push_back(cfg.output_dir /
                                 (cfg.basename + ".step" + std::to_string(k) + ".degrees.tsv"));
    req.bin_ratio = run_cfg.bin_ratio;
    req.fit_window = run_cfg.fit_window;
    for (int k = 0; k <= run_cfg.rg_steps; ++k)
      req.corr_datasets.push_back(step_path(cfg.output_dir, cfg.basename, k));
    req.clamp_max_d = true;
    req.rescale = cfg.lattice.dimension() == 2;
    req.eta = 0.25;
    req.corr_length = true;
    req.threads = threads;
    req.out_dir = cfg.output_dir;
    std::vector<fs::path> outputs = cmd_analyze(req, log);

    // Plot-ready gnuplot script over the written tables.
    const fs::path gp_path = cfg.output_dir / (cfg.basename + ".plots.gp");
    std::ofstream gp = open_out(gp_path);
    gp << "# gnuplot script for the " << cfg.basename << " run\n";
    gp << "set logscale xy\nset xlabel 'k'\nset ylabel 'P_k'\n";
    gp << "plot";
    for (int k = 0; k <= run_cfg.rg_steps; ++k)
      gp << (k ? ", " : " ") << "'" << cfg.basename << ".step" << k
         << ".degrees.hist.tsv' using 3:5 with points title 'step " << k << "'";
    gp << "\npause -1\nunset logscale\nset xlabel 'd'\nset ylabel 'rescaled C(d)'\n";
    gp << "plot";
    for (int k = 0; k <= run_cfg.rg_steps; ++k)
      gp << (k ? ", " : " ") << "'" << cfg.basename << ".step" << k
         << ".corr.tsv' using 1:4 with linespoints title 'step " << k << "'";
    gp << "\npause -1\n";
    gp.close();
    outputs.push_back(gp_path);
    return outputs;
  });

  std::ofstream out = open_out(manifest_path);
  out << manifest.dump(2) << "\n";
  log_line(log, "wrote " + manifest_path.string());
  return manifest;
}

}  // namespace snaprg
