// Command-line driver: sample | ingest | rg | wfn | analyze | pipeline.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snaprg/config.hpp"
#include "snaprg/pipeline.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Spin-snapshot datasets: Monte Carlo sampling, exact decimation RG, "
               "wave-function-network degree analysis"};
  app.require_subcommand(1);

  // sample
  std::string config_path;
  auto* sample = app.add_subcommand("sample", "draw a snapshot dataset from an Ising model");
  sample->add_option("-c,--config", config_path, "JSON run configuration")->required();

  // ingest
  std::string ingest_in, ingest_out, mapping = "pm1";
  int ingest_dim = 2;
  std::vector<int> ingest_lengths;
  auto* ingest = app.add_subcommand("ingest", "convert text snapshots to a dataset file");
  ingest->add_option("-i,--in", ingest_in, "text file, one configuration per line")->required();
  ingest->add_option("-o,--out", ingest_out, "output dataset file")->required();
  ingest->add_option("-d,--dimension", ingest_dim, "lattice dimension (2 or 3)");
  ingest->add_option("-l,--lengths", ingest_lengths, "side lengths, e.g. -l 16 16")->required();
  ingest->add_option("-m,--mapping", mapping, "token mapping: pm1 (default) or 01")
      ->check(CLI::IsMember({"pm1", "01"}));

  // rg
  std::string rg_in, rg_out_dir = ".";
  int rg_steps = 1, threads = 0;
  auto* rg = app.add_subcommand("rg", "apply decimation steps to a dataset file");
  rg->add_option("-i,--in", rg_in, "input dataset file")->required();
  rg->add_option("-n,--steps", rg_steps, "number of RG steps")->required();
  rg->add_option("-o,--out-dir", rg_out_dir, "output directory");
  rg->add_option("--threads", threads, "worker threads (0 = all)");

  // wfn
  std::string wfn_in, wfn_prefix;
  bool cutoff_inclusive = false;
  int block_rows = 256, wfn_threads = 0;
  auto* wfn = app.add_subcommand("wfn", "build wave-function-network degrees from a dataset");
  wfn->add_option("-i,--in", wfn_in, "input dataset file")->required();
  wfn->add_option("-o,--out-prefix", wfn_prefix, "output prefix (writes .degrees.tsv, .wfn.json)")
      ->required();
  wfn->add_flag("--cutoff-inclusive", cutoff_inclusive, "connect at D <= R instead of D < R");
  wfn->add_option("--block-rows", block_rows, "rows per cache block");
  wfn->add_option("--threads", wfn_threads, "worker threads (0 = all)");

  // analyze
  snaprg::AnalyzeRequest req;
  std::vector<std::string> degree_files, corr_files;
  std::vector<double> window;
  std::string analyze_out = ".";
  auto* analyze = app.add_subcommand("analyze", "histograms, power-law fits, KS matrix, correlations");
  analyze->add_option("--degrees", degree_files, "degree files (.tsv)");
  analyze->add_option("--bin-ratio", req.bin_ratio, "log-bin ratio b > 1");
  analyze->add_option("--fit-window", window, "explicit fit window: k_low k_high")->expected(2);
  analyze->add_option("--corr", corr_files, "dataset files for correlation functions");
  analyze->add_option("--max-d", req.max_d, "largest separation");
  analyze->add_option("--eta", req.eta, "critical exponent for rescaling");
  analyze->add_flag("--rescale", req.rescale, "add lambda^(n eta)-rescaled correlation columns");
  analyze->add_flag("--corr-length", req.corr_length, "report fitted correlation lengths");
  analyze->add_option("--threads", req.threads, "worker threads (0 = all)");
  analyze->add_option("-o,--out-dir", analyze_out, "output directory");

  // pipeline
  std::string pipe_config;
  snaprg::PipelineOptions pipe_opt;
  auto* pipeline = app.add_subcommand("pipeline", "full run: sample, rg, wfn, analyze, manifest");
  pipeline->add_option("-c,--config", pipe_config, "JSON run configuration")->required();
  pipeline->add_flag("--resume", pipe_opt.resume, "skip stages whose outputs are intact");
  pipeline->add_option("--threads", pipe_opt.threads, "override worker threads");

  CLI11_PARSE(app, argc, argv);

  if (sample->parsed()) {
    const snaprg::RunConfig cfg = snaprg::load_config(config_path);
    snaprg::cmd_sample(cfg, &std::cout);
  } else if (ingest->parsed()) {
    const snaprg::LatticeSpec lattice = snaprg::build_lattice(ingest_dim, ingest_lengths);
    const auto enc = mapping == "pm1" ? snaprg::SpinEncoding::PlusMinusOne
                                      : snaprg::SpinEncoding::ZeroOne;
    snaprg::cmd_ingest(ingest_in, lattice, enc, ingest_out, &std::cout);
  } else if (rg->parsed()) {
    snaprg::cmd_rg(rg_in, rg_steps, rg_out_dir, threads, &std::cout);
  } else if (wfn->parsed()) {
    snaprg::WfnOptions opt{cutoff_inclusive, block_rows, wfn_threads};
    snaprg::cmd_wfn(wfn_in, opt, wfn_prefix, &std::cout);
  } else if (analyze->parsed()) {
    for (const auto& f : degree_files) req.degree_files.emplace_back(f);
    for (const auto& f : corr_files) req.corr_datasets.emplace_back(f);
    if (!window.empty()) req.fit_window = {window[0], window[1]};
    req.out_dir = analyze_out;
    snaprg::cmd_analyze(req, &std::cout);
  } else if (pipeline->parsed()) {
    const snaprg::RunConfig cfg = snaprg::load_config(pipe_config);
    snaprg::cmd_pipeline(cfg, pipe_opt, &std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
