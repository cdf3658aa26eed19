#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snaprg/config.hpp"
#include "snaprg/stats.hpp"
#include "snaprg/wfn.hpp"

namespace snaprg {

// Delimited-text exporters/readers for the analysis outputs. Columns are
// documented in the README; lines starting with '#' are comments.
void write_degree_file(const std::filesystem::path& path, const WfnResult& wfn);
std::vector<int64_t> read_degree_file(const std::filesystem::path& path);
void write_histogram_file(const std::filesystem::path& path, const DegreeHistogram& hist);
void write_correlation_file(const std::filesystem::path& path, const CorrelationFunction& corr,
                            const CorrelationFunction* rescaled = nullptr);

/// Samples per config and writes <output_dir>/<basename>.step0.snaprg.
std::filesystem::path cmd_sample(const RunConfig& cfg, std::ostream* log = nullptr);

/// Converts a text snapshot file to the binary dataset format.
std::filesystem::path cmd_ingest(const std::filesystem::path& input, const LatticeSpec& lattice,
                                 SpinEncoding encoding, const std::filesystem::path& output,
                                 std::ostream* log = nullptr);

/// Applies n_steps decimation steps, one output file per step.
std::vector<std::filesystem::path> cmd_rg(const std::filesystem::path& input, int n_steps,
                                          const std::filesystem::path& out_dir, int threads = 0,
                                          std::ostream* log = nullptr);

struct WfnFileOutputs {
  std::filesystem::path degrees_path;
  std::filesystem::path summary_path;
  int64_t n_unique = 0;
  double cutoff = 0.0;
};

/// Deduplicates a dataset file, builds the WFN, writes <prefix>.degrees.tsv
/// and <prefix>.wfn.json.
WfnFileOutputs cmd_wfn(const std::filesystem::path& input, const WfnOptions& options,
                       const std::filesystem::path& out_prefix, std::ostream* log = nullptr);

struct AnalyzeRequest {
  std::vector<std::filesystem::path> degree_files;
  double bin_ratio = 1.3;
  std::optional<std::pair<double, double>> fit_window;  // nullopt = auto
  std::vector<std::filesystem::path> corr_datasets;
  int max_d = 8;
  bool clamp_max_d = false;  // shrink max_d to each dataset's admissible range
  double eta = 0.25;
  bool rescale = false;       // add lambda^(n eta)-rescaled columns (2D)
  bool corr_length = false;   // report fitted correlation lengths
  int threads = 0;
  std::filesystem::path out_dir = ".";
};

/// Histograms, power-law fits and a KS matrix for degree files; correlation
/// tables for dataset files. Returns the written paths.
std::vector<std::filesystem::path> cmd_analyze(const AnalyzeRequest& request,
                                               std::ostream* log = nullptr);

struct PipelineOptions {
  bool resume = false;
  int threads = 0;  // > 0 overrides config thread counts
};

/// sample -> rg flow -> per-step dedup + wfn -> histograms/fits/KS /
/// correlations -> manifest. Stages are fail-fast (errors are tagged with the
/// stage name) and resumable via recorded checksums. Returns the manifest.
nlohmann::json cmd_pipeline(const RunConfig& cfg, const PipelineOptions& options = {},
                            std::ostream* log = nullptr);

}  // namespace snaprg
