#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "snaprg/dataset.hpp"

namespace snaprg {

/// Spin-spin correlation C(d) along the primitive directions of the
/// dataset's current frame, averaged over sites, directions and snapshots.
/// C(0) = 1 exactly. Standard errors come from the per-snapshot spread.
struct CorrelationFunction {
  int dimension = 0;
  int n_steps = 0;                 // RG steps of the source dataset
  double rescale_factor = 1.0;     // product of factors applied by rescale_correlation
  std::vector<double> values;      // index = separation d in current-frame units
  std::vector<double> stderrs;
};

CorrelationFunction correlation_function(const SnapshotDataset& dataset, int max_d,
                                         int threads = 0);

/// Largest admissible separation (half the torus period along the shortest
/// frame direction) for datasets at the given step.
int max_correlation_separation(const LatticeSpec& lattice, int n_steps);

/// Multiplies values by lambda^(n eta) with lambda = sqrt(2) (2D only);
/// separations stay in current-frame units, so at criticality curves from
/// different steps collapse onto the step-0 curve.
CorrelationFunction rescale_correlation(const CorrelationFunction& corr, double eta);

/// Least-squares exponential decay length from log C(d) over separations
/// with C(d) > 3 stderr; throws if the data does not decay.
double correlation_length(const CorrelationFunction& corr);

/// Log-binned degree histogram. Integer bin edges 1 = e_0 < e_1 < ... are the
/// powers of `ratio` rounded up to distinct integers; bin m covers
/// [e_m, e_{m+1}). Zero-degree nodes are counted separately and excluded.
struct DegreeHistogram {
  double ratio = 0.0;
  std::vector<int64_t> edges;    // n_bins + 1 entries
  std::vector<int64_t> counts;   // per bin
  std::vector<double> centers;   // geometric mean of the bin's edges
  std::vector<double> density;   // counts / (total_nonzero * width)
  int64_t zero_count = 0;
  int64_t total_nonzero = 0;
};

DegreeHistogram log_binned_histogram(const std::vector<int64_t>& degrees, double ratio);

/// Power-law fit P_k ~ k^(-gamma), gamma > 0 for decaying distributions:
/// weighted least squares of log density against log bin center.
struct PowerLawFit {
  double gamma = 0.0;
  double gamma_stderr = 0.0;
  double k_low = 0.0, k_high = 0.0;  // centers of the first/last fitted bin
  double r_squared = 0.0;
  int n_bins = 0;
};

/// With an explicit window, fits the nonempty bins whose centers fall inside.
/// Without one, auto-selects the widest contiguous run of nonempty bins
/// spanning >= 1 decade with >= 5 bins and weighted R^2 >= 0.98; throws when
/// no admissible window exists.
PowerLawFit fit_power_law(const DegreeHistogram& hist,
                          std::optional<std::pair<double, double>> window = std::nullopt);

/// Two-sample Kolmogorov-Smirnov statistic on raw degree samples.
struct DistributionDistance {
  double statistic = 0.0;
  int64_t n_a = 0, n_b = 0;
};

DistributionDistance ks_distance(const std::vector<int64_t>& a, const std::vector<int64_t>& b);

}  // namespace snaprg
