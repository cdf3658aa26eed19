#include "snaprg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "snaprg/parallel.hpp"

namespace snaprg {

// ---------------------------------------------------------------------------
// Correlations
// ---------------------------------------------------------------------------

namespace {

// Smallest t > 0 with t * v == 0 on the torus, i.e. the site period along a
// frame direction.
int64_t direction_period(const LatticeSpec& lattice, const Coord& v) {
  Coord c{0, 0, 0};
  for (int64_t t = 1; t <= lattice.n_sites(); ++t) {
    for (int a = 0; a < lattice.dimension(); ++a)
      c[static_cast<size_t>(a)] += v[static_cast<size_t>(a)];
    c = lattice.wrap(c);
    bool zero = true;
    for (int a = 0; a < lattice.dimension(); ++a) zero &= c[static_cast<size_t>(a)] == 0;
    if (zero) return t;
  }
  return lattice.n_sites();
}

}  // namespace

int max_correlation_separation(const LatticeSpec& lattice, int n_steps) {
  const SiteMask mask = decimation_mask(lattice, n_steps);
  int64_t extent = std::numeric_limits<int64_t>::max();
  for (int a = 0; a < lattice.dimension(); ++a)
    extent = std::min(extent, direction_period(lattice, mask.frame()[static_cast<size_t>(a)]));
  return static_cast<int>(extent / 2);
}

CorrelationFunction correlation_function(const SnapshotDataset& dataset, int max_d, int threads) {
  if (max_d < 0) throw std::invalid_argument("correlation_function: max_d must be >= 0");
  if (dataset.n_snapshots() < 1)
    throw std::invalid_argument("correlation_function: empty dataset");
  const LatticeSpec& lattice = dataset.lattice();
  const int dim = lattice.dimension();
  const SiteMask mask = decimation_mask(lattice, dataset.n_steps_applied());
  const auto& retained = mask.retained();
  const int64_t n_ret = static_cast<int64_t>(retained.size());

  int64_t extent = std::numeric_limits<int64_t>::max();
  for (int a = 0; a < dim; ++a)
    extent = std::min(extent, direction_period(lattice, mask.frame()[static_cast<size_t>(a)]));
  if (max_d > extent / 2)
    throw std::invalid_argument("correlation_function: max_d=" + std::to_string(max_d) +
                                " exceeds half the current linear extent (" +
                                std::to_string(extent / 2) + ")");

  // Bit position of each retained site within the packed snapshots.
  std::vector<int32_t> pos(static_cast<size_t>(lattice.n_sites()), -1);
  for (int64_t k = 0; k < n_ret; ++k) pos[static_cast<size_t>(retained[static_cast<size_t>(k)])] = static_cast<int32_t>(k);

  // Partner bit position per (direction, separation, site).
  std::vector<std::vector<int32_t>> perm(static_cast<size_t>(dim) * static_cast<size_t>(max_d));
  for (int a = 0; a < dim; ++a) {
    for (int d = 1; d <= max_d; ++d) {
      auto& p = perm[static_cast<size_t>(a) * static_cast<size_t>(max_d) + static_cast<size_t>(d - 1)];
      p.resize(static_cast<size_t>(n_ret));
      for (int64_t k = 0; k < n_ret; ++k) {
        Coord c = lattice.coords_of(retained[static_cast<size_t>(k)]);
        for (int ax = 0; ax < dim; ++ax)
          c[static_cast<size_t>(ax)] += d * mask.frame()[static_cast<size_t>(a)][static_cast<size_t>(ax)];
        const int32_t q = pos[static_cast<size_t>(lattice.index_of(lattice.wrap(c)))];
        if (q < 0) throw std::logic_error("correlation_function: frame translation left the sublattice");
        p[static_cast<size_t>(k)] = q;
      }
    }
  }

  // Integer mismatch counts per snapshot: exact, so the reduction is
  // bit-stable for any thread count.
  const int64_t n_snap = dataset.n_snapshots();
  std::vector<int32_t> mismatch(static_cast<size_t>(n_snap) * static_cast<size_t>(std::max(1, max_d)), 0);
  parallel_for(n_snap, threads, [&](int64_t t) {
    thread_local std::vector<uint8_t> bits;
    bits.resize(static_cast<size_t>(n_ret));
    const auto snap = dataset.snapshot(t);
    for (int64_t k = 0; k < n_ret; ++k)
      bits[static_cast<size_t>(k)] = static_cast<uint8_t>((snap[static_cast<size_t>(k >> 6)] >> (k & 63)) & 1u);
    for (int d = 1; d <= max_d; ++d) {
      int32_t mism = 0;
      for (int a = 0; a < dim; ++a) {
        const auto& p = perm[static_cast<size_t>(a) * static_cast<size_t>(max_d) + static_cast<size_t>(d - 1)];
        for (int64_t k = 0; k < n_ret; ++k) mism += bits[static_cast<size_t>(k)] ^ bits[p[static_cast<size_t>(k)]];
      }
      mismatch[static_cast<size_t>(t) * static_cast<size_t>(max_d) + static_cast<size_t>(d - 1)] = mism;
    }
  });

  CorrelationFunction corr;
  corr.dimension = dim;
  corr.n_steps = dataset.n_steps_applied();
  corr.values.assign(static_cast<size_t>(max_d) + 1, 1.0);
  corr.stderrs.assign(static_cast<size_t>(max_d) + 1, 0.0);
  const double denom = static_cast<double>(n_ret) * dim;
  for (int d = 1; d <= max_d; ++d) {
    double sum = 0.0, sum2 = 0.0;
    for (int64_t t = 0; t < n_snap; ++t) {
      const double c =
          1.0 - 2.0 * mismatch[static_cast<size_t>(t) * static_cast<size_t>(max_d) + static_cast<size_t>(d - 1)] / denom;
      sum += c;
      sum2 += c * c;
    }
    const double mean = sum / static_cast<double>(n_snap);
    corr.values[static_cast<size_t>(d)] = mean;
    if (n_snap > 1) {
      const double var = std::max(0.0, (sum2 - sum * mean) / static_cast<double>(n_snap - 1));
      corr.stderrs[static_cast<size_t>(d)] = std::sqrt(var / static_cast<double>(n_snap));
    }
  }
  return corr;
}

CorrelationFunction rescale_correlation(const CorrelationFunction& corr, double eta) {
  if (corr.dimension != 2)
    throw std::invalid_argument("rescale_correlation: defined for 2D data (lambda = sqrt(2))");
  const double factor = std::pow(2.0, 0.5 * corr.n_steps * eta);  // lambda^(n eta)
  CorrelationFunction out = corr;
  for (double& v : out.values) v *= factor;
  for (double& s : out.stderrs) s *= factor;
  out.rescale_factor = corr.rescale_factor * factor;
  return out;
}

double correlation_length(const CorrelationFunction& corr) {
  std::vector<double> xs, ys;
  for (size_t d = 1; d < corr.values.size(); ++d) {
    const double v = corr.values[d];
    if (v > 0.0 && v > 3.0 * corr.stderrs[d]) {
      xs.push_back(static_cast<double>(d));
      ys.push_back(std::log(v));
    }
  }
  if (xs.size() < 3)
    throw std::runtime_error(
        "correlation_length: not exponential (fewer than 3 separations above noise)");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0))
    throw std::runtime_error("correlation_length: not exponential (correlation does not decay)");
  return -1.0 / slope;
}

// ---------------------------------------------------------------------------
// Degree histogram and power-law fit
// ---------------------------------------------------------------------------

DegreeHistogram log_binned_histogram(const std::vector<int64_t>& degrees, double ratio) {
  if (degrees.empty()) throw std::invalid_argument("log_binned_histogram: empty input");
  if (!(ratio > 1.0)) throw std::invalid_argument("log_binned_histogram: ratio must be > 1");

  DegreeHistogram h;
  h.ratio = ratio;
  int64_t max_k = 0;
  for (int64_t k : degrees) {
    if (k < 0) throw std::invalid_argument("log_binned_histogram: negative degree");
    if (k == 0)
      ++h.zero_count;
    else {
      ++h.total_nonzero;
      max_k = std::max(max_k, k);
    }
  }
  if (h.total_nonzero == 0)
    throw std::invalid_argument("log_binned_histogram: all degrees are zero");

  h.edges.push_back(1);
  double x = 1.0;
  while (h.edges.back() <= max_k) {
    x *= ratio;
    const auto e = static_cast<int64_t>(std::ceil(x));
    if (e > h.edges.back()) h.edges.push_back(e);
  }
  const size_t n_bins = h.edges.size() - 1;
  h.counts.assign(n_bins, 0);
  for (int64_t k : degrees) {
    if (k == 0) continue;
    const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), k);
    h.counts[static_cast<size_t>(it - h.edges.begin() - 1)]++;
  }
  h.centers.resize(n_bins);
  h.density.resize(n_bins);
  for (size_t m = 0; m < n_bins; ++m) {
    const double width = static_cast<double>(h.edges[m + 1] - h.edges[m]);
    h.centers[m] = std::sqrt(static_cast<double>(h.edges[m]) * static_cast<double>(h.edges[m + 1]));
    h.density[m] = static_cast<double>(h.counts[m]) / (static_cast<double>(h.total_nonzero) * width);
  }
  return h;
}

namespace {

struct FitInput {
  std::vector<double> x, y, w;  // log center, log density, weight (bin count)
  std::vector<double> centers;
};

struct WlsResult {
  double slope = 0.0, stderr_ = 0.0, r2 = 0.0;
};

WlsResult weighted_fit(const FitInput& in, size_t lo, size_t hi) {  // inclusive
  double sw = 0, sx = 0, sy = 0;
  for (size_t i = lo; i <= hi; ++i) {
    sw += in.w[i];
    sx += in.w[i] * in.x[i];
    sy += in.w[i] * in.y[i];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = lo; i <= hi; ++i) {
    const double dx = in.x[i] - xbar, dy = in.y[i] - ybar;
    sxx += in.w[i] * dx * dx;
    sxy += in.w[i] * dx * dy;
    syy += in.w[i] * dy * dy;
  }
  WlsResult r;
  r.slope = sxy / sxx;
  double ss_res = 0;
  for (size_t i = lo; i <= hi; ++i) {
    const double resid = (in.y[i] - ybar) - r.slope * (in.x[i] - xbar);
    ss_res += in.w[i] * resid * resid;
  }
  const double dof = static_cast<double>(hi - lo + 1) - 2.0;
  r.stderr_ = dof > 0 ? std::sqrt(ss_res / dof / sxx) : 0.0;
  r.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return r;
}

}  // namespace

PowerLawFit fit_power_law(const DegreeHistogram& hist,
                          std::optional<std::pair<double, double>> window) {
  FitInput in;
  for (size_t m = 0; m < hist.counts.size(); ++m) {
    if (hist.counts[m] == 0) continue;
    in.centers.push_back(hist.centers[m]);
    in.x.push_back(std::log(hist.centers[m]));
    in.y.push_back(std::log(hist.density[m]));
    in.w.push_back(static_cast<double>(hist.counts[m]));
  }
  const size_t m = in.x.size();

  size_t lo = 0, hi = m == 0 ? 0 : m - 1;
  if (window) {
    if (!(window->first < window->second))
      throw std::invalid_argument("fit_power_law: window must satisfy k_low < k_high");
    while (lo < m && in.centers[lo] < window->first) ++lo;
    hi = m;
    while (hi > lo && in.centers[hi - 1] > window->second) --hi;
    if (hi - lo < 5)
      throw std::runtime_error("fit_power_law: window contains fewer than 5 nonempty bins");
    --hi;  // inclusive
  } else {
    // Widest admissible window: >= 5 nonempty bins, >= 1 decade, R^2 >= 0.98.
    bool found = false;
    double best_ratio = 0.0;
    size_t best_lo = 0, best_hi = 0;
    for (size_t i = 0; i + 4 < m; ++i) {
      for (size_t j = i + 4; j < m; ++j) {
        const double ratio = in.centers[j] / in.centers[i];
        if (ratio < 10.0) continue;
        if (weighted_fit(in, i, j).r2 < 0.98) continue;
        const size_t span = j - i;
        if (!found || ratio > best_ratio ||
            (ratio == best_ratio && span > best_hi - best_lo)) {
          found = true;
          best_ratio = ratio;
          best_lo = i;
          best_hi = j;
        }
      }
    }
    if (!found)
      throw std::runtime_error(
          "fit_power_law: no admissible window (>= 5 nonempty bins spanning >= 1 decade "
          "with R^2 >= 0.98)");
    lo = best_lo;
    hi = best_hi;
  }

  const WlsResult r = weighted_fit(in, lo, hi);
  PowerLawFit fit;
  fit.gamma = -r.slope;
  fit.gamma_stderr = r.stderr_;
  fit.k_low = in.centers[lo];
  fit.k_high = in.centers[hi];
  fit.r_squared = r.r2;
  fit.n_bins = static_cast<int>(hi - lo + 1);
  return fit;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

DistributionDistance ks_distance(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<int64_t> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const int64_t va = sa[i], vb = sb[j];
    const int64_t v = std::min(va, vb);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  return {d, static_cast<int64_t>(sa.size()), static_cast<int64_t>(sb.size())};
}

}  // namespace snaprg
