#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "snaprg/dataset.hpp"
#include "snaprg/lattice.hpp"

namespace snaprg {

enum class Perturbation {
  None,
  NextNearest,  // V1: -J' sum over diagonal pairs, J' = J/10 by default
  Field,        // V2: +h sum_i s_i, h = J/100 by default
};

/// Classical Ising Hamiltonian H(s) = -J sum_<ij> s_i s_j + V on a periodic
/// hypercubic lattice, with the optional perturbations above.
class IsingModel {
 public:
  IsingModel(LatticeSpec lattice, double coupling = 1.0,
             Perturbation perturbation = Perturbation::None,
             std::optional<double> strength = std::nullopt);

  const LatticeSpec& lattice() const { return lattice_; }
  double coupling() const { return coupling_; }
  Perturbation perturbation() const { return perturbation_; }
  double perturbation_strength() const { return strength_; }  // J' or h; 0 for None
  bool z2_symmetric() const { return perturbation_ != Perturbation::Field; }
  bool has_nnn() const { return perturbation_ == Perturbation::NextNearest; }
  double field() const { return perturbation_ == Perturbation::Field ? strength_ : 0.0; }

  const NeighborTable& nn() const { return nn_; }
  const NeighborTable* nnn() const { return has_nnn() ? &nnn_ : nullptr; }
  std::span<const int32_t> nn_neighbors(int64_t site) const { return nn_.neighbors(site); }
  std::span<const int32_t> nnn_neighbors(int64_t site) const { return nnn_.neighbors(site); }

  std::string description() const;

 private:
  LatticeSpec lattice_;
  double coupling_;
  Perturbation perturbation_;
  double strength_;
  NeighborTable nn_;
  NeighborTable nnn_;  // empty unless NextNearest
};

/// Bit-packed spin configuration with exact integer caches of the bond sums
/// and the total spin, so the cached energy is exact at all times.
class SpinState {
 public:
  static SpinState all_up(const IsingModel& model);
  static SpinState all_down(const IsingModel& model);
  static SpinState random(const IsingModel& model, std::mt19937_64& rng);
  static SpinState from_spins(const IsingModel& model, std::span<const int> spins);  // +-1

  int64_t n_sites() const { return n_sites_; }
  int bit(int64_t site) const {
    return static_cast<int>((bits_[static_cast<size_t>(site >> 6)] >> (site & 63)) & 1u);
  }
  int spin(int64_t site) const { return 2 * bit(site) - 1; }
  std::span<const uint64_t> words() const { return bits_; }

  long long nn_bond_sum() const { return nn_bond_sum_; }
  long long nnn_bond_sum() const { return nnn_bond_sum_; }
  long long spin_sum() const { return spin_sum_; }
  double magnetization() const { return static_cast<double>(spin_sum_) / static_cast<double>(n_sites_); }

  /// Energy from the cached integer sums; exact by construction.
  double cached_energy(const IsingModel& model) const;

  /// Sum of spins of the listed neighbors.
  int neighbor_sum(std::span<const int32_t> neighbors) const {
    int s = 0;
    for (int32_t j : neighbors) s += spin(j);
    return s;
  }

  /// Flips one spin and updates all caches (model must match construction).
  void flip(const IsingModel& model, int64_t site);

 private:
  SpinState() = default;
  void recompute_caches(const IsingModel& model);

  int64_t n_sites_ = 0;
  std::vector<uint64_t> bits_;
  long long nn_bond_sum_ = 0;   // sum over NN bonds of s_i s_j (each bond once)
  long long nnn_bond_sum_ = 0;  // idem for diagonal bonds; 0 when absent
  long long spin_sum_ = 0;
  bool has_nnn_ = false;
};

/// Exact energy recomputed from scratch, each bond counted once.
double energy(const IsingModel& model, const SpinState& state);

/// N random-site single-spin proposals with acceptance min(1, exp(-beta dE)).
void metropolis_sweep(const IsingModel& model, SpinState& state, double beta,
                      std::mt19937_64& rng);

/// One Wolff cluster update; returns the cluster size. Bond classes adhere
/// with p_c = 1 - exp(-2 beta J_c). Rejected for field models.
size_t wolff_update(const IsingModel& model, SpinState& state, double beta,
                    std::mt19937_64& rng);

struct SamplerConfig {
  double beta = 0.0;
  int64_t n_snapshots = 0;
  int64_t thermalization = 1000;  // sweep units before recording
  int64_t decorrelation = 2;      // sweep units between records
  int n_chains = 8;
  double wolff_fraction = 0.5;  // fraction of sweep units that are Wolff updates
  uint64_t seed = 0;
  int threads = 0;  // <= 0: all hardware threads
};

struct SampleReport {
  uint64_t metropolis_proposals = 0;
  uint64_t metropolis_accepts = 0;
  uint64_t wolff_updates = 0;
  uint64_t wolff_flipped_sites = 0;
  double acceptance_rate() const {
    return metropolis_proposals ? static_cast<double>(metropolis_accepts) / static_cast<double>(metropolis_proposals) : 0.0;
  }
  double mean_cluster_size() const {
    return wolff_updates ? static_cast<double>(wolff_flipped_sites) / static_cast<double>(wolff_updates) : 0.0;
  }
};

/// Draws a snapshot dataset from the canonical distribution at config.beta.
/// Chains run independently (streams seeded from (seed, chain)) and write to
/// preassigned slots, so the output is identical for any thread count.
SnapshotDataset sample_snapshots(const IsingModel& model, const SamplerConfig& config,
                                 SampleReport* report = nullptr);

struct ExactStats {
  double energy_per_site = 0.0;
  double mean_abs_m = 0.0;
  double mean_m2 = 0.0;
  double mean_m4 = 0.0;
  double binder_u4 = 0.0;
  std::vector<double> probabilities;  // full table when N <= 16, else empty
};

/// Exact thermal averages by enumeration over all 2^N states (N <= 20).
ExactStats exact_enumeration(const IsingModel& model, double beta);

struct BinderOptions {
  int64_t samples_per_eval = 20000;  // per chain count below is divided out
  int n_chains = 8;
  int64_t therm_updates = 500;
  int64_t decorr_updates = 2;
  double beta_rel_tolerance = 0.002;  // bracket width target, relative
  int max_evals = 60;
  uint64_t seed = 20240901;
  int threads = 0;
};

struct BetaCEstimate {
  double beta_c = 0.0;
  double uncertainty = 0.0;
  int evaluations = 0;
};

/// Locates the Binder-cumulant crossing U4_small(beta) = U4_large(beta) by
/// bisection on Wolff-sampled estimates. Models must be Z2-symmetric and
/// differ only in lattice size.
BetaCEstimate locate_critical_temperature(const IsingModel& small_model,
                                          const IsingModel& large_model, double beta_lo,
                                          double beta_hi, const BinderOptions& options = {});

/// Exact 2D critical temperature 2J/ln(1+sqrt(2)) and the accepted 3D value,
/// in units of J (k_B = 1).
double critical_temperature_2d(double coupling = 1.0);
double critical_temperature_3d(double coupling = 1.0);

}  // namespace snaprg
