#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edg/dynamics.h"
#include "edg/equilibrium.h"

namespace edg {

/// x_l = Sum_{k >= l} k c_k. Throws Error(domain) unless 0 <= l <= N.
double tail_mass(std::span<const double> c, Index l);

/// Sum |a_k - b_k|; the shorter profile is padded with zeros.
double weak_distance(std::span<const double> a, std::span<const double> b);

/// Sum (1 + k) |a_k - b_k|; padded like weak_distance.
double strong_norm_distance(std::span<const double> a, std::span<const double> b);

enum class Regime { subcritical, critical, supercritical };
const char* to_string(Regime r);

struct LongtimeConfig {
  double dead_band = 1e-6;
  Index low_band = 10;          // weak convergence is tracked on k <= low_band
  Index excess_band_start = 0;  // L in Sum_{k >= L} k c_k; 0 means ceil(N/10)
};

struct ConvergenceReport {
  double target_density = 0.0;
  ExtReal rho_c = ExtReal::infinity();
  ExtReal phi_c = ExtReal::infinity();
  Regime regime = Regime::subcritical;
  double limit_density = 0.0;  // min(rho, rho_c)
  double limit_phi = 0.0;
  double limit_free_energy = 0.0;  // F of the weak limit, plus (rho - rho_c) log phi_c if supercritical
  Index excess_band_start = 0;
  Index low_band = 10;

  std::vector<double> times;
  std::vector<double> weak_distance_series;
  std::vector<double> low_band_distance_series;
  std::vector<double> strong_distance_series;
  std::vector<double> excess_mass_series;
  std::vector<double> free_energy_gap_series;

  double free_energy_limit_gap = 0.0;  // last entry of the gap series
  double excess_target = 0.0;          // rho - rho_c when supercritical, else 0
  double final_boundary_mass = 0.0;
  bool boundary_contamination = false;  // boundary mass above 1% of rho at the end
};

/// Needs at least 10 stored states. Throws Error(rho_c_unavailable) when the
/// critical density cannot be decided.
ConvergenceReport classify_longtime(const TrajectoryRecord& traj, const EquilibriumEngine& engine,
                                    const LongtimeConfig& cfg = {});

nlohmann::json to_json(const ConvergenceReport& report);

/// Columns t, weak_d, strong_d, excess_mass, F_gap.
void write_series_csv(std::ostream& out, const ConvergenceReport& report);

/// True when the last `fraction` of `series` never increases by more than
/// `slack` (absolute) from one entry to the next.
bool eventually_nonincreasing(std::span<const double> series, double fraction, double slack = 0.0);

struct SuperlinearWeights {
  std::vector<double> g;          // g_0..g_kmax
  std::vector<double> phi;        // piecewise linear Phi_k
  std::vector<double> phi_steps;  // step function, n + 1 on [l_n, l_{n+1})
  std::vector<Index> ell;         // breakpoints l_0 = 0 < l_1 < ...
  std::vector<double> d_slopes;   // d_0 = 1, d_1, ...
  std::vector<Index> a;           // a_n for n >= 1 (a[0] unused)
  double max_condition_excess = 0.0;  // max (k+1)(g_{k+1} - g_k) - 2 g_k; <= 0 when the bound holds
  bool condition_ok = false;
  std::optional<double> weighted_sum;  // Sum g_k c_k over the input profile
  Index k_max() const { return static_cast<Index>(g.size()) - 1; }
};

/// From a nonincreasing tail sequence C_0 >= C_1 >= ... . Beyond the given
/// range the construction stops early (g is shorter than k_max + 1) unless the
/// sequence has reached 0. Throws Error(not_integrable) if C does not decay.
SuperlinearWeights vallee_poussin_weights_from_tail(std::span<const double> tail, Index k_max);

/// Uses C_k = Sum_{l >= k} (l + 1) c_l, which vanishes beyond N.
SuperlinearWeights vallee_poussin_weights(std::span<const double> c, Index k_max);

nlohmann::json to_json(const SuperlinearWeights& w);

}  // namespace edg
