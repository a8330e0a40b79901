#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "edg/kernel.h"
#include "edg/numerics.h"

namespace edg {

/// Ratio r_k = K(k,0)/K(1,k-1) extrapolated to k -> infinity.
struct PhiCEstimate {
  ExtReal value = ExtReal::infinity();
  bool converged = false;
  double extrapolation_error = 0.0;  // size of the last Neville correction
  double tail_deviation = 0.0;       // max |r_k/value - 1| over k in [k_probe/2, k_probe]
  double raw_tail_average = 0.0;     // plain mean of r_k over the same band
  Index k_probe = 0;
};

/// Throws Error(domain) for k_probe < 16. `tol` is relative and only
/// decides the `converged` flag.
PhiCEstimate estimate_phi_c(const Kernel& kernel, Index k_probe, double tol = 1e-6);

/// log Q_l for l = 0..k_max together with the critical fugacity.
struct ChemicalPotential {
  std::vector<double> log_q;
  PhiCEstimate phi_c;

  Index k_max() const { return static_cast<Index>(log_q.size()) - 1; }
  double phi_c_value() const { return phi_c.value.as_double(); }
};

inline constexpr Index kDefaultSeriesCap = 1'000'000;

/// Throws Error(zero_rate) naming the first k with K(1,k-1) = 0 or K(k,0) = 0.
ChemicalPotential compute_log_q(const Kernel& kernel, Index k_max = kDefaultSeriesCap);

enum class TailKind { rigorous, estimated, unbounded };
const char* to_string(TailKind kind);

/// Value of Sum_l w_l phi^l Q_l with control of the part beyond the evaluated range.
struct SeriesValue {
  double value = 0.0;      // may be +inf when log_value exceeds double range
  double log_value = 0.0;
  double tail_bound = 0.0;  // absolute; bound (rigorous) or error estimate (estimated)
  TailKind tail = TailKind::rigorous;
  Index terms = 0;          // number of terms summed directly
  double decay_exponent = 0.0;  // local power-law exponent of the terms at the cutoff
};

using PartitionSum = SeriesValue;

/// Z(phi). Throws Error(divergent) when phi exceeds phi_c beyond `tol`
/// (relative) or when the series diverges at phi_c, Error(inconclusive)
/// when the terms decay too close to 1/l to decide.
PartitionSum partition_sum(const ChemicalPotential& cp, double phi, double tol = 1e-9);

/// rho(phi) = Sum l phi^l Q_l / Z(phi). Errors as partition_sum.
double density_of_phi(const ChemicalPotential& cp, double phi, double tol = 1e-9);

struct CriticalDensity {
  ExtReal value = ExtReal::infinity();
  std::string method;             // "phi_c infinite", "direct", "direct divergent", "ladder"
  std::vector<double> ladder;     // rho(phi_c (1 - 2^-j)), j = 1..
  double last_increment = 0.0;    // relative change between the last two ladder rungs
};

/// Throws Error(inconclusive) when phi_c did not converge, or when neither
/// the direct sums at phi_c nor the fugacity ladder settle.
CriticalDensity critical_density(const ChemicalPotential& cp);

/// Bisection on the increasing map phi -> rho(phi). `rho_c` may be supplied
/// to avoid recomputing it. Throws Error(supercritical) for rho > rho_c.
double solve_phi_of_rho(const ChemicalPotential& cp, double rho,
                        std::optional<ExtReal> rho_c = std::nullopt);

struct Fugacity {
  double value;
};
struct Density {
  double value;
};

struct EquilibriumProfile {
  std::vector<double> omega;  // l = 0..k_max
  double phi = 0.0;
  double z = 1.0;
  double log_z = 0.0;
  double density = 0.0;
  double truncation_tail_bound = 0.0;

  Index k_max() const { return static_cast<Index>(omega.size()) - 1; }
};

EquilibriumProfile equilibrium_profile(const ChemicalPotential& cp,
                                       std::variant<Fugacity, Density> target, Index k_max,
                                       std::optional<ExtReal> rho_c = std::nullopt);

/// A chemical potential plus a lazily computed, cached critical density.
/// Safe to share between threads.
class EquilibriumEngine {
 public:
  explicit EquilibriumEngine(const Kernel& kernel, Index k_max = kDefaultSeriesCap);
  explicit EquilibriumEngine(ChemicalPotential cp);

  const ChemicalPotential& potential() const { return *cp_; }
  ExtReal phi_c() const { return cp_->phi_c.value; }
  /// Throws what critical_density throws.
  const CriticalDensity& critical() const;
  ExtReal rho_c() const { return critical().value; }

  double phi_of_rho(double rho) const;
  EquilibriumProfile profile_for_density(double rho, Index k_max) const;
  EquilibriumProfile profile_for_fugacity(double phi, Index k_max) const;

 private:
  std::shared_ptr<const ChemicalPotential> cp_;
  mutable std::once_flag once_;
  mutable std::optional<CriticalDensity> rho_c_;
  mutable std::exception_ptr rho_c_error_;
};

/// Columns l, omega_l, log_q_l.
void write_profile_csv(std::ostream& out, const EquilibriumProfile& profile,
                       const ChemicalPotential& cp);

nlohmann::json summary_json(const EquilibriumProfile& profile, const ExtReal& rho_c,
                            const ExtReal& phi_c);

}  // namespace edg
