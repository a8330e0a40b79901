#pragma once

#include <span>
#include <vector>

#include "edg/dynamics.h"
#include "edg/equilibrium.h"
#include "edg/kernel.h"
#include "edg/numerics.h"

namespace edg {

/// F[c] = Sum c_k log(c_k / Q_k) with 0 log 0 = 0. Needs log_q up to N.
double free_energy(std::span<const double> c, const ChemicalPotential& cp);

/// S[c] = Sum c_k log c_k.
double entropy_part(std::span<const double> c);

/// Sum c_k log(c_k / omega_k); +inf if some c_k > 0 meets omega_k = 0.
double relative_entropy(std::span<const double> c, const EquilibriumProfile& eq);

/// F[c] + log Z - rho log phi, the closed form of the relative entropy for
/// states of unit zeroth moment.
double relative_entropy_identity(std::span<const double> c, const EquilibriumProfile& eq,
                                 const ChemicalPotential& cp);

struct DissipationValue {
  ExtReal value = ExtReal::finite(0.0);
  double finite_part = 0.0;  // sum over the finite terms
  Index infinite_terms = 0;  // pairs with exactly one vanishing reaction rate
};

/// D[c] = 1/2 Sum_{k,l=1..N} psi(K(k,l-1) c_k c_{l-1}, K(l,k-1) c_l c_{k-1}).
DissipationValue dissipation(const Kernel& kernel, std::span<const double> c);

struct FreeEnergySample {
  double t = 0.0;
  double f_value = 0.0;
  double s_value = 0.0;
  DissipationValue d_value;
};

FreeEnergySample thermo_sample(const Kernel& kernel, std::span<const double> c,
                               const ChemicalPotential& cp, double t = 0.0);

/// Hook for Integrator::run that appends F, D and the count of infinite D
/// terms to the trajectory record. D is stored as +inf when infinite.
/// `cp` is held by reference and must outlive the hook.
SampleHook make_thermo_hook(const Kernel& kernel, const ChemicalPotential& cp);

/// Dense symmetric (N+1) x (N+1) matrix.
struct OnsagerOperator {
  Index n_trunc = 0;
  std::vector<double> entries;  // row-major

  double operator()(Index i, Index j) const { return entries[static_cast<std::size_t>(i * (n_trunc + 1) + j)]; }
  std::vector<double> apply(std::span<const double> x) const;
};

inline constexpr Index kOnsagerMaxN = 512;

/// Throws Error(boundary_state) if some c_k = 0 and Error(domain) if N > 512.
OnsagerOperator assemble_onsager(const Kernel& kernel, std::span<const double> c,
                                 const ChemicalPotential& cp);

/// DF[c]_k = log c_k - log Q_k - 1.
std::vector<double> free_energy_gradient(std::span<const double> c, const ChemicalPotential& cp);

/// max_k |rhs_k + (K[c] DF[c])_k|.
double gradient_flow_residual(const Kernel& kernel, std::span<const double> c,
                              const ChemicalPotential& cp);

/// max over k, l = 1..n of |log kappa(k,l-1) - log kappa(l,k-1)| with
/// kappa(k,l-1) = K(k,l-1) Q_k Q_{l-1}; pairs with a zero rate are skipped.
double kappa_asymmetry(const Kernel& kernel, const ChemicalPotential& cp, Index n);

}  // namespace edg
