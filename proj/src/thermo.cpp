#include "edg/thermo.h"
#include "edg/error.h"

#include <cmath>
#include <limits>

namespace edg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_potential(std::span<const double> c, const ChemicalPotential& cp) {
  if (static_cast<Index>(c.size()) - 1 > cp.k_max()) {
    throw Error(ErrorKind::domain, "chemical potential shorter than the state");
  }
}

}  // namespace

double free_energy(std::span<const double> c, const ChemicalPotential& cp) {
  require_potential(c, cp);
  CompensatedSum s;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] > 0.0) s.add(c[k] * (std::log(c[k]) - cp.log_q[k]));
  }
  return s.value();
}

double entropy_part(std::span<const double> c) {
  CompensatedSum s;
  for (double x : c) {
    if (x > 0.0) s.add(x * std::log(x));
  }
  return s.value();
}

double relative_entropy(std::span<const double> c, const EquilibriumProfile& eq) {
  CompensatedSum s;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!(c[k] > 0.0)) continue;
    const double w = k < eq.omega.size() ? eq.omega[k] : 0.0;
    if (!(w > 0.0)) return kInf;
    s.add(c[k] * (std::log(c[k]) - std::log(w)));
  }
  return s.value();
}

double relative_entropy_identity(std::span<const double> c, const EquilibriumProfile& eq,
                                 const ChemicalPotential& cp) {
  const double rho = first_moment(c);
  double phi_term = 0.0;
  if (rho > 0.0) phi_term = eq.phi > 0.0 ? rho * std::log(eq.phi) : -kInf;
  return free_energy(c, cp) + eq.log_z - phi_term;
}

DissipationValue dissipation(const Kernel& kernel, std::span<const double> c) {
  const Index n = static_cast<Index>(c.size()) - 1;
  DissipationValue out;
  CompensatedSum s;
  for (Index k = 1; k <= n; ++k) {
    // Every term in this row needs c_k c_{l-1} or c_l c_{k-1} to be nonzero.
    if (c[k] == 0.0 && c[k - 1] == 0.0) continue;
    for (Index l = 1; l <= n; ++l) {
      if (l == k) continue;  // the two rates coincide, psi = 0
      const double x = kernel(k, l - 1) * c[k] * c[l - 1];
      const double y = kernel(l, k - 1) * c[l] * c[k - 1];
      const double p = psi_boltzmann(x, y);
      if (std::isinf(p)) {
        ++out.infinite_terms;
      } else {
        s.add(p);
      }
    }
  }
  out.finite_part = 0.5 * s.value();
  out.value = out.infinite_terms > 0 ? ExtReal::infinity() : ExtReal::finite(out.finite_part);
  return out;
}

FreeEnergySample thermo_sample(const Kernel& kernel, std::span<const double> c,
                               const ChemicalPotential& cp, double t) {
  FreeEnergySample s;
  s.t = t;
  s.f_value = free_energy(c, cp);
  s.s_value = entropy_part(c);
  s.d_value = dissipation(kernel, c);
  return s;
}

SampleHook make_thermo_hook(const Kernel& kernel, const ChemicalPotential& cp) {
  return [kernel, &cp](double, std::span<const double> c, TrajectoryRecord& rec) {
    rec.free_energy.push_back(free_energy(c, cp));
    const DissipationValue d = dissipation(kernel, c);
    rec.dissipation.push_back(d.value.as_double());
    rec.dissipation_infinite_terms.push_back(d.infinite_terms);
  };
}

std::vector<double> OnsagerOperator::apply(std::span<const double> x) const {
  const std::size_t m = static_cast<std::size_t>(n_trunc) + 1;
  std::vector<double> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    CompensatedSum s;
    for (std::size_t j = 0; j < m; ++j) s.add(entries[i * m + j] * x[j]);
    y[i] = s.value();
  }
  return y;
}

OnsagerOperator assemble_onsager(const Kernel& kernel, std::span<const double> c,
                                 const ChemicalPotential& cp) {
  const Index n = static_cast<Index>(c.size()) - 1;
  if (n > kOnsagerMaxN) {
    throw Error(ErrorKind::domain, "Onsager assembly is capped at N = " + std::to_string(kOnsagerMaxN));
  }
  require_potential(c, cp);
  for (Index k = 0; k <= n; ++k) {
    if (!(c[k] > 0.0)) {
      throw Error(ErrorKind::boundary_state, "c_" + std::to_string(k) + " = 0; the operator needs c > 0");
    }
  }
  std::vector<double> lc(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) lc[k] = std::log(c[k]);

  OnsagerOperator op;
  op.n_trunc = n;
  const std::size_t m = static_cast<std::size_t>(n) + 1;
  op.entries.assign(m * m, 0.0);

  for (Index k = 1; k <= n; ++k) {
    for (Index l = 1; l <= n; ++l) {
      if (l == k) continue;  // zero stoichiometric vector
      const double rate = kernel(k, l - 1);
      if (!(rate > 0.0)) continue;
      const double log_kappa = std::log(rate) + cp.log_q[k] + cp.log_q[l - 1];
      const double lu = lc[k] + lc[l - 1] - cp.log_q[k] - cp.log_q[l - 1];
      const double lw = lc[l] + lc[k - 1] - cp.log_q[l] - cp.log_q[k - 1];
      const double weight = 0.5 * std::exp(log_kappa + log_log_mean(lu, lw));

      // v = e_k + e_{l-1} - e_l - e_{k-1}, with coinciding indices merged.
      Index idx[4] = {k, l - 1, l, k - 1};
      double coef[4] = {1.0, 1.0, -1.0, -1.0};
      for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
          if (coef[b] != 0.0 && idx[b] == idx[a]) {
            coef[a] += coef[b];
            coef[b] = 0.0;
          }
        }
      }
      for (int a = 0; a < 4; ++a) {
        if (coef[a] == 0.0) continue;
        for (int b = 0; b < 4; ++b) {
          if (coef[b] == 0.0) continue;
          op.entries[static_cast<std::size_t>(idx[a]) * m + static_cast<std::size_t>(idx[b])] +=
              weight * coef[a] * coef[b];
        }
      }
    }
  }
  return op;
}

std::vector<double> free_energy_gradient(std::span<const double> c, const ChemicalPotential& cp) {
  require_potential(c, cp);
  std::vector<double> df(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!(c[k] > 0.0)) throw Error(ErrorKind::boundary_state, "DF undefined at c_" + std::to_string(k) + " = 0");
    df[k] = std::log(c[k]) - cp.log_q[k] - 1.0;
  }
  return df;
}

double gradient_flow_residual(const Kernel& kernel, std::span<const double> c,
                              const ChemicalPotential& cp) {
  const OnsagerOperator op = assemble_onsager(kernel, c, cp);
  const std::vector<double> df = free_energy_gradient(c, cp);
  const std::vector<double> kdf = op.apply(df);
  const std::vector<double> dc = rhs(kernel, c, RatePath::generic);
  double worst = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) worst = std::max(worst, std::abs(dc[k] + kdf[k]));
  return worst;
}

double kappa_asymmetry(const Kernel& kernel, const ChemicalPotential& cp, Index n) {
  if (n > cp.k_max()) throw Error(ErrorKind::domain, "chemical potential shorter than n");
  double worst = 0.0;
  for (Index k = 1; k <= n; ++k) {
    for (Index l = 1; l <= n; ++l) {
      const double r1 = kernel(k, l - 1);
      const double r2 = kernel(l, k - 1);
      if (!(r1 > 0.0) || !(r2 > 0.0)) continue;
      const double a = std::log(r1) + cp.log_q[k] + cp.log_q[l - 1];
      const double b = std::log(r2) + cp.log_q[l] + cp.log_q[k - 1];
      worst = std::max(worst, std::abs(a - b));
    }
  }
  return worst;
}

}  // namespace edg
