#include "edg/equilibrium.h"
#include "edg/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_pow2_band(Index k) { return k >= 8; }

}  // namespace

PhiCEstimate estimate_phi_c(const Kernel& kernel, Index k_probe, double tol) {
  if (k_probe < 16) throw Error(ErrorKind::domain, "estimate_phi_c needs k_probe >= 16");
  PhiCEstimate est;
  est.k_probe = k_probe;

  auto ratio = [&](Index k) {
    const double num = kernel(k, 0);
    const double den = kernel(1, k - 1);
    if (den > 0.0) return num / den;
    return num > 0.0 ? kInf : std::numeric_limits<double>::quiet_NaN();
  };

  CompensatedSum avg;
  Index count = 0;
  double lo = kInf, hi = -kInf;
  for (Index k = k_probe / 2; k <= k_probe; ++k) {
    const double r = ratio(k);
    avg.add(r);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ++count;
  }
  est.raw_tail_average = avg.value() / static_cast<double>(count);

  std::vector<double> h, f;
  for (Index k = k_probe; is_pow2_band(k) && h.size() < 6; k /= 2) {
    h.push_back(1.0 / static_cast<double>(k));
    f.push_back(ratio(k));
  }
  const bool finite_samples =
      std::all_of(f.begin(), f.end(), [](double x) { return std::isfinite(x); });
  if (!finite_samples || f[0] > 1e12) {
    est.value = ExtReal::infinity();
    est.converged = finite_samples || f[0] == kInf;
    est.tail_deviation = 0.0;
    return est;
  }

  // Ratios that keep growing like a power of k (or a logarithm) have no
  // finite limit; a convergent ratio has a vanishing log-log slope.
  if (f[0] > 0.0 && f[1] > 0.0 && f[2] > 0.0) {
    const double slope0 = std::log(f[0] / f[1]) / std::log(2.0);
    const double slope1 = std::log(f[1] / f[2]) / std::log(2.0);
    if (slope0 > 0.05 && slope0 >= 0.5 * slope1) {
      est.value = ExtReal::infinity();
      est.converged = true;
      return est;
    }
  }

  const Extrapolation ex = neville_to_zero(h, f);
  const double value = std::max(ex.value, 0.0);
  est.value = ExtReal::finite(value);
  est.extrapolation_error = ex.error;
  est.converged = ex.error <= tol * std::max(value, 1e-300);
  if (value > 0.0) est.tail_deviation = std::max(std::abs(hi / value - 1.0), std::abs(lo / value - 1.0));
  return est;
}

ChemicalPotential compute_log_q(const Kernel& kernel, Index k_max) {
  if (k_max < 0) throw Error(ErrorKind::domain, "compute_log_q needs k_max >= 0");
  ChemicalPotential cp;
  cp.log_q.resize(static_cast<std::size_t>(k_max) + 1);
  cp.log_q[0] = 0.0;
  CompensatedSum acc;
  for (Index l = 1; l <= k_max; ++l) {
    const double up = kernel(1, l - 1);
    const double down = kernel(l, 0);
    if (!(up > 0.0) || !(down > 0.0)) {
      throw Error(ErrorKind::zero_rate, "chemical potential undefined at k=" + std::to_string(l) +
                                            " (K(1,k-1)=" + format_double(up) +
                                            ", K(k,0)=" + format_double(down) + ")");
    }
    acc.add(std::log(up) - std::log(down));
    cp.log_q[l] = acc.value();
  }
  cp.phi_c = estimate_phi_c(kernel, std::max<Index>(k_max, Index{1} << 20));
  return cp;
}

const char* to_string(TailKind kind) {
  switch (kind) {
    case TailKind::rigorous: return "rigorous";
    case TailKind::estimated: return "estimated";
    case TailKind::unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

enum class Verdict { converged, divergent, inconclusive };

struct SeriesOutcome {
  SeriesValue sum;
  Verdict verdict = Verdict::converged;
};

// Sum_l l^power phi^l Q_l in log-scaled arithmetic. Stops as soon as a
// geometric bound on the remainder drops below 1e-16 of the running sum;
// at or next to phi_c, where the terms decay like a power of l, the
// remainder is extrapolated from dyadic partial sums instead.
SeriesOutcome sum_series(const ChemicalPotential& cp, double phi, int power) {
  SeriesOutcome out;
  auto& s = out.sum;
  const Index first = power == 0 ? 0 : 1;
  if (phi == 0.0) {
    s.value = power == 0 ? 1.0 : 0.0;
    s.log_value = power == 0 ? 0.0 : -kInf;
    s.terms = 1;
    return out;
  }
  const Index last = cp.k_max();
  const double lp = std::log(phi);
  const double phi_c = cp.phi_c_value();
  const double ratio_limit = std::isfinite(phi_c) ? phi / phi_c : 0.0;

  auto log_term = [&](Index l) {
    return (power == 0 ? 0.0 : std::log(static_cast<double>(l))) + static_cast<double>(l) * lp +
           cp.log_q[l];
  };

  // Checkpoints last, last/2, ..., last/16 for extrapolation.
  std::vector<Index> marks;
  for (Index m = last, i = 0; i < 5 && m >= first + 1; m /= 2, ++i) marks.push_back(m);
  std::reverse(marks.begin(), marks.end());
  std::vector<std::pair<double, double>> partial;  // (scaled sum, log scale)

  CompensatedSum acc;
  double scale = -kInf;
  double prev = -kInf;
  std::size_t next_mark = 0;
  for (Index l = first; l <= last; ++l) {
    const double lt = log_term(l);
    if (lt > scale) {
      if (std::isfinite(scale)) acc.scale(std::exp(scale - lt));
      scale = lt;
    }
    acc.add(std::exp(lt - scale));
    if (next_mark < marks.size() && marks[next_mark] == l) {
      partial.emplace_back(acc.value(), scale);
      ++next_mark;
    }
    if (l >= first + 4) {
      const double r = std::exp(lt - prev);
      const double growth = power == 0 ? 1.0 : static_cast<double>(l + 1) / static_cast<double>(l);
      const double rb = std::max(r, ratio_limit * growth);
      if (rb < 1.0) {
        const double bound = std::exp(lt - scale) * rb / (1.0 - rb);
        if (bound <= 1e-16 * acc.value()) {
          s.log_value = std::log(acc.value()) + scale;
          s.value = std::exp(s.log_value);
          s.tail_bound = bound * std::exp(scale);
          s.tail = TailKind::rigorous;
          s.terms = l - first + 1;
          return out;
        }
      }
    }
    prev = lt;
  }

  s.terms = last - first + 1;
  const double total = acc.value();
  const Index half = std::max(first, last / 2);
  s.decay_exponent = half > 0 && half < last
                         ? (log_term(half) - log_term(last)) / std::log(static_cast<double>(last) / half)
                         : 0.0;

  // Strictly below phi_c the ratios stay under a limit < 1, so the geometric
  // remainder bound is valid even if it is not yet tiny.
  if (ratio_limit < 1.0 - 1e-6) {
    const double r = std::exp(log_term(last) - log_term(last - 1));
    const double growth = power == 0 ? 1.0 : static_cast<double>(last + 1) / static_cast<double>(last);
    const double rb = std::max(r, ratio_limit * growth);
    if (rb < 1.0) {
      s.log_value = std::log(total) + scale;
      s.value = std::exp(s.log_value);
      s.tail_bound = std::exp(log_term(last)) * rb / (1.0 - rb);
      s.tail = TailKind::rigorous;
      return out;
    }
  }

  if (s.decay_exponent < 0.9) {
    out.verdict = Verdict::divergent;
    s.value = kInf;
    s.log_value = kInf;
    s.tail = TailKind::unbounded;
    s.tail_bound = kInf;
    return out;
  }
  if (s.decay_exponent <= 1.1) {
    out.verdict = Verdict::inconclusive;
    s.log_value = std::log(total) + scale;
    s.value = std::exp(s.log_value);
    s.tail = TailKind::unbounded;
    s.tail_bound = kInf;
    return out;
  }

  std::vector<double> seq;
  for (const auto& [v, sc] : partial) seq.push_back(v * std::exp(sc - scale));
  const Extrapolation ex = aitken_limit(seq, 8.0 * std::numeric_limits<double>::epsilon() * total);
  const double value = std::max(ex.value, total);
  s.log_value = std::log(value) + scale;
  s.value = std::exp(s.log_value);
  s.tail_bound = (std::abs(value - total) + ex.error) * std::exp(scale);
  s.tail = TailKind::estimated;
  return out;
}

double clamp_to_phi_c(const ChemicalPotential& cp, double phi, double tol) {
  if (!(phi >= 0.0)) throw Error(ErrorKind::domain, "fugacity must be >= 0, got " + format_double(phi));
  const double phi_c = cp.phi_c_value();
  if (std::isfinite(phi_c)) {
    if (phi > phi_c * (1.0 + tol)) {
      throw Error(ErrorKind::divergent, "Z(phi) diverges for phi=" + format_double(phi) +
                                            " > phi_c=" + format_double(phi_c));
    }
    phi = std::min(phi, phi_c);
  }
  return phi;
}

}  // namespace

PartitionSum partition_sum(const ChemicalPotential& cp, double phi, double tol) {
  phi = clamp_to_phi_c(cp, phi, tol);
  const SeriesOutcome z = sum_series(cp, phi, 0);
  if (z.verdict == Verdict::divergent) {
    throw Error(ErrorKind::divergent, "Z diverges at phi=" + format_double(phi));
  }
  if (z.verdict == Verdict::inconclusive) {
    throw Error(ErrorKind::inconclusive,
                "terms of Z decay too slowly to decide convergence at phi=" + format_double(phi));
  }
  return z.sum;
}

double density_of_phi(const ChemicalPotential& cp, double phi, double tol) {
  phi = clamp_to_phi_c(cp, phi, tol);
  if (phi == 0.0) return 0.0;
  const PartitionSum z = partition_sum(cp, phi, tol);
  const SeriesOutcome n = sum_series(cp, phi, 1);
  if (n.verdict == Verdict::divergent) return kInf;
  if (n.verdict == Verdict::inconclusive) {
    throw Error(ErrorKind::inconclusive,
                "first moment series undecided at phi=" + format_double(phi));
  }
  return std::exp(n.sum.log_value - z.log_value);
}

CriticalDensity critical_density(const ChemicalPotential& cp) {
  CriticalDensity out;
  if (cp.phi_c.value.is_infinite()) {
    out.value = ExtReal::infinity();
    out.method = "phi_c infinite";
    return out;
  }
  if (!cp.phi_c.converged) {
    throw Error(ErrorKind::inconclusive,
                "phi_c estimate did not converge (last correction " +
                    format_double(cp.phi_c.extrapolation_error) + ")");
  }
  const double phi_c = cp.phi_c.value.value();
  if (phi_c == 0.0) {
    out.value = ExtReal::finite(0.0);
    out.method = "direct";
    return out;
  }

  for (int j = 1; j <= 24; ++j) {
    const double phi = phi_c * (1.0 - std::ldexp(1.0, -j));
    const SeriesOutcome z = sum_series(cp, phi, 0);
    const SeriesOutcome n = sum_series(cp, phi, 1);
    if (z.verdict != Verdict::converged || n.verdict != Verdict::converged) break;
    out.ladder.push_back(std::exp(n.sum.log_value - z.sum.log_value));
  }
  if (out.ladder.size() >= 2) {
    const double a = out.ladder[out.ladder.size() - 2];
    const double b = out.ladder.back();
    out.last_increment = std::abs(b - a) / std::max(std::abs(b), 1e-300);
  }

  const SeriesOutcome z = sum_series(cp, phi_c, 0);
  const SeriesOutcome n = sum_series(cp, phi_c, 1);
  if (z.verdict == Verdict::divergent || (z.verdict == Verdict::converged && n.verdict == Verdict::divergent)) {
    out.value = ExtReal::infinity();
    out.method = "direct divergent";
    return out;
  }
  if (z.verdict == Verdict::converged && n.verdict == Verdict::converged) {
    out.value = ExtReal::finite(std::exp(n.sum.log_value - z.sum.log_value));
    out.method = "direct";
    return out;
  }

  // Direct sums undecided: accept the ladder only if it has settled.
  const std::size_t m = out.ladder.size();
  if (m >= 3) {
    const double i1 = std::abs(out.ladder[m - 1] - out.ladder[m - 2]);
    const double i2 = std::abs(out.ladder[m - 2] - out.ladder[m - 3]);
    const double ref = std::max(std::abs(out.ladder.back()), 1e-300);
    if (i1 < 1e-8 * ref && i2 < 1e-8 * ref) {
      out.value = ExtReal::finite(out.ladder.back());
      out.method = "ladder";
      return out;
    }
  }
  throw Error(ErrorKind::inconclusive,
              "critical density: ladder did not stabilize (last relative increment " +
                  format_double(out.last_increment) + ") and the sums at phi_c are undecided");
}

double solve_phi_of_rho(const ChemicalPotential& cp, double rho, std::optional<ExtReal> rho_c) {
  if (!(rho >= 0.0)) throw Error(ErrorKind::domain, "density must be >= 0, got " + format_double(rho));
  if (rho == 0.0) return 0.0;
  const ExtReal rc = rho_c ? *rho_c : critical_density(cp).value;
  const double tol = 1e-10 * std::max(1.0, rho);
  const double phi_c = cp.phi_c_value();
  if (rc.is_finite()) {
    if (rho > rc.value() + 1e-9 * std::max(1.0, rc.value())) {
      throw Error(ErrorKind::supercritical,
                  "rho=" + format_double(rho) + " exceeds rho_c=" + format_double(rc.value()));
    }
    if (std::abs(rho - rc.value()) <= tol && std::isfinite(phi_c)) return phi_c;
  }

  double lo = 0.0;
  double hi = std::isfinite(phi_c) ? phi_c : 1.0;
  if (!std::isfinite(phi_c)) {
    while (density_of_phi(cp, hi) < rho) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) throw Error(ErrorKind::non_convergent, "no fugacity bracket for rho");
    }
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double d = density_of_phi(cp, mid);
    if (std::abs(d - rho) <= tol) return mid;
    (d < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EquilibriumProfile equilibrium_profile(const ChemicalPotential& cp,
                                       std::variant<Fugacity, Density> target, Index k_max,
                                       std::optional<ExtReal> rho_c) {
  if (k_max < 0 || k_max > cp.k_max()) {
    throw Error(ErrorKind::domain, "profile k_max=" + std::to_string(k_max) +
                                       " outside the chemical potential range 0.." +
                                       std::to_string(cp.k_max()));
  }
  EquilibriumProfile p;
  if (const auto* f = std::get_if<Fugacity>(&target)) {
    p.phi = clamp_to_phi_c(cp, f->value, 1e-9);
  } else {
    p.phi = solve_phi_of_rho(cp, std::get<Density>(target).value, rho_c);
  }
  const PartitionSum z = partition_sum(cp, p.phi);
  p.z = z.value;
  p.log_z = z.log_value;
  p.density = density_of_phi(cp, p.phi);

  p.omega.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  CompensatedSum mass;
  if (p.phi == 0.0) {
    p.omega[0] = 1.0;
    mass.add(1.0);
  } else {
    const double lp = std::log(p.phi);
    for (Index l = 0; l <= k_max; ++l) {
      p.omega[l] = std::exp(static_cast<double>(l) * lp + cp.log_q[l] - p.log_z);
      mass.add(p.omega[l]);
    }
  }
  const double tail_rel = std::isfinite(p.z) && p.z > 0.0 ? z.tail_bound / p.z : 0.0;
  p.truncation_tail_bound = std::max(0.0, 1.0 - mass.value()) + tail_rel;
  return p;
}

EquilibriumEngine::EquilibriumEngine(const Kernel& kernel, Index k_max)
    : cp_(std::make_shared<const ChemicalPotential>(compute_log_q(kernel, k_max))) {}

EquilibriumEngine::EquilibriumEngine(ChemicalPotential cp)
    : cp_(std::make_shared<const ChemicalPotential>(std::move(cp))) {}

const CriticalDensity& EquilibriumEngine::critical() const {
  std::call_once(once_, [this] {
    try {
      rho_c_ = critical_density(*cp_);
    } catch (...) {
      rho_c_error_ = std::current_exception();
    }
  });
  if (rho_c_error_) std::rethrow_exception(rho_c_error_);
  return *rho_c_;
}

double EquilibriumEngine::phi_of_rho(double rho) const { return solve_phi_of_rho(*cp_, rho, rho_c()); }

EquilibriumProfile EquilibriumEngine::profile_for_density(double rho, Index k_max) const {
  return equilibrium_profile(*cp_, Density{rho}, k_max, rho_c());
}

EquilibriumProfile EquilibriumEngine::profile_for_fugacity(double phi, Index k_max) const {
  return equilibrium_profile(*cp_, Fugacity{phi}, k_max);
}

void write_profile_csv(std::ostream& out, const EquilibriumProfile& profile,
                       const ChemicalPotential& cp) {
  out << "l,omega_l,log_q_l\n";
  for (Index l = 0; l <= profile.k_max(); ++l) {
    out << l << ',' << format_double(profile.omega[l]) << ',' << format_double(cp.log_q[l]) << '\n';
  }
}

nlohmann::json summary_json(const EquilibriumProfile& profile, const ExtReal& rho_c,
                            const ExtReal& phi_c) {
  auto finite_or_tag = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return {{"kind", "infinite"}};
  };
  return {
      {"phi", profile.phi},
      {"z", finite_or_tag(profile.z)},
      {"log_z", profile.log_z},
      {"density", finite_or_tag(profile.density)},
      {"rho_c", to_json_value(rho_c)},
      {"phi_c", to_json_value(phi_c)},
      {"k_max", profile.k_max()},
      {"truncation_tail_bound", profile.truncation_tail_bound},
  };
}

}  // namespace edg
