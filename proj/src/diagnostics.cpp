#include "edg/diagnostics.h"
#include "edg/error.h"
#include "edg/thermo.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edg {

double tail_mass(std::span<const double> c, Index l) {
  const Index n = static_cast<Index>(c.size()) - 1;
  if (l < 0 || l > n) throw Error(ErrorKind::domain, "tail_mass needs 0 <= l <= N");
  CompensatedSum s;
  for (Index k = std::max<Index>(l, 1); k <= n; ++k) s.add(static_cast<double>(k) * c[k]);
  return s.value();
}

namespace {

template <class Weight>
double padded_distance(std::span<const double> a, std::span<const double> b, Weight w) {
  const std::size_t m = std::max(a.size(), b.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < m; ++k) {
    const double x = k < a.size() ? a[k] : 0.0;
    const double y = k < b.size() ? b[k] : 0.0;
    s.add(w(k) * std::abs(x - y));
  }
  return s.value();
}

}  // namespace

double weak_distance(std::span<const double> a, std::span<const double> b) {
  return padded_distance(a, b, [](std::size_t) { return 1.0; });
}

double strong_norm_distance(std::span<const double> a, std::span<const double> b) {
  return padded_distance(a, b, [](std::size_t k) { return 1.0 + static_cast<double>(k); });
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

bool eventually_nonincreasing(std::span<const double> series, double fraction, double slack) {
  if (series.size() < 2) return true;
  const std::size_t start =
      series.size() - std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(fraction * series.size())));
  for (std::size_t i = start + 1; i < series.size(); ++i) {
    if (series[i] > series[i - 1] + slack) return false;
  }
  return true;
}

ConvergenceReport classify_longtime(const TrajectoryRecord& traj, const EquilibriumEngine& engine,
                                    const LongtimeConfig& cfg) {
  if (traj.states.size() < 10) {
    throw Error(ErrorKind::insufficient_samples,
                "long-time classification needs >= 10 stored states, got " +
                    std::to_string(traj.states.size()));
  }
  const Index n = static_cast<Index>(traj.states.front().size()) - 1;
  ConvergenceReport r;
  r.target_density = first_moment(traj.states.front());
  r.phi_c = engine.phi_c();
  try {
    r.rho_c = engine.rho_c();
  } catch (const Error& e) {
    throw Error(ErrorKind::rho_c_unavailable, e.what());
  }
  const double rho = r.target_density;
  if (r.rho_c.is_infinite() || rho < r.rho_c.value() - cfg.dead_band) {
    r.regime = Regime::subcritical;
  } else if (rho <= r.rho_c.value() + cfg.dead_band) {
    r.regime = Regime::critical;
  } else {
    r.regime = Regime::supercritical;
  }

  const ChemicalPotential& cp = engine.potential();
  EquilibriumProfile limit = r.regime == Regime::supercritical
                                 ? engine.profile_for_fugacity(r.phi_c.value(), n)
                                 : engine.profile_for_density(
                                       r.rho_c.is_finite() ? std::min(rho, r.rho_c.value()) : rho, n);
  r.limit_phi = limit.phi;
  r.limit_density = r.regime == Regime::supercritical ? r.rho_c.value() : rho;
  // F of an untruncated equilibrium is rho log phi - log Z; the excess mass
  // of a supercritical state adds (rho - rho_c) log phi_c.
  r.limit_free_energy = limit.phi > 0.0 ? rho * std::log(limit.phi) - limit.log_z : 0.0;
  r.excess_target = r.regime == Regime::supercritical ? rho - r.rho_c.value() : 0.0;
  r.low_band = std::min(cfg.low_band, n);
  r.excess_band_start = cfg.excess_band_start > 0
                            ? std::min(cfg.excess_band_start, n)
                            : static_cast<Index>(std::ceil(static_cast<double>(n) / 10.0));

  const std::span<const double> low_limit(limit.omega.data(), static_cast<std::size_t>(r.low_band) + 1);
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto& c = traj.states[i];
    r.times.push_back(traj.times[i]);
    r.weak_distance_series.push_back(weak_distance(c, limit.omega));
    r.low_band_distance_series.push_back(
        weak_distance(std::span<const double>(c.data(), static_cast<std::size_t>(r.low_band) + 1), low_limit));
    r.strong_distance_series.push_back(strong_norm_distance(c, limit.omega));
    r.excess_mass_series.push_back(tail_mass(c, r.excess_band_start));
    r.free_energy_gap_series.push_back(free_energy(c, cp) - r.limit_free_energy);
  }
  r.free_energy_limit_gap = r.free_energy_gap_series.back();
  r.final_boundary_mass = boundary_mass(traj.states.back());
  r.boundary_contamination = r.final_boundary_mass > 0.01 * rho;
  return r;
}

nlohmann::json to_json(const ConvergenceReport& r) {
  return {
      {"target_density", r.target_density},
      {"rho_c", to_json_value(r.rho_c)},
      {"phi_c", to_json_value(r.phi_c)},
      {"regime", to_string(r.regime)},
      {"limit_density", r.limit_density},
      {"limit_phi", r.limit_phi},
      {"limit_free_energy", r.limit_free_energy},
      {"low_band", r.low_band},
      {"excess_band_start", r.excess_band_start},
      {"excess_target", r.excess_target},
      {"samples", r.times.size()},
      {"final",
       {{"t", r.times.back()},
        {"weak_distance", r.weak_distance_series.back()},
        {"low_band_distance", r.low_band_distance_series.back()},
        {"strong_distance", r.strong_distance_series.back()},
        {"excess_mass", r.excess_mass_series.back()},
        {"free_energy_gap", r.free_energy_limit_gap},
        {"boundary_mass", r.final_boundary_mass}}},
      {"boundary_contamination", r.boundary_contamination},
  };
}

void write_series_csv(std::ostream& out, const ConvergenceReport& r) {
  out << "t,weak_d,strong_d,excess_mass,F_gap\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    out << format_double(r.times[i]) << ',' << format_double(r.weak_distance_series[i]) << ','
        << format_double(r.strong_distance_series[i]) << ',' << format_double(r.excess_mass_series[i])
        << ',' << format_double(r.free_energy_gap_series[i]) << '\n';
  }
}

SuperlinearWeights vallee_poussin_weights_from_tail(std::span<const double> tail, Index k_max) {
  if (tail.empty()) throw Error(ErrorKind::domain, "empty tail sequence");
  if (k_max < 1) throw Error(ErrorKind::domain, "weights need k_max >= 1");
  if (!(tail[0] >= 0.0) || !std::isfinite(tail[0])) {
    throw Error(ErrorKind::domain, "tail sequence needs a finite C_0 >= 0");
  }
  for (std::size_t k = 1; k < tail.size(); ++k) {
    if (tail[k] > tail[k - 1] * (1.0 + 1e-12) || tail[k] < 0.0) {
      throw Error(ErrorKind::domain, "tail sequence must be nonnegative and nonincreasing");
    }
  }
  const double last = tail.back();
  if (last > 0.0 && last >= tail[0]) {
    throw Error(ErrorKind::not_integrable, "tail sequence does not decay over the available range");
  }
  const Index known = static_cast<Index>(tail.size()) - 1;

  SuperlinearWeights w;
  w.phi.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  w.phi_steps.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  w.ell.push_back(0);
  w.d_slopes.push_back(1.0);
  w.a.push_back(0);

  // a_n = inf{k : C_k <= 1/n^2}; nondecreasing in n, so the search resumes.
  Index cursor = 0;
  auto locate = [&](Index n) -> std::optional<Index> {
    const double level = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    while (cursor <= known && tail[cursor] > level) ++cursor;
    if (cursor <= known) return cursor;
    return std::nullopt;
  };

  Index reached = 0;  // Phi defined on 0..reached
  for (Index n = 0; reached < k_max; ++n) {
    const auto a_next = locate(n + 1);
    if (!a_next) break;
    w.a.push_back(*a_next);
    const Index l_n = w.ell.back();
    const Index l_next = std::max(l_n + 1, *a_next + 1);
    const double d_next = std::min({w.d_slopes.back(),
                                    (static_cast<double>(n + 1) - w.phi[l_n]) / static_cast<double>(l_next - l_n),
                                    1.0 / static_cast<double>(l_next)});
    w.ell.push_back(l_next);
    w.d_slopes.push_back(d_next);
    for (Index k = l_n; k <= std::min(l_next, k_max); ++k) {
      w.phi[k] = w.phi[l_n] + d_next * static_cast<double>(k - l_n);
      if (k < l_next) w.phi_steps[k] = static_cast<double>(n + 1);
    }
    reached = std::min(l_next, k_max);
    if (l_next <= k_max) w.phi_steps[l_next] = static_cast<double>(n + 2);
  }
  w.phi.resize(static_cast<std::size_t>(reached) + 1);
  w.phi_steps.resize(static_cast<std::size_t>(reached) + 1);

  w.g.resize(w.phi.size());
  for (std::size_t k = 0; k < w.g.size(); ++k) w.g[k] = w.phi[k] * static_cast<double>(k + 1) + 1.0;
  w.max_condition_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < w.g.size(); ++k) {
    const double lhs = static_cast<double>(k + 1) * (w.g[k + 1] - w.g[k]);
    w.max_condition_excess = std::max(w.max_condition_excess, lhs - 2.0 * w.g[k]);
  }
  w.condition_ok = w.max_condition_excess <= 0.0;
  return w;
}

SuperlinearWeights vallee_poussin_weights(std::span<const double> c, Index k_max) {
  const std::size_t n = c.size();
  std::vector<double> tail(n + 1, 0.0);  // C_{N+1} = 0 closes the sequence
  CompensatedSum s;
  for (std::size_t k = n; k-- > 0;) {
    s.add(static_cast<double>(k + 1) * c[k]);
    tail[k] = s.value();
  }
  SuperlinearWeights w = vallee_poussin_weights_from_tail(tail, k_max);
  CompensatedSum ws;
  for (std::size_t k = 0; k < n && k < w.g.size(); ++k) ws.add(w.g[k] * c[k]);
  w.weighted_sum = ws.value();
  return w;
}

nlohmann::json to_json(const SuperlinearWeights& w) {
  nlohmann::json j = {
      {"k_max", w.k_max()},
      {"condition_ok", w.condition_ok},
      {"max_condition_excess", w.max_condition_excess},
      {"breakpoints", w.ell},
      {"slopes", w.d_slopes},
  };
  if (w.weighted_sum) j["weighted_sum"] = *w.weighted_sum;
  return j;
}

}  // namespace edg
