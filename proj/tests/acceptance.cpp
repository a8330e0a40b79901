// Acceptance suite: one PASS/FAIL line per criterion. With an argument only
// that criterion runs; the exit status is nonzero when a gating check fails.

#include "edg/diagnostics.h"
#include "edg/dynamics.h"
#include "edg/equilibrium.h"
#include "edg/kernel.h"
#include "edg/thermo.h"
#include "fixtures.h"
#include "oracles.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace edg;

namespace {

// Pinned tolerances.
constexpr double kMomentTol = 1e-9;
constexpr double kRuntimeConservation = 10.0;  // seconds
constexpr double kStrongTol = 1e-3;
constexpr double kFreeEnergyTol = 1e-4;
constexpr double kDissipationAbs = 1e-6;
constexpr double kDissipationRel = 1e-3;
constexpr double kFreeEnergySlack = 1e-10;
constexpr double kPhiCTol = 1e-10;
constexpr double kZTol = 1e-9;
constexpr double kRhoCTol = 1e-6;
constexpr double kLowBandTol = 5e-2;
constexpr double kExcessFraction = 0.7;
constexpr double kBoundaryTarget = 0.5;
constexpr double kSupercriticalHorizon = 1e5;
constexpr double kRuntimeSupercritical = 300.0;
constexpr double kGradientFlowTol = 1e-10;
constexpr double kSemigroupTol = 1e-6;
constexpr double kSeparableBdaTol = 1e-14;
constexpr double kAdditiveBdaTol = 1e-4;
constexpr double kStationarityTol = 1e-6;
constexpr double kPathAgreement = 1e-12;
constexpr double kSpeedup = 10.0;

struct Verdict {
  bool pass = false;
  std::string detail;
  bool gating = true;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> monomers(Index n) {
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[1] = 1.0;
  return c;
}

// Constant kernel from a monomer state, N = 256: the reference subcritical run.
TrajectoryRecord reference_run(double t_end, double every, const SampleHook& hook = {}) {
  IntegratorConfig cfg;
  cfg.t_end = t_end;
  cfg.record_every = every;
  return integrate(constant_kernel(), ConcentrationProfile(monomers(256)), cfg, hook);
}

std::vector<double> geometric_limit(Index n) {
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  for (Index l = 0; l <= n; ++l) w[l] = std::ldexp(1.0, -static_cast<int>(l + 1));
  return w;
}

Verdict conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rec = reference_run(50.0, 0.5);
  const double elapsed = seconds_since(t0);
  double d0 = 0.0, d1 = 0.0;
  for (const auto& c : rec.states) {
    long double m0 = 0, m1 = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      m0 += c[k];
      m1 += static_cast<long double>(k) * c[k];
    }
    d0 = std::max(d0, std::abs(double(m0 - 1)));
    d1 = std::max(d1, std::abs(double(m1 - 1)));
  }
  return {d0 <= kMomentTol && d1 <= kMomentTol && elapsed < kRuntimeConservation,
          fmt("samples=%zu max|M0-1|=%.3g max|M1-1|=%.3g runtime=%.3fs", rec.size(), d0, d1, elapsed)};
}

Verdict subcritical_convergence() {
  const auto rec = reference_run(200.0, 0.5);
  const auto limit = geometric_limit(256);
  std::vector<double> dist;
  for (const auto& c : rec.states) dist.push_back(strong_norm_distance(c, limit));
  const bool monotone = eventually_nonincreasing(dist, 0.25);
  const ChemicalPotential cp = compute_log_q(constant_kernel(), 256);
  const double f = free_energy(rec.final_state, cp);
  const double f_ref = static_cast<double>(oracle::geometric_entropy(0.5L));
  const bool ok = dist.back() <= kStrongTol && monotone && std::abs(f - f_ref) <= kFreeEnergyTol;
  return {ok, fmt("strong_d(t=200)=%.3g monotone_last_quarter=%s F=%.12f target=%.12f", dist.back(),
                  monotone ? "yes" : "no", f, f_ref)};
}

Verdict dissipation_balance() {
  const Kernel k = constant_kernel();
  const ChemicalPotential cp = compute_log_q(k, 256);
  const SampleHook hook = make_thermo_hook(k, cp);
  // Fine sampling while the free energy moves fast, coarse afterwards.
  IntegratorConfig cfg;
  cfg.t_end = 10.0;
  cfg.record_every = 0.01;
  cfg.keep_states = false;
  Integrator integ(k, ConcentrationProfile(monomers(256)), cfg);
  TrajectoryRecord rec = integ.run(hook);
  integ.config().t_end = 200.0;
  integ.config().record_every = 0.5;
  const TrajectoryRecord late = integ.run(hook, true);
  for (std::size_t i = 0; i < late.size(); ++i) {
    rec.times.push_back(late.times[i]);
    rec.free_energy.push_back(late.free_energy[i]);
    rec.dissipation.push_back(late.dissipation[i]);
    rec.dissipation_infinite_terms.push_back(late.dissipation_infinite_terms[i]);
  }

  // Centred difference of F across i-1, i+1 against D at the midpoint sample i.
  double worst_ratio = 0.0, worst_increase = -INFINITY;
  std::size_t checked = 0;
  for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
    worst_increase = std::max(worst_increase, rec.free_energy[i] - rec.free_energy[i - 1]);
    if (rec.dissipation_infinite_terms[i - 1] || rec.dissipation_infinite_terms[i] ||
        rec.dissipation_infinite_terms[i + 1])
      continue;
    const double h1 = rec.times[i] - rec.times[i - 1], h2 = rec.times[i + 1] - rec.times[i];
    if (std::abs(h1 - h2) > 1e-9 * h1) continue;  // the cadence changes at t = 10
    const double slope = (rec.free_energy[i + 1] - rec.free_energy[i - 1]) / (h1 + h2);
    const double d = rec.dissipation[i];
    const double allowed = std::max(kDissipationAbs, kDissipationRel * d);
    worst_ratio = std::max(worst_ratio, std::abs(slope + d) / allowed);
    ++checked;
  }
  worst_increase = std::max(worst_increase, rec.free_energy.back() - rec.free_energy[rec.size() - 2]);
  const bool ok = checked > 100 && worst_ratio <= 1.0 && worst_increase <= kFreeEnergySlack;
  return {ok, fmt("interior midpoints=%zu worst |dF/dt+D|/allowed=%.3g max F increase=%.3g", checked, worst_ratio,
                  worst_increase)};
}

Verdict critical_constants() {
  const ChemicalPotential cp = compute_log_q(condensing_kernel(3.0));
  const auto ref = oracle::condensing_critical_series();
  const double phi_c_ref = 1.0 / (1.0 + 3.0);  // limit of (1 + 3/k) / 4
  const double phi_c = cp.phi_c.value.as_double();
  const double z = partition_sum(cp, phi_c).value;
  const CriticalDensity rc = critical_density(cp);
  const double rho_c = rc.value.as_double();
  const double rho_ref = static_cast<double>(ref.n / ref.z);
  const bool ok = std::abs(phi_c - phi_c_ref) <= kPhiCTol && std::abs(z - double(ref.z)) <= kZTol &&
                  std::abs(rho_c - rho_ref) <= kRhoCTol;
  return {ok, fmt("phi_c=%.15g Z=%.15g (oracle %.15g) rho_c=%.15g (oracle %.15g, %s)", phi_c, z, double(ref.z),
                  rho_c, rho_ref, rc.method.c_str())};
}

Verdict supercritical() {
  const auto t0 = std::chrono::steady_clock::now();
  const Kernel k = condensing_kernel(3.0);
  const Index n = 512;
  const double rho = 2.0;
  const EquilibriumEngine engine(k);
  const double rho_c = engine.rho_c().value();
  const auto critical = engine.profile_for_fugacity(engine.phi_c().value(), n);

  IntegratorConfig cfg;
  cfg.t_end = kSupercriticalHorizon;
  Integrator integ(k, ConcentrationProfile::monodisperse(n, rho, 4), cfg);
  // Run until the boundary mass passes the target, or the horizon.
  double t = 0.0, bmass = 0.0;
  for (double next = 10.0; t < kSupercriticalHorizon && bmass <= kBoundaryTarget; next *= 1.25) {
    t = std::min(next, kSupercriticalHorizon);
    integ.advance_to(t);
    bmass = boundary_mass(integ.state());
  }
  const auto& c = integ.state();
  double low = 0.0;
  for (Index j = 0; j <= 10; ++j) low = std::max(low, std::abs(c[j] - critical.omega[j]));
  const double m1 = first_moment(c);
  const Index band = static_cast<Index>(std::ceil(n / 10.0));
  const double excess = tail_mass(c, band);
  const double elapsed = seconds_since(t0);
  const bool low_ok = low <= kLowBandTol;
  const bool mass_ok = std::abs(m1 - rho) <= kMomentTol;
  const bool excess_ok = excess >= kExcessFraction * (rho - rho_c);
  const bool boundary_ok = bmass > kBoundaryTarget;
  const bool time_ok = elapsed < kRuntimeSupercritical;
  return {low_ok && mass_ok && excess_ok && boundary_ok && time_ok,
          fmt("t_end=%.6g boundary_mass=%.4f (>%.1f: %s) max_{k<=10}|c-w|=%.3g |M1-2|=%.3g excess(k>=%lld)=%.4f "
              "runtime=%.1fs",
              t, bmass, kBoundaryTarget, boundary_ok ? "yes" : "no", low, std::abs(m1 - rho),
              static_cast<long long>(band), excess, elapsed)};
}

Verdict gradient_flow() {
  const Kernel kernels[] = {condensing_kernel(3.0),
                            fixture::power_kernel()};
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  for (const auto& k : kernels) {
    const ChemicalPotential cp = compute_log_q(k, 1000);
    for (int i = 0; i < 100; ++i) {
      const auto c = oracle::random_positive_state(rng, 50);
      worst = std::max(worst, gradient_flow_residual(k, c, cp));
    }
  }
  return {worst <= kGradientFlowTol, fmt("200 states, max residual=%.3g", worst)};
}

Verdict semigroup() {
  const auto two = reference_run(2.0, 0.0).final_state;
  IntegratorConfig cfg;
  cfg.t_end = 1.0;
  const auto one = integrate(constant_kernel(), ConcentrationProfile(monomers(256)), cfg).final_state;
  const auto again = integrate(constant_kernel(), ConcentrationProfile(one), cfg).final_state;
  const double gap = strong_norm_distance(two, again);
  return {gap <= kSemigroupTol, fmt("strong gap=%.3g", gap)};
}

Verdict detailed_balance_audit() {
  const Kernel separable[] = {constant_kernel(), condensing_kernel(3.0),
                              fixture::power_kernel()};
  double worst = 0.0;
  for (const auto& k : separable) worst = std::max(worst, audit_assumptions(k, 100, 100).bda_max_residual);
  const Kernel additive = kernel_from_spec({{"family", "general"}, {"expr", "k + 2*(j+1)"}});
  const oracle::Rate K = [](std::int64_t a, std::int64_t b) { return double(a) + 2.0 * double(b + 1); };
  const double expected = std::abs(std::log(K(2, 2)) + std::log(K(1, 1)) + std::log(K(3, 0)) - std::log(K(3, 1)) -
                                   std::log(K(1, 2)) - std::log(K(2, 0)));
  const double got = bda_residual(additive, 2, 3).value_or(NAN);
  const bool ok = worst <= kSeparableBdaTol && std::abs(got - expected) <= kAdditiveBdaTol;
  return {ok, fmt("separable max residual=%.3g additive residual(2,3)=%.6f oracle=%.6f", worst, got, expected)};
}

Verdict stationarity() {
  const Kernel k = condensing_kernel(3.0);
  const ChemicalPotential cp = compute_log_q(k);
  const auto eq = equilibrium_profile(cp, Density{0.5}, 256);
  IntegratorConfig cfg;
  cfg.t_end = 10.0;
  const auto rec = integrate(k, ConcentrationProfile(eq.omega), cfg);
  const double d = weak_distance(rec.final_state, eq.omega);
  return {d <= kStationarityTol, fmt("weak distance after t=10: %.3g", d)};
}

Verdict positivity() {
  const auto rec = reference_run(200.0, 0.05);
  const double margin = positivity_bound_check(rec, 1.0, 1.0, 1.0, 2.0);
  return {margin >= 0.0, fmt("worst margin on [1,2]=%.3g", margin)};
}

Verdict weights() {
  const ConcentrationProfile inputs[] = {ConcentrationProfile(monomers(256)), ConcentrationProfile::geometric(256, 0.5)};
  const char* names[] = {"delta_1", "geometric(0.5)"};
  const Index k_max = 10000;
  double worst_excess = -INFINITY;
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 2; ++i) {
    const auto w = vallee_poussin_weights(inputs[i].values(), k_max);
    // The ratio is checked from k = 0; the slope part Phi_k = (g_k - 1)/(k+1) is reported alongside.
    std::vector<long long> drops;
    bool phi_ok = true;
    for (Index k = 0; k < w.k_max(); ++k) {
      worst_excess = std::max(worst_excess, double(k + 1) * (w.g[k + 1] - w.g[k]) - 2.0 * w.g[k]);
      if (w.g[k + 1] / double(k + 2) < w.g[k] / double(k + 1)) drops.push_back(k);
      if (w.phi[k + 1] < w.phi[k]) phi_ok = false;
    }
    ok = ok && drops.empty() && w.k_max() == k_max;
    std::string where;
    for (std::size_t j = 0; j < std::min<std::size_t>(drops.size(), 3); ++j)
      where += fmt("%s%lld", j ? "," : "", drops[j]);
    detail += fmt("%s: g/(k+1) drops=%zu%s%s%s Phi nondecreasing=%s; ", names[i], drops.size(),
                  drops.empty() ? "" : " at k=", where.c_str(), drops.empty() ? "" : fmt(" (g_0=%.4g g_1=%.4g)", w.g[0], w.g[1]).c_str(),
                  phi_ok ? "yes" : "no");
  }
  ok = ok && worst_excess <= 0.0;
  return {ok, detail + fmt("max (k+1)(g_{k+1}-g_k)-2g_k=%.3g", worst_excess)};
}

Verdict performance() {
  const Kernel k = condensing_kernel(3.0);
  std::mt19937_64 rng(4096);
  const auto c = oracle::random_positive_state(rng, 4096);
  auto time_it = [&](RatePath path, int reps, std::vector<double>& out) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) out = rhs(k, c, path);
    return seconds_since(t0) / reps;
  };
  std::vector<double> fast, slow;
  const double t_slow = time_it(RatePath::generic, 3, slow);
  const double t_fast = time_it(RatePath::separable, 200, fast);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    diff = std::max(diff, std::abs(fast[i] - slow[i]));
    scale = std::max(scale, std::abs(slow[i]));
  }
  const double rel = diff / scale;
  const double speedup = t_slow / t_fast;
  Verdict v{rel <= kPathAgreement, fmt("relative gap=%.3g speedup=%.0fx (soft target %.0fx: %s)", rel, speedup,
                                        kSpeedup, speedup >= kSpeedup ? "met" : "missed")};
  if (speedup < kSpeedup) v.detail += " [reported, not gating]";
  return v;
}

struct Criterion {
  const char* name;
  std::function<Verdict()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"conservation", conservation},
      {"subcritical convergence", subcritical_convergence},
      {"free-energy dissipation", dissipation_balance},
      {"critical constants", critical_constants},
      {"supercritical behaviour", supercritical},
      {"gradient-flow identity", gradient_flow},
      {"semigroup", semigroup},
      {"detailed-balance audit", detailed_balance_audit},
      {"equilibrium stationarity", stationarity},
      {"positivity lower bound", positivity},
      {"superlinear weights", weights},
      {"separable fast path", performance},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  const auto& list = criteria();
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(list.size())) {
      std::fprintf(stderr, "unknown criterion '%s' (1..%zu)\n", argv[i], list.size());
      return 64;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int n = 1; n <= static_cast<int>(list.size()); ++n) selected.push_back(n);

  int failures = 0;
  for (int n : selected) {
    const auto& c = list[static_cast<std::size_t>(n - 1)];
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", n, c.name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass && v.gating) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
