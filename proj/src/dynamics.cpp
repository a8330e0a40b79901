#include "edg/dynamics.h"
#include "edg/error.h"

#include <cmath>
#include <limits>

namespace edg {

double zeroth_moment(std::span<const double> c) { return compensated_sum(c); }

double first_moment(std::span<const double> c) {
  CompensatedSum s;
  for (std::size_t k = 1; k < c.size(); ++k) s.add(static_cast<double>(k) * c[k]);
  return s.value();
}

ConcentrationProfile::ConcentrationProfile(std::vector<double> c) : c_(std::move(c)) {
  if (c_.size() < 2) throw Error(ErrorKind::domain, "a profile needs N >= 1 (at least c_0, c_1)");
  for (std::size_t k = 0; k < c_.size(); ++k) {
    if (!(c_[k] >= 0.0) || !std::isfinite(c_[k])) {
      throw Error(ErrorKind::domain,
                  "concentration c_" + std::to_string(k) + " = " + format_double(c_[k]) + " is not >= 0");
    }
  }
  m0_ = edg::zeroth_moment(c_);
  m1_ = edg::first_moment(c_);
}

ConcentrationProfile ConcentrationProfile::vacuum(Index n) {
  std::vector<double> c(static_cast<std::size_t>(std::max<Index>(n, 1)) + 1, 0.0);
  c[0] = 1.0;
  return ConcentrationProfile(std::move(c));
}

ConcentrationProfile ConcentrationProfile::monodisperse(Index n, double rho, Index m) {
  if (!(rho >= 0.0)) throw Error(ErrorKind::domain, "monodisperse start needs rho >= 0");
  if (static_cast<double>(m) < std::ceil(rho) || m < 1 || m > n) {
    throw Error(ErrorKind::domain, "monodisperse start needs ceil(rho) <= m <= N (rho=" +
                                       format_double(rho) + ", m=" + std::to_string(m) +
                                       ", N=" + std::to_string(n) + ")");
  }
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[m] = rho / static_cast<double>(m);
  c[0] = 1.0 - c[m];
  return ConcentrationProfile(std::move(c));
}

ConcentrationProfile ConcentrationProfile::geometric(Index n, double phi) {
  if (!(phi >= 0.0) || !(phi < 1.0)) throw Error(ErrorKind::domain, "geometric start needs 0 <= phi < 1");
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  double w = 1.0 - phi;
  for (auto& x : c) {
    x = w;
    w *= phi;
  }
  const double total = compensated_sum(c);
  for (auto& x : c) x /= total;
  return ConcentrationProfile(std::move(c));
}

ConcentrationProfile ConcentrationProfile::from_equilibrium(const EquilibriumProfile& eq) {
  return ConcentrationProfile(eq.omega);
}

RatesView birth_death_rates(const Kernel& kernel, std::span<const double> c, RatePath path) {
  const Index n = static_cast<Index>(c.size()) - 1;
  if (n < 1) throw Error(ErrorKind::domain, "rates need N >= 1");
  RatesView r;
  r.a.assign(static_cast<std::size_t>(n), 0.0);
  r.b.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (path == RatePath::separable && !kernel.has_fast_path()) {
    throw Error(ErrorKind::domain, "separable rate path requested for a non-separable kernel");
  }
  const bool fast = path == RatePath::separable || (path == RatePath::automatic && kernel.has_fast_path());
  if (fast) {
    const auto& parts = *kernel.separable_parts();
    double sb = 0.0, sa = 0.0;
    for (Index l = 1; l <= n; ++l) sb += parts.b(l) * c[l];
    for (Index l = 0; l < n; ++l) sa += parts.a(l) * c[l];
    for (Index j = 0; j < n; ++j) r.a[j] = parts.a(j) * sb;
    for (Index k = 1; k <= n; ++k) r.b[k] = parts.b(k) * sa;
    return r;
  }
  for (Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Index l = 1; l <= n; ++l) s += kernel(l, j) * c[l];
    r.a[j] = s;
  }
  for (Index k = 1; k <= n; ++k) {
    double s = 0.0;
    for (Index l = 0; l < n; ++l) s += kernel(k, l) * c[l];
    r.b[k] = s;
  }
  return r;
}

std::vector<double> net_fluxes(const RatesView& rates, std::span<const double> c) {
  const std::size_t n = c.size() - 1;
  if (rates.a.size() != n || rates.b.size() != n + 1) {
    throw Error(ErrorKind::domain, "rates and state have different truncations");
  }
  std::vector<double> j(n);
  for (std::size_t k = 0; k < n; ++k) j[k] = rates.a[k] * c[k] - rates.b[k + 1] * c[k + 1];
  return j;
}

namespace {

void fluxes_to_rhs(const RatesView& r, std::span<const double> c, std::span<double> dc) {
  const std::size_t n = c.size() - 1;
  double left = 0.0;  // J_{k-1}, with J_{-1} = 0
  for (std::size_t k = 0; k < n; ++k) {
    const double jk = r.a[k] * c[k] - r.b[k + 1] * c[k + 1];
    dc[k] = left - jk;
    left = jk;
  }
  dc[n] = left;  // J_N = 0
}

}  // namespace

std::vector<double> rhs(const Kernel& kernel, std::span<const double> c, RatePath path) {
  const RatesView r = birth_death_rates(kernel, c, path);
  std::vector<double> dc(c.size());
  fluxes_to_rhs(r, c, dc);
  return dc;
}

RateEvaluator::RateEvaluator(const Kernel& kernel, Index n, RatePath path) : kernel_(kernel), n_(n) {
  if (n < 1) throw Error(ErrorKind::domain, "RateEvaluator needs N >= 1");
  if (path == RatePath::separable && !kernel.has_fast_path()) {
    throw Error(ErrorKind::domain, "separable rate path requested for a non-separable kernel");
  }
  separable_ = path == RatePath::separable || (path == RatePath::automatic && kernel.has_fast_path());
  if (separable_) {
    const auto& parts = *kernel.separable_parts();
    b_seq_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    a_seq_.assign(static_cast<std::size_t>(n), 0.0);
    for (Index k = 1; k <= n; ++k) b_seq_[k] = parts.b(k);
    for (Index j = 0; j < n; ++j) a_seq_[j] = parts.a(j);
  } else if (n <= 2048) {
    table_.resize(static_cast<std::size_t>(n * n));
    for (Index k = 1; k <= n; ++k) {
      for (Index j = 0; j < n; ++j) table_[(k - 1) * n + j] = kernel(k, j);
    }
  }
}

void RateEvaluator::rates(std::span<const double> c, RatesView& r) const {
  const Index n = n_;
  r.a.assign(static_cast<std::size_t>(n), 0.0);
  r.b.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (separable_) {
    double sb = 0.0, sa = 0.0;
    for (Index l = 1; l <= n; ++l) sb += b_seq_[l] * c[l];
    for (Index l = 0; l < n; ++l) sa += a_seq_[l] * c[l];
    for (Index j = 0; j < n; ++j) r.a[j] = a_seq_[j] * sb;
    for (Index k = 1; k <= n; ++k) r.b[k] = b_seq_[k] * sa;
    return;
  }
  if (!table_.empty()) {
    // Row k of the table feeds B_k (dot with c) and, scaled by c_k, every A_j.
    for (Index k = 1; k <= n; ++k) {
      const double* row = &table_[(k - 1) * n];
      const double ck = c[k];
      double bk = 0.0;
      for (Index j = 0; j < n; ++j) {
        bk += row[j] * c[j];
        r.a[j] += row[j] * ck;
      }
      r.b[k] = bk;
    }
    return;
  }
  for (Index k = 1; k <= n; ++k) {
    const double ck = c[k];
    double bk = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double v = kernel_(k, j);
      bk += v * c[j];
      r.a[j] += v * ck;
    }
    r.b[k] = bk;
  }
}

void RateEvaluator::rhs(std::span<const double> c, std::span<double> dc, RatesView& scratch) const {
  rates(c, scratch);
  fluxes_to_rhs(scratch, c, dc);
}

double boundary_mass(std::span<const double> c) {
  const Index n = static_cast<Index>(c.size()) - 1;
  const Index start = static_cast<Index>(std::ceil(0.9 * static_cast<double>(n)));
  CompensatedSum s;
  for (Index k = std::max<Index>(start, 1); k <= n; ++k) s.add(static_cast<double>(k) * c[k]);
  return s.value();
}

double moment_identity_check(const Kernel& kernel, const TrajectoryRecord& traj,
                             std::span<const double> g) {
  if (traj.states.size() < 2) {
    throw Error(ErrorKind::insufficient_samples, "moment identity check needs two stored states");
  }
  const std::size_t n = traj.states.front().size() - 1;
  if (g.size() < n + 1) throw Error(ErrorKind::domain, "test sequence shorter than N+1");
  const RateEvaluator eval(kernel, static_cast<Index>(n));
  RatesView r;

  auto pairing = [&](const std::vector<double>& c) {
    CompensatedSum s;
    for (std::size_t k = 0; k <= n; ++k) s.add(g[k] * c[k]);
    return s.value();
  };
  auto identity_rhs = [&](const std::vector<double>& c) {
    eval.rates(c, r);
    CompensatedSum s;
    for (std::size_t k = 1; k <= n; ++k) s.add(-(g[k] - g[k - 1]) * r.b[k] * c[k]);
    for (std::size_t k = 0; k < n; ++k) s.add((g[k + 1] - g[k]) * r.a[k] * c[k]);
    return s.value();
  };

  double worst = 0.0;
  double rhs_prev = identity_rhs(traj.states[0]);
  double g_prev = pairing(traj.states[0]);
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    const double rhs_next = identity_rhs(traj.states[i]);
    const double g_next = pairing(traj.states[i]);
    const double dt = traj.times[i] - traj.times[i - 1];
    const double lhs = (g_next - g_prev) / dt;
    worst = std::max(worst, std::abs(lhs - 0.5 * (rhs_prev + rhs_next)));
    rhs_prev = rhs_next;
    g_prev = g_next;
  }
  return worst;
}

double positivity_bound_check(const TrajectoryRecord& traj, double growth_constant, double rho,
                              double t0, double t1) {
  if (!(t0 < t1)) throw Error(ErrorKind::domain, "positivity check needs t0 < t1");
  if (traj.states.size() != traj.times.size()) {
    throw Error(ErrorKind::insufficient_samples, "positivity check needs stored states");
  }
  auto find = [&](double t) -> std::size_t {
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      if (std::abs(traj.times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
    }
    throw Error(ErrorKind::domain, "time " + format_double(t) + " is not a recorded sample");
  };
  const std::size_t i0 = find(t0);
  find(t1);
  const auto& base = traj.states[i0];
  const double rate = growth_constant * (2.0 * rho + 1.0);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = i0; i < traj.times.size() && traj.times[i] <= t1 * (1 + 1e-15); ++i) {
    const double dt = traj.times[i] - traj.times[i0];
    const auto& c = traj.states[i];
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double bound = base[k] * std::exp(-rate * static_cast<double>(k + 1) * dt);
      margin = std::min(margin, c[k] - bound);
    }
  }
  return margin;
}

}  // namespace edg
