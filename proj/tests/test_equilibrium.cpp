#include <doctest.h>

#include "edg/dynamics.h"
#include "edg/equilibrium.h"
#include "edg/error.h"
#include "fixtures.h"
#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

using namespace edg;

namespace {

const Kernel& linear_kernel() {
  static const Kernel k = kernel_from_spec({{"family", "separable"}, {"b", "k"}, {"a", "1"}});
  return k;
}

const ChemicalPotential& condensing_cp() {
  static const ChemicalPotential cp = compute_log_q(condensing_kernel(3.0));
  return cp;
}

const ChemicalPotential& constant_cp() {
  static const ChemicalPotential cp = compute_log_q(constant_kernel(), 100000);
  return cp;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::domain;
}

}  // namespace

TEST_SUITE("equilibrium") {

TEST_CASE("chemical potential of reference kernels") {
  const auto c = compute_log_q(constant_kernel(), 10);
  for (double lq : c.log_q) CHECK(lq == 0.0);
  CHECK(std::exp(compute_log_q(condensing_kernel(3.0), 10).log_q[3]) == doctest::Approx(3.2).epsilon(1e-14));
  CHECK(std::exp(compute_log_q(linear_kernel(), 10).log_q[4]) == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
}

TEST_CASE("log Q increments follow the kernel ratios") {
  const Kernel k = fixture::root_kernel();
  const auto cp = compute_log_q(k, 2000);
  const auto ref = oracle::log_q([&](std::int64_t a, std::int64_t b) { return k(a, b); }, 2000);
  CHECK(cp.log_q[0] == 0.0);
  for (Index l = 1; l <= 2000; ++l) {
    CHECK(cp.log_q[l] - cp.log_q[l - 1] ==
          doctest::Approx(std::log(k(1, l - 1)) - std::log(k(l, 0))).epsilon(1e-12));
    CHECK(cp.log_q[l] == doctest::Approx(static_cast<double>(ref[l])).epsilon(1e-11));
  }
}

TEST_CASE("zero rates are reported with their index") {
  const Kernel bd = kernel_from_spec({{"family", "general"}, {"expr", "(k-3)^2 + 0*j"}});
  CHECK(kind_of([&] { compute_log_q(bd, 10); }) == ErrorKind::zero_rate);
}

TEST_CASE("critical fugacity estimates") {
  CHECK(compute_log_q(constant_kernel(), 100).phi_c.value.value() == doctest::Approx(1.0).epsilon(1e-14));
  const PhiCEstimate cond = condensing_cp().phi_c;
  CHECK(cond.converged);
  CHECK(std::abs(cond.value.value() - 0.25) <= 1e-10);
  CHECK(compute_log_q(linear_kernel(), 100).phi_c.value.is_infinite());
  CHECK_THROWS_AS(estimate_phi_c(constant_kernel(), 8), Error);
}

TEST_CASE("partition sums") {
  CHECK(partition_sum(constant_cp(), 0.0).value == 1.0);
  CHECK(partition_sum(constant_cp(), 0.5).value == doctest::Approx(2.0).epsilon(1e-14));
  const auto ref = oracle::condensing_critical_series();
  const auto z = partition_sum(condensing_cp(), 0.25);
  CHECK(std::abs(z.value - static_cast<double>(ref.z)) <= 1e-9);
  CHECK(kind_of([] { partition_sum(constant_cp(), 1.5); }) == ErrorKind::divergent);
  CHECK(kind_of([] { partition_sum(constant_cp(), 1.0); }) == ErrorKind::divergent);
}

TEST_CASE("geometric tail bounds are rigorous below the critical fugacity") {
  const auto z = partition_sum(constant_cp(), 0.9);
  CHECK(z.tail == TailKind::rigorous);
  CHECK(std::abs(z.value - 10.0) <= std::max(z.tail_bound, 1e-12));
}

TEST_CASE("density of fugacity") {
  CHECK(density_of_phi(constant_cp(), 0.0) == 0.0);
  CHECK(density_of_phi(constant_cp(), 0.5) == doctest::Approx(1.0).epsilon(1e-14));
  const auto ref = oracle::condensing_critical_series();
  CHECK(std::abs(density_of_phi(condensing_cp(), 0.25) - static_cast<double>(ref.n / ref.z)) <= 1e-6);
}

TEST_CASE("density is strictly increasing below the critical fugacity") {
  for (const ChemicalPotential* cp : {&constant_cp(), &condensing_cp()}) {
    const double phi_c = cp->phi_c_value();
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
      const double phi = phi_c * i / 41.0;
      const double rho = density_of_phi(*cp, phi);
      CHECK(rho > prev);
      prev = rho;
    }
  }
}

TEST_CASE("critical density") {
  const auto ref = oracle::condensing_critical_series();
  const CriticalDensity rc = critical_density(condensing_cp());
  REQUIRE(rc.value.is_finite());
  CHECK(std::abs(rc.value.value() - static_cast<double>(ref.n / ref.z)) <= 1e-6);
  CHECK(rc.ladder.size() >= 10);
  CHECK(critical_density(constant_cp()).value.is_infinite());
  CHECK(critical_density(compute_log_q(linear_kernel(), 1000)).value.is_infinite());
}

TEST_CASE("fugacity for density") {
  CHECK(solve_phi_of_rho(constant_cp(), 0.0) == 0.0);
  CHECK(solve_phi_of_rho(constant_cp(), 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(solve_phi_of_rho(condensing_cp(), 1.0) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(solve_phi_of_rho(compute_log_q(linear_kernel(), 2000), 3.0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(kind_of([] { solve_phi_of_rho(condensing_cp(), 1.5); }) == ErrorKind::supercritical);
}

TEST_CASE("density round trip") {
  const ExtReal rc = critical_density(condensing_cp()).value;
  for (const ChemicalPotential* cp : {&constant_cp(), &condensing_cp()}) {
    const double top = std::min(critical_density(*cp).value.as_double(), 10.0);
    for (int i = 0; i <= 12; ++i) {
      const double rho = top * i / 12.0;
      const double phi = solve_phi_of_rho(*cp, rho, cp == &condensing_cp() ? std::optional(rc) : std::nullopt);
      CHECK(std::abs(density_of_phi(*cp, phi) - rho) <= 1e-9);
    }
  }
}

TEST_CASE("Q^(1/k) tends to the inverse critical fugacity") {
  const auto& cp = condensing_cp();
  const Index k = cp.k_max();
  CHECK(std::abs(std::exp(cp.log_q[k] / static_cast<double>(k)) * cp.phi_c_value() - 1.0) <= 0.05);
}

TEST_CASE("equilibrium profiles") {
  SUBCASE("zero fugacity is the vacuum") {
    const auto p = equilibrium_profile(constant_cp(), Fugacity{0.0}, 10);
    CHECK(p.omega[0] == 1.0);
    for (Index l = 1; l <= 10; ++l) CHECK(p.omega[l] == 0.0);
  }
  SUBCASE("constant kernel gives the geometric profile") {
    const auto p = equilibrium_profile(constant_cp(), Fugacity{0.5}, 60);
    for (Index l = 0; l <= 60; ++l) CHECK(p.omega[l] == doctest::Approx(std::ldexp(1.0, -int(l + 1))).epsilon(1e-13));
  }
  SUBCASE("condensing kernel at the critical fugacity") {
    const auto p = equilibrium_profile(condensing_cp(), Fugacity{0.25}, 100);
    CHECK(p.omega[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  }
  SUBCASE("normalization and closed form") {
    const auto& cp = condensing_cp();
    const auto p = equilibrium_profile(cp, Density{0.5}, 5000);
    double s = 0.0;
    for (double w : p.omega) s += w;
    CHECK(s <= 1.0 + 1e-14);
    CHECK(s >= 1.0 - p.truncation_tail_bound - 1e-14);
    for (Index l = 0; l <= 5000; l += 37) {
      CHECK(p.omega[l] == doctest::Approx(std::exp(l * std::log(p.phi) + cp.log_q[l] - p.log_z)).epsilon(1e-12));
    }
    CHECK(std::abs(p.density - 0.5) <= 1e-9);
  }
}

TEST_CASE("nonlinear rates balance at equilibrium") {
  const auto& cp = condensing_cp();
  const Index n = 400;
  const auto p = equilibrium_profile(cp, Density{0.5}, n);
  const RatesView r = birth_death_rates(condensing_kernel(3.0), p.omega, RatePath::generic);
  // Pairwise balance survives truncation, so the truncated rates balance too.
  for (Index k = 1; k <= n / 2; ++k) {
    const double fwd = r.a[k - 1] * p.omega[k - 1];
    const double bwd = r.b[k] * p.omega[k];
    CHECK(std::abs(fwd - bwd) <= 1e-10 * std::max(std::abs(fwd), 1e-300));
  }
}

TEST_CASE("engine is shareable across threads") {
  const EquilibriumEngine engine(condensing_kernel(3.0));
  std::vector<double> seen(4);
  std::vector<std::thread> pool;
  for (int i = 0; i < 4; ++i) pool.emplace_back([&, i] { seen[i] = engine.rho_c().value(); });
  for (auto& t : pool) t.join();
  for (double v : seen) CHECK(v == seen[0]);
}

TEST_CASE("summary and profile serialization") {
  const EquilibriumEngine engine(constant_kernel(), 10000);
  const auto p = engine.profile_for_density(1.0, 8);
  const auto j = summary_json(p, engine.rho_c(), engine.phi_c());
  CHECK(j.at("rho_c").at("kind") == "infinite");
  CHECK(ext_real_from_json(j.at("phi_c")).value() == 1.0);
  CHECK(j.at("phi").get<double>() == doctest::Approx(0.5));
  std::ostringstream csv;
  write_profile_csv(csv, p, engine.potential());
  const std::string text = csv.str();
  CHECK(text.rfind("l,omega_l,log_q_l\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
}

}  // TEST_SUITE
