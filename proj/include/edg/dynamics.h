#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "edg/equilibrium.h"
#include "edg/kernel.h"

namespace edg {

/// Truncated state c_0..c_N with cached zeroth and first moments.
class ConcentrationProfile {
 public:
  /// Throws Error(domain) on negative or non-finite entries or fewer than two entries.
  explicit ConcentrationProfile(std::vector<double> c);

  static ConcentrationProfile vacuum(Index n);
  /// (1 - rho/m) delta_0 + (rho/m) delta_m; requires ceil(rho) <= m <= n.
  static ConcentrationProfile monodisperse(Index n, double rho, Index m);
  /// (1-phi) phi^l on 0..n, renormalized to unit zeroth moment.
  static ConcentrationProfile geometric(Index n, double phi);
  static ConcentrationProfile from_equilibrium(const EquilibriumProfile& eq);

  const std::vector<double>& values() const { return c_; }
  double operator[](Index k) const { return c_[static_cast<std::size_t>(k)]; }
  Index n_trunc() const { return static_cast<Index>(c_.size()) - 1; }
  double zeroth_moment() const { return m0_; }
  double first_moment() const { return m1_; }

 private:
  std::vector<double> c_;
  double m0_ = 0.0;
  double m1_ = 0.0;
};

double zeroth_moment(std::span<const double> c);
double first_moment(std::span<const double> c);

/// a[k] = A_k for k = 0..N-1 and b[k] = B_k for k = 0..N with b[0] = 0.
struct RatesView {
  std::vector<double> a;
  std::vector<double> b;
};

enum class RatePath { automatic, generic, separable };

/// Direct evaluation of the birth and death rates. The separable path needs
/// an unmodulated separable kernel (Error(domain) otherwise).
RatesView birth_death_rates(const Kernel& kernel, std::span<const double> c,
                            RatePath path = RatePath::automatic);

/// J_k = A_k c_k - B_{k+1} c_{k+1} for k = 0..N-1.
std::vector<double> net_fluxes(const RatesView& rates, std::span<const double> c);

std::vector<double> rhs(const Kernel& kernel, std::span<const double> c,
                        RatePath path = RatePath::automatic);

/// Rates and right-hand side for a fixed truncation. Generic kernels are
/// tabulated once (up to N = 2048) so repeated evaluation does not go
/// through the kernel callable. Immutable after construction.
class RateEvaluator {
 public:
  RateEvaluator(const Kernel& kernel, Index n, RatePath path = RatePath::automatic);

  Index n_trunc() const { return n_; }
  bool separable() const { return separable_; }
  void rates(std::span<const double> c, RatesView& out) const;
  void rhs(std::span<const double> c, std::span<double> dc, RatesView& scratch) const;

 private:
  Kernel kernel_;
  Index n_;
  bool separable_ = false;
  std::vector<double> b_seq_, a_seq_;  // separable factors b_1..b_N (index 0 unused), a_0..a_{N-1}
  std::vector<double> table_;          // K(k, j) at (k-1)*N + j, k = 1..N, j = 0..N-1
};

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-12;
  double max_step = 0.0;      // 0 means unlimited
  double t_end = 1.0;
  double record_every = 0.0;  // 0 means record only t = 0 and t_end
  /// Value given to components of an accepted step that land in [-atol, 0).
  double positivity_floor = 0.0;
  bool keep_states = true;

  void validate() const;
};

nlohmann::json to_json(const IntegratorConfig& cfg);
IntegratorConfig integrator_config_from_json(const nlohmann::json& j, IntegratorConfig base = {});

struct StepResult {
  std::vector<double> state;
  double dt_used = 0.0;
  double dt_next = 0.0;
  double error_estimate = 0.0;
  double clamp_m0 = 0.0;  // number added by clamping: Sum (floor - c_k) over clamped k
  double clamp_m1 = 0.0;  // same, weighted by k
  int rejected = 0;
};

/// One accepted Dormand-Prince 5(4) step starting from `dt_suggest`.
StepResult step(const Kernel& kernel, std::span<const double> state, double dt_suggest,
                const IntegratorConfig& cfg, double t = 0.0);

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // empty when keep_states is false
  std::vector<double> m0, m1;               // moments per sample
  std::vector<double> drift_m0, drift_m1;   // moment minus initial moment
  std::vector<double> clamp_m0, clamp_m1;   // cumulative clamp deficit at the sample
  std::vector<double> boundary_mass;        // Sum_{k >= ceil(0.9 N)} k c_k
  std::vector<double> free_energy, dissipation;
  std::vector<Index> dissipation_infinite_terms;
  std::vector<double> final_state;
  bool boundary_warning = false;
  Index steps_accepted = 0;
  Index steps_rejected = 0;

  std::size_t size() const { return times.size(); }
};

using SampleHook = std::function<void(double t, std::span<const double> c, TrajectoryRecord& rec)>;

double boundary_mass(std::span<const double> c);

/// Adaptive integrator whose full state (including step-size controller
/// memory) can be checkpointed and resumed bit-identically.
class Integrator {
 public:
  Integrator(Kernel kernel, const ConcentrationProfile& state0, IntegratorConfig cfg);

  /// Rebuilds an integrator from `checkpoint()` output. The kernel is
  /// rebuilt from the stored spec unless one is supplied.
  static Integrator resume(const nlohmann::json& checkpoint,
                           std::optional<Kernel> kernel = std::nullopt);

  double time() const { return t_; }
  const std::vector<double>& state() const { return y_; }
  const IntegratorConfig& config() const { return cfg_; }
  IntegratorConfig& config() { return cfg_; }
  const Kernel& kernel() const { return kernel_; }
  double initial_m0() const { return m0_init_; }
  double initial_m1() const { return m1_init_; }
  double clamp_m0() const { return clamp_m0_; }
  double clamp_m1() const { return clamp_m1_; }
  Index steps_accepted() const { return accepted_; }
  Index steps_rejected() const { return rejected_; }

  /// Advances exactly to `t_target` (>= time()). Throws Error(step_underflow).
  void advance_to(double t_target);

  /// Runs to cfg.t_end, recording at multiples of record_every and at t_end.
  /// The current time is recorded first unless `skip_first` is set.
  TrajectoryRecord run(const SampleHook& hook = {}, bool skip_first = false);

  nlohmann::json checkpoint() const;

 private:
  struct StepInfo {
    double h = 0.0;
    double err = 0.0;
    int rejected = 0;
    double clamp_m0 = 0.0, clamp_m1 = 0.0;
  };
  // One accepted step that does not pass t_limit.
  StepInfo do_step(double t_limit);
  bool attempt(double h, double& err, double& h_new);
  void record(TrajectoryRecord& rec, const SampleHook& hook) const;
  double initial_step();

  Kernel kernel_;
  IntegratorConfig cfg_;
  RateEvaluator eval_;
  std::vector<double> y_;
  double t_ = 0.0;
  double h_next_ = 0.0;  // 0 means not yet chosen
  double facold_ = 1e-4;
  bool last_rejected_ = false;
  double m0_init_ = 0.0, m1_init_ = 0.0;
  double clamp_m0_ = 0.0, clamp_m1_ = 0.0;
  Index accepted_ = 0, rejected_ = 0;

  // Scratch, reused between steps.
  std::vector<std::vector<double>> k_;
  std::vector<double> ytmp_, ynew_;
  bool k1_valid_ = false;
  RatesView scratch_;

  friend StepResult step(const Kernel&, std::span<const double>, double, const IntegratorConfig&,
                         double);
};

TrajectoryRecord integrate(const Kernel& kernel, const ConcentrationProfile& state0,
                           const IntegratorConfig& cfg, const SampleHook& hook = {});

/// Largest |d/dt Sum g_k c_k - (moment identity right-hand side)| over the
/// recorded sample intervals; the derivative is a difference quotient and the
/// right-hand side is averaged over the interval endpoints.
/// Throws Error(insufficient_samples) with fewer than two stored states.
double moment_identity_check(const Kernel& kernel, const TrajectoryRecord& traj,
                             std::span<const double> g);

/// min over samples in [t0, t1] and all k of
/// c_k(t) - c_k(t0) exp(-C_K (2 rho + 1)(k + 1)(t - t0)).
double positivity_bound_check(const TrajectoryRecord& traj, double growth_constant, double rho,
                              double t0, double t1);

}  // namespace edg
