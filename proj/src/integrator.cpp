#include "edg/dynamics.h"
#include "edg/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edg {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// PI controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo1 = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kShrinkMax = 5.0;   // h_new >= h / 5
constexpr double kGrowMax = 0.1;     // h_new <= h / 0.1

double underflow_limit(double t) { return 1e-14 * std::max(1.0, std::abs(t)); }

}  // namespace

void IntegratorConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!positive(rtol) || !positive(atol)) throw Error(ErrorKind::config, "rtol and atol must be > 0");
  if (!nonneg(t_end)) throw Error(ErrorKind::config, "t_end must be >= 0");
  if (!nonneg(max_step) || !nonneg(record_every)) {
    throw Error(ErrorKind::config, "max_step and record_every must be >= 0");
  }
  if (!nonneg(positivity_floor)) throw Error(ErrorKind::config, "positivity_floor must be >= 0");
}

nlohmann::json to_json(const IntegratorConfig& cfg) {
  return {{"rtol", cfg.rtol},
          {"atol", cfg.atol},
          {"max_step", cfg.max_step},
          {"t_end", cfg.t_end},
          {"record_every", cfg.record_every},
          {"positivity_floor", cfg.positivity_floor},
          {"keep_states", cfg.keep_states}};
}

IntegratorConfig integrator_config_from_json(const nlohmann::json& j, IntegratorConfig cfg) {
  if (!j.is_object()) throw Error(ErrorKind::config, "integrator config must be an object");
  auto num = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw Error(ErrorKind::config, std::string(key) + " must be a number");
    dst = j.at(key).get<double>();
  };
  num("rtol", cfg.rtol);
  num("atol", cfg.atol);
  num("max_step", cfg.max_step);
  num("t_end", cfg.t_end);
  num("record_every", cfg.record_every);
  num("positivity_floor", cfg.positivity_floor);
  if (j.contains("keep_states")) cfg.keep_states = j.at("keep_states").get<bool>();
  cfg.validate();
  return cfg;
}

Integrator::Integrator(Kernel kernel, const ConcentrationProfile& state0, IntegratorConfig cfg)
    : kernel_(std::move(kernel)),
      cfg_(cfg),
      eval_(kernel_, state0.n_trunc()),
      y_(state0.values()),
      m0_init_(state0.zeroth_moment()),
      m1_init_(state0.first_moment()) {
  cfg_.validate();
  const std::size_t n = y_.size();
  k_.assign(7, std::vector<double>(n, 0.0));
  ytmp_.assign(n, 0.0);
  ynew_.assign(n, 0.0);
}

double Integrator::initial_step() {
  // Hairer's starting-step heuristic, in the max norm.
  const std::size_t n = y_.size();
  std::vector<double> f0(n), f1(n), y1(n);
  eval_.rhs(y_, f0, scratch_);
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = cfg_.atol + cfg_.rtol * std::abs(y_[i]);
    dnf = std::max(dnf, std::abs(f0[i]) / sk);
    dny = std::max(dny, std::abs(y_[i]) / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
  if (cfg_.max_step > 0.0) h = std::min(h, cfg_.max_step);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y_[i] + h * f0[i];
  eval_.rhs(y1, f1, scratch_);
  double der2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = cfg_.atol + cfg_.rtol * std::abs(y_[i]);
    der2 = std::max(der2, std::abs(f1[i] - f0[i]) / sk);
  }
  der2 /= h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  h = std::min(100.0 * h, h1);
  if (cfg_.max_step > 0.0) h = std::min(h, cfg_.max_step);
  return h;
}

bool Integrator::attempt(double h, double& err, double& h_new) {
  const std::size_t n = y_.size();
  auto& k1 = k_[0];
  auto& k2 = k_[1];
  auto& k3 = k_[2];
  auto& k4 = k_[3];
  auto& k5 = k_[4];
  auto& k6 = k_[5];
  auto& k7 = k_[6];
  if (!k1_valid_) {
    eval_.rhs(y_, k1, scratch_);
    k1_valid_ = true;
  }
  for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * a21 * k1[i];
  eval_.rhs(ytmp_, k2, scratch_);
  for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * (a31 * k1[i] + a32 * k2[i]);
  eval_.rhs(ytmp_, k3, scratch_);
  for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  eval_.rhs(ytmp_, k4, scratch_);
  for (std::size_t i = 0; i < n; ++i) {
    ytmp_[i] = y_[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  }
  eval_.rhs(ytmp_, k5, scratch_);
  for (std::size_t i = 0; i < n; ++i) {
    ytmp_[i] = y_[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  }
  eval_.rhs(ytmp_, k6, scratch_);
  for (std::size_t i = 0; i < n; ++i) {
    ynew_[i] = y_[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
  }
  eval_.rhs(ynew_, k7, scratch_);

  err = 0.0;
  double lowest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e =
        h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double sk = cfg_.atol + cfg_.rtol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
    err = std::max(err, std::abs(e) / sk);
    lowest = std::min(lowest, ynew_[i]);
  }
  if (!std::isfinite(err)) err = std::numeric_limits<double>::max();

  const double fac11 = std::pow(err, kExpo1);
  if (err <= 1.0 && lowest >= -cfg_.atol) {
    double fac = fac11 / std::pow(facold_, kBeta);
    fac = std::max(kGrowMax, std::min(kShrinkMax, fac / kSafe));
    h_new = h / fac;
    facold_ = std::max(err, 1e-4);
    if (last_rejected_) h_new = std::min(h_new, h);
    last_rejected_ = false;
    return true;
  }
  if (err <= 1.0) {
    h_new = 0.5 * h;  // accurate but leaves the positive cone
  } else {
    h_new = h / std::min(kShrinkMax, fac11 / kSafe);
  }
  last_rejected_ = true;
  return false;
}

Integrator::StepInfo Integrator::do_step(double t_limit) {
  if (h_next_ <= 0.0) h_next_ = initial_step();
  double h_pref = h_next_;
  if (cfg_.max_step > 0.0) h_pref = std::min(h_pref, cfg_.max_step);
  StepInfo info;
  double h = h_pref;
  bool clipped = false;
  if (std::isfinite(t_limit) &&
      (t_ + h >= t_limit || t_limit - (t_ + h) <= underflow_limit(t_limit))) {
    h = t_limit - t_;
    clipped = true;
  }
  for (;;) {
    if (!(h >= underflow_limit(t_))) {
      throw Error(ErrorKind::step_underflow,
                  "step size " + format_double(h) + " at t=" + format_double(t_));
    }
    double err = 0.0, h_new = 0.0;
    if (attempt(h, err, h_new)) {
      info.h = h;
      info.err = err;
      const double t_new = clipped ? t_limit : t_ + h;
      for (std::size_t i = 0; i < ynew_.size(); ++i) {
        if (ynew_[i] < 0.0) {
          const double d = cfg_.positivity_floor - ynew_[i];
          info.clamp_m0 += d;
          info.clamp_m1 += static_cast<double>(i) * d;
          ynew_[i] = cfg_.positivity_floor;
        }
      }
      y_.swap(ynew_);
      k1_valid_ = false;
      t_ = t_new;
      // A step shortened to land on a sample time says nothing about the
      // step size the solution supports, so keep the longer preference.
      h_next_ = clipped ? std::max(h_new, h_pref) : h_new;
      clamp_m0_ += info.clamp_m0;
      clamp_m1_ += info.clamp_m1;
      ++accepted_;
      return info;
    }
    ++info.rejected;
    ++rejected_;
    h = h_new;
    clipped = false;
    if (std::isfinite(t_limit) && t_ + h >= t_limit) {
      h = t_limit - t_;
      clipped = true;
    }
  }
}

void Integrator::advance_to(double t_target) {
  if (t_target < t_) throw Error(ErrorKind::domain, "cannot integrate backwards");
  while (t_ < t_target) do_step(t_target);
}

void Integrator::record(TrajectoryRecord& rec, const SampleHook& hook) const {
  rec.times.push_back(t_);
  if (cfg_.keep_states) rec.states.push_back(y_);
  const double m0 = zeroth_moment(y_);
  const double m1 = first_moment(y_);
  rec.m0.push_back(m0);
  rec.m1.push_back(m1);
  rec.drift_m0.push_back(m0 - m0_init_);
  rec.drift_m1.push_back(m1 - m1_init_);
  rec.clamp_m0.push_back(clamp_m0_);
  rec.clamp_m1.push_back(clamp_m1_);
  const double bm = boundary_mass(y_);
  rec.boundary_mass.push_back(bm);
  if (bm > 0.01 * m1_init_) rec.boundary_warning = true;
  if (hook) hook(t_, y_, rec);
}

TrajectoryRecord Integrator::run(const SampleHook& hook, bool skip_first) {
  TrajectoryRecord rec;
  const double t_end = cfg_.t_end;
  if (t_ >= t_end && t_end == 0.0) {
    rec.final_state = y_;
    return rec;
  }
  if (!skip_first) record(rec, hook);
  const double every = cfg_.record_every;
  while (t_ < t_end) {
    double target = t_end;
    if (every > 0.0) {
      const double idx = std::floor(t_ / every + 1e-9) + 1.0;
      target = std::min(t_end, idx * every);
    }
    advance_to(target);
    record(rec, hook);
  }
  rec.final_state = y_;
  rec.steps_accepted = accepted_;
  rec.steps_rejected = rejected_;
  return rec;
}

nlohmann::json Integrator::checkpoint() const {
  return {{"format", "edg-checkpoint-1"},
          {"t", t_},
          {"N", static_cast<Index>(y_.size()) - 1},
          {"c", y_},
          {"kernel_spec", kernel_.spec()},
          {"cfg", to_json(cfg_)},
          {"stepper",
           {{"h_next", h_next_},
            {"facold", facold_},
            {"last_rejected", last_rejected_},
            {"steps_accepted", accepted_},
            {"steps_rejected", rejected_}}},
          {"ledger",
           {{"m0_initial", m0_init_},
            {"m1_initial", m1_init_},
            {"clamp_m0", clamp_m0_},
            {"clamp_m1", clamp_m1_}}}};
}

Integrator Integrator::resume(const nlohmann::json& cp, std::optional<Kernel> kernel) {
  try {
    if (cp.value("format", "") != "edg-checkpoint-1") {
      throw Error(ErrorKind::config, "not a checkpoint document");
    }
    if (!kernel) {
      const auto& spec = cp.at("kernel_spec");
      if (!spec.is_object() || spec.empty()) {
        throw Error(ErrorKind::config, "checkpoint has no kernel spec; supply the kernel");
      }
      kernel = kernel_from_spec(spec);
    }
    const IntegratorConfig cfg = integrator_config_from_json(cp.at("cfg"));
    ConcentrationProfile state(cp.at("c").get<std::vector<double>>());
    if (state.n_trunc() != cp.at("N").get<Index>()) {
      throw Error(ErrorKind::config, "checkpoint state length does not match N");
    }
    Integrator it(*kernel, state, cfg);
    it.t_ = cp.at("t").get<double>();
    const auto& st = cp.at("stepper");
    it.h_next_ = st.at("h_next").get<double>();
    it.facold_ = st.at("facold").get<double>();
    it.last_rejected_ = st.at("last_rejected").get<bool>();
    it.accepted_ = st.at("steps_accepted").get<Index>();
    it.rejected_ = st.at("steps_rejected").get<Index>();
    const auto& ledger = cp.at("ledger");
    it.m0_init_ = ledger.at("m0_initial").get<double>();
    it.m1_init_ = ledger.at("m1_initial").get<double>();
    it.clamp_m0_ = ledger.at("clamp_m0").get<double>();
    it.clamp_m1_ = ledger.at("clamp_m1").get<double>();
    return it;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed checkpoint: ") + e.what());
  }
}

StepResult step(const Kernel& kernel, std::span<const double> state, double dt_suggest,
                const IntegratorConfig& cfg, double t) {
  if (!(dt_suggest > 0.0)) throw Error(ErrorKind::domain, "step needs dt_suggest > 0");
  Integrator it(kernel, ConcentrationProfile(std::vector<double>(state.begin(), state.end())), cfg);
  it.t_ = t;
  it.h_next_ = dt_suggest;
  const auto info = it.do_step(std::numeric_limits<double>::infinity());
  StepResult r;
  r.state = it.y_;
  r.dt_used = info.h;
  r.dt_next = it.h_next_;
  r.error_estimate = info.err;
  r.clamp_m0 = info.clamp_m0;
  r.clamp_m1 = info.clamp_m1;
  r.rejected = info.rejected;
  return r;
}

TrajectoryRecord integrate(const Kernel& kernel, const ConcentrationProfile& state0,
                           const IntegratorConfig& cfg, const SampleHook& hook) {
  Integrator it(kernel, state0, cfg);
  return it.run(hook);
}

}  // namespace edg
