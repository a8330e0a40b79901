#include "edg/cli.h"
#include "edg/equilibrium.h"
#include "edg/thermo.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace edg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::domain: return kConfigError;
    case ErrorKind::supercritical: return kSupercritical;
    case ErrorKind::step_underflow:
    case ErrorKind::non_convergent: return kIntegratorFailure;
    default: return kFailure;
  }
}

namespace {

template <class T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, std::string("field '") + key + "' has the wrong type");
  }
}

std::optional<double> optional_number(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_number()) throw Error(ErrorKind::config, std::string("field '") + key + "' must be a number");
  return obj.at(key).get<double>();
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::config, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::config, "cannot write " + path.string());
  return f;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::config, "cannot create output directory " + out.string());
}

std::string ext_text(const ExtReal& x) { return x.is_infinite() ? "inf" : format_double(x.value()); }

}  // namespace

json ExperimentConfig::resolved() const {
  json j = {
      {"kernel", kernel_spec},
      {"n_trunc", n_trunc},
      {"initial", initial},
      {"integrator", to_json(integrator)},
      {"analysis",
       {{"dead_band", analysis.dead_band},
        {"low_band", analysis.low_band},
        {"excess_band_start", analysis.excess_band_start},
        {"checkpoint_every", checkpoint_every},
        {"thermo", thermo}}},
      {"audit", {{"k_max", audit.k_max}, {"l_max", audit.l_max}, {"bda_tolerance", audit.bda_tolerance}}},
      {"series_cap", series_cap},
      {"sweep",
       {{"densities", sweep.densities}, {"parallel", sweep.parallel}, {"min_cluster", sweep.min_cluster}}},
      {"weights", {{"k_max", weights_k_max}}},
      {"seed", seed},
  };
  json eq = json::object();
  if (eq_rho) eq["rho"] = *eq_rho;
  if (eq_phi) eq["phi"] = *eq_phi;
  j["equilibrium"] = eq;
  return j;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::config, "configuration must be a JSON object");
  ExperimentConfig cfg;
  if (!doc.contains("kernel")) throw Error(ErrorKind::config, "configuration needs a 'kernel' section");
  cfg.kernel_spec = doc.at("kernel");
  kernel_from_spec(cfg.kernel_spec);  // validate early
  cfg.n_trunc = field<Index>(doc, "n_trunc", cfg.n_trunc);
  if (cfg.n_trunc < 1) throw Error(ErrorKind::config, "n_trunc must be >= 1");
  if (doc.contains("initial")) cfg.initial = doc.at("initial");
  if (doc.contains("integrator")) cfg.integrator = integrator_config_from_json(doc.at("integrator"));
  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    cfg.analysis.dead_band = field<double>(a, "dead_band", cfg.analysis.dead_band);
    cfg.analysis.low_band = field<Index>(a, "low_band", cfg.analysis.low_band);
    cfg.analysis.excess_band_start = field<Index>(a, "excess_band_start", cfg.analysis.excess_band_start);
    cfg.checkpoint_every = field<double>(a, "checkpoint_every", cfg.checkpoint_every);
    cfg.thermo = field<bool>(a, "thermo", cfg.thermo);
    if (!(cfg.analysis.dead_band > 0.0) || cfg.analysis.low_band < 0 || cfg.checkpoint_every < 0.0) {
      throw Error(ErrorKind::config, "analysis tolerances must be positive");
    }
  }
  if (doc.contains("audit")) {
    const json& a = doc.at("audit");
    cfg.audit.k_max = field<Index>(a, "k_max", cfg.audit.k_max);
    cfg.audit.l_max = field<Index>(a, "l_max", cfg.audit.l_max);
    cfg.audit.bda_tolerance = field<double>(a, "bda_tolerance", cfg.audit.bda_tolerance);
    if (cfg.audit.k_max < 2 || cfg.audit.l_max < 2 || !(cfg.audit.bda_tolerance > 0.0)) {
      throw Error(ErrorKind::config, "audit needs k_max, l_max >= 2 and a positive tolerance");
    }
  }
  if (doc.contains("equilibrium")) {
    const json& e = doc.at("equilibrium");
    cfg.eq_rho = optional_number(e, "rho");
    cfg.eq_phi = optional_number(e, "phi");
  }
  cfg.series_cap = field<Index>(doc, "series_cap", cfg.series_cap);
  if (cfg.series_cap < std::max<Index>(cfg.n_trunc, 16)) {
    throw Error(ErrorKind::config, "series_cap must be at least max(n_trunc, 16)");
  }
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    cfg.sweep.densities = field<std::vector<double>>(s, "densities", {});
    cfg.sweep.parallel = field<unsigned>(s, "parallel", cfg.sweep.parallel);
    cfg.sweep.min_cluster = field<Index>(s, "min_cluster", cfg.sweep.min_cluster);
    std::vector<double> sorted = cfg.sweep.densities;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorKind::config, "sweep densities must be distinct");
    }
    if (!sorted.empty() && !(sorted.front() >= 0.0)) throw Error(ErrorKind::config, "sweep densities must be >= 0");
    if (cfg.sweep.min_cluster < 1) throw Error(ErrorKind::config, "sweep min_cluster must be >= 1");
  }
  if (doc.contains("weights")) cfg.weights_k_max = field<Index>(doc.at("weights"), "k_max", cfg.weights_k_max);
  cfg.seed = field<std::uint64_t>(doc, "seed", cfg.seed);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::config, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, "malformed JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

ConcentrationProfile initial_profile(const json& initial, Index n, const Kernel& kernel, Index series_cap) {
  const std::string type = field<std::string>(initial, "type", "vacuum");
  if (type == "vacuum") return ConcentrationProfile::vacuum(n);
  if (type == "monodisperse") {
    const double rho = field<double>(initial, "rho", 1.0);
    const Index m = field<Index>(initial, "m", std::max<Index>(1, static_cast<Index>(std::ceil(rho))));
    return ConcentrationProfile::monodisperse(n, rho, m);
  }
  if (type == "geometric") return ConcentrationProfile::geometric(n, field<double>(initial, "phi", 0.5));
  if (type == "explicit") {
    auto c = field<std::vector<double>>(initial, "c", {});
    if (static_cast<Index>(c.size()) > n + 1) throw Error(ErrorKind::config, "explicit state longer than N+1");
    c.resize(static_cast<std::size_t>(n) + 1, 0.0);
    return ConcentrationProfile(std::move(c));
  }
  if (type == "equilibrium") {
    const ChemicalPotential cp = compute_log_q(kernel, std::max(series_cap, n));
    const auto rho = optional_number(initial, "rho");
    const auto phi = optional_number(initial, "phi");
    if (rho.has_value() == phi.has_value()) {
      throw Error(ErrorKind::config, "equilibrium start needs exactly one of rho, phi");
    }
    const auto eq = rho ? equilibrium_profile(cp, Density{*rho}, n) : equilibrium_profile(cp, Fugacity{*phi}, n);
    return ConcentrationProfile::from_equilibrium(eq);
  }
  throw Error(ErrorKind::config, "unknown initial condition type '" + type + "'");
}

int cmd_check_kernel(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare_out(out);
  const Kernel kernel = kernel_from_spec(cfg.kernel_spec);
  const AssumptionReport report = audit_assumptions(kernel, cfg.audit.k_max, cfg.audit.l_max);
  const bool pass = report.k1_ok && report.bda_max_residual <= cfg.audit.bda_tolerance;
  json j = to_json(report);
  j["kernel"] = cfg.kernel_spec;
  j["pass"] = pass;
  j["bda_tolerance"] = cfg.audit.bda_tolerance;
  write_json(out / "kernel_audit.json", j);
  log << "check-kernel: " << (pass ? "pass" : "FAIL") << " (k1_ok=" << report.k1_ok
      << ", bda_max_residual=" << format_double(report.bda_max_residual) << ")\n";
  return pass ? kOk : kAuditFailed;
}

int cmd_equilibrium(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  if (cfg.eq_rho.has_value() == cfg.eq_phi.has_value()) {
    throw Error(ErrorKind::config, "equilibrium needs exactly one of rho, phi");
  }
  prepare_out(out);
  const Kernel kernel = kernel_from_spec(cfg.kernel_spec);
  const EquilibriumEngine engine(kernel, cfg.series_cap);
  const ExtReal rho_c = engine.rho_c();
  EquilibriumProfile profile;
  try {
    profile = cfg.eq_rho ? engine.profile_for_density(*cfg.eq_rho, cfg.n_trunc)
                         : engine.profile_for_fugacity(*cfg.eq_phi, cfg.n_trunc);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::supercritical) {
      log << "equilibrium: supercritical, rho_c=" << ext_text(rho_c) << '\n';
    }
    throw;
  }
  {
    auto f = open_out(out / "equilibrium_profile.csv");
    write_profile_csv(f, profile, engine.potential());
  }
  json summary = summary_json(profile, rho_c, engine.phi_c());
  summary["config"] = cfg.resolved();
  write_json(out / "equilibrium_summary.json", summary);
  log << "equilibrium: phi=" << format_double(profile.phi) << " Z=" << format_double(profile.z)
      << " rho=" << format_double(profile.density) << " rho_c=" << ext_text(rho_c) << '\n';
  return kOk;
}

namespace {

struct SimulationOutcome {
  TrajectoryRecord record;
  std::optional<ConvergenceReport> report;
  std::string report_error;
  std::optional<Error> failure;
};

// Shared by simulate and sweep. Checkpoints are taken at sample times, the
// only points where the controller state is guaranteed to match an
// uninterrupted run.
SimulationOutcome simulate_once(Integrator& integrator, const ExperimentConfig& cfg,
                                const EquilibriumEngine* engine, const fs::path* checkpoint_path,
                                bool resumed) {
  SimulationOutcome out;
  const ChemicalPotential* cp = nullptr;
  if (cfg.thermo && engine) cp = &engine->potential();
  SampleHook thermo = cp ? make_thermo_hook(integrator.kernel(), *cp) : SampleHook{};
  double next_checkpoint = cfg.checkpoint_every > 0.0 ? integrator.time() + cfg.checkpoint_every
                                                      : std::numeric_limits<double>::infinity();
  json last_checkpoint = integrator.checkpoint();
  const json experiment = cfg.resolved();
  auto save = [&](const json& ck) {
    if (!checkpoint_path) return;
    json doc = ck;
    doc["experiment"] = experiment;
    write_json(*checkpoint_path, doc);
  };
  SampleHook hook = [&](double t, std::span<const double> c, TrajectoryRecord& rec) {
    if (thermo) thermo(t, c, rec);
    if (t >= next_checkpoint) {
      last_checkpoint = integrator.checkpoint();
      save(last_checkpoint);
      while (next_checkpoint <= t) next_checkpoint += cfg.checkpoint_every;
    }
  };
  try {
    out.record = integrator.run(hook, resumed);
    save(integrator.checkpoint());
  } catch (const Error& e) {
    out.failure = e;
    save(last_checkpoint);
    return out;
  }
  if (engine && out.record.states.size() >= 10) {
    try {
      out.report = classify_longtime(out.record, *engine, cfg.analysis);
    } catch (const Error& e) {
      out.report_error = e.what();
    }
  } else if (!engine) {
    out.report_error = "no chemical potential for this kernel";
  } else {
    out.report_error = "fewer than 10 stored samples";
  }
  return out;
}

std::unique_ptr<EquilibriumEngine> try_engine(const Kernel& kernel, const ExperimentConfig& cfg,
                                              std::ostream& log) {
  try {
    return std::make_unique<EquilibriumEngine>(kernel, std::max(cfg.series_cap, cfg.n_trunc));
  } catch (const Error& e) {
    log << "note: equilibrium analysis unavailable (" << e.what() << ")\n";
    return nullptr;
  }
}

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg_in, const fs::path& out,
                 const std::optional<fs::path>& resume, std::ostream& log) {
  prepare_out(out);
  ExperimentConfig cfg = cfg_in;
  std::optional<Integrator> integrator;
  if (resume) {
    std::ifstream f(*resume);
    if (!f) throw Error(ErrorKind::config, "cannot read checkpoint " + resume->string());
    json ck;
    try {
      ck = json::parse(f);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::config, std::string("malformed checkpoint: ") + e.what());
    }
    integrator.emplace(Integrator::resume(ck, kernel_from_spec(cfg.kernel_spec)));
    // Output settings come from the config; the horizon may be extended.
    integrator->config().t_end = cfg.integrator.t_end;
    integrator->config().record_every = cfg.integrator.record_every;
    integrator->config().keep_states = cfg.integrator.keep_states;
    integrator->config().validate();
    cfg.integrator = integrator->config();
  } else {
    const Kernel kernel = kernel_from_spec(cfg.kernel_spec);
    integrator.emplace(kernel, initial_profile(cfg.initial, cfg.n_trunc, kernel, cfg.series_cap),
                       cfg.integrator);
  }
  cfg.integrator.keep_states = true;  // the long-format trajectory needs every sample
  integrator->config().keep_states = true;

  const auto engine = try_engine(integrator->kernel(), cfg, log);
  const fs::path checkpoint_path = out / "checkpoint.json";
  SimulationOutcome sim = simulate_once(*integrator, cfg, engine.get(), &checkpoint_path, resume.has_value());
  const TrajectoryRecord& rec = sim.record;

  {
    auto f = open_out(out / "trajectory.csv");
    f << "t,k,c_k\n";
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
      const std::string t = format_double(rec.times[i]);
      for (std::size_t k = 0; k < rec.states[i].size(); ++k) {
        f << t << ',' << k << ',' << format_double(rec.states[i][k]) << '\n';
      }
    }
  }
  {
    auto f = open_out(out / "summary.csv");
    f << "t,M0,rho,boundary_mass,F,D,D_infinite_terms\n";
    const bool thermo = rec.free_energy.size() == rec.times.size();
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
      f << format_double(rec.times[i]) << ',' << format_double(rec.m0[i]) << ',' << format_double(rec.m1[i])
        << ',' << format_double(rec.boundary_mass[i]) << ',';
      if (thermo) {
        f << format_double(rec.free_energy[i]) << ','
          << (std::isinf(rec.dissipation[i]) ? std::string("inf") : format_double(rec.dissipation[i])) << ','
          << rec.dissipation_infinite_terms[i];
      } else {
        f << ",,";
      }
      f << '\n';
    }
  }
  json report = {{"config", cfg.resolved()},
                 {"samples", rec.times.size()},
                 {"steps_accepted", rec.steps_accepted},
                 {"steps_rejected", rec.steps_rejected},
                 {"boundary_warning", rec.boundary_warning}};
  if (!rec.times.empty()) {
    double drift0 = 0.0, drift1 = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
      drift0 = std::max(drift0, std::abs(rec.drift_m0[i]));
      drift1 = std::max(drift1, std::abs(rec.drift_m1[i]));
    }
    report["max_moment_drift"] = {{"m0", drift0}, {"m1", drift1}};
    report["clamp_deficit"] = {{"m0", rec.clamp_m0.back()}, {"m1", rec.clamp_m1.back()}};
  }
  if (sim.report) {
    report["convergence"] = to_json(*sim.report);
    auto f = open_out(out / "distances.csv");
    write_series_csv(f, *sim.report);
  } else {
    report["convergence"] = {{"unavailable", sim.report_error}};
  }
  if (sim.failure) report["failure"] = sim.failure->what();
  write_json(out / "report.json", report);

  if (sim.failure) {
    log << "simulate: integrator failure: " << sim.failure->what() << '\n';
    return kIntegratorFailure;
  }
  log << "simulate: " << rec.times.size() << " samples, " << rec.steps_accepted << " steps";
  if (sim.report) log << ", regime " << to_string(sim.report->regime);
  log << '\n';
  return kOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare_out(out);
  const Kernel kernel = kernel_from_spec(cfg.kernel_spec);
  const auto& rhos = cfg.sweep.densities;
  struct Row {
    std::string status = "ok";
    std::string regime;
    double weak = NAN, strong = NAN, low = NAN, excess = NAN, gap = NAN, boundary = NAN;
  };
  std::vector<Row> rows(rhos.size());
  std::unique_ptr<EquilibriumEngine> engine;
  if (!rhos.empty()) {
    engine = try_engine(kernel, cfg, log);
    if (engine) {
      try {
        engine->rho_c();  // computed once, before the workers share the engine
      } catch (const Error& e) {
        log << "note: " << e.what() << '\n';
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rhos.size(); i = next++) {
      Row& row = rows[i];
      try {
        const double rho = rhos[i];
        const Index m = std::max<Index>(cfg.sweep.min_cluster, static_cast<Index>(std::ceil(rho)));
        ConcentrationProfile c0 = rho == 0.0 ? ConcentrationProfile::vacuum(cfg.n_trunc)
                                             : ConcentrationProfile::monodisperse(cfg.n_trunc, rho, m);
        IntegratorConfig icfg = cfg.integrator;
        icfg.keep_states = true;
        Integrator integrator(kernel, c0, icfg);
        ExperimentConfig row_cfg = cfg;
        row_cfg.thermo = false;
        SimulationOutcome sim = simulate_once(integrator, row_cfg, engine.get(), nullptr, false);
        if (sim.failure) {
          row.status = sim.failure->what();
          continue;
        }
        if (!sim.report) {
          row.status = sim.report_error;
          continue;
        }
        const auto& r = *sim.report;
        row.regime = to_string(r.regime);
        row.weak = r.weak_distance_series.back();
        row.low = r.low_band_distance_series.back();
        row.strong = r.strong_distance_series.back();
        row.excess = r.excess_mass_series.back();
        row.gap = r.free_energy_limit_gap;
        row.boundary = r.final_boundary_mass;
      } catch (const std::exception& e) {
        row.status = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.sweep.parallel, static_cast<unsigned>(rhos.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  auto f = open_out(out / "sweep.csv");
  f << "rho,regime,weak_d,low_band_d,strong_d,excess_mass,F_gap,boundary_mass,status\n";
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (r.status != "ok") ++failed;
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    f << format_double(rhos[i]) << ',' << r.regime << ',' << format_double(r.weak) << ','
      << format_double(r.low) << ',' << format_double(r.strong) << ',' << format_double(r.excess) << ','
      << format_double(r.gap) << ',' << format_double(r.boundary) << ',' << status << '\n';
  }
  json meta = {{"config", cfg.resolved()}, {"rows", rows.size()}, {"failed_rows", failed}};
  if (engine) {
    try {
      meta["rho_c"] = to_json_value(engine->rho_c());
    } catch (const Error& e) {
      meta["rho_c"] = {{"unavailable", e.what()}};
    }
  }
  write_json(out / "sweep_summary.json", meta);
  log << "sweep: " << rows.size() << " rows, " << failed << " failed\n";
  return kOk;
}

int cmd_weights(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare_out(out);
  const Kernel kernel = kernel_from_spec(cfg.kernel_spec);
  const ConcentrationProfile c = initial_profile(cfg.initial, cfg.n_trunc, kernel, cfg.series_cap);
  const SuperlinearWeights w = vallee_poussin_weights(c.values(), cfg.weights_k_max);
  {
    auto f = open_out(out / "weights.csv");
    f << "k,g_k,Phi_k,phi_k\n";
    for (Index k = 0; k <= w.k_max(); ++k) {
      f << k << ',' << format_double(w.g[k]) << ',' << format_double(w.phi[k]) << ','
        << format_double(w.phi_steps[k]) << '\n';
    }
  }
  json j = to_json(w);
  j["config"] = cfg.resolved();
  write_json(out / "weights.json", j);
  log << "weights: k_max=" << w.k_max() << " condition " << (w.condition_ok ? "holds" : "VIOLATED") << '\n';
  return w.condition_ok ? kOk : kFailure;
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Exchange-driven growth: kernel audits, equilibria, simulation and sweeps", "edg"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON experiment configuration");
    if (config_required) opt->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
  };
  auto* check = app.add_subcommand("check-kernel", "sample the structural kernel assumptions");
  add_common(check, true);
  auto* equil = app.add_subcommand("equilibrium", "equilibrium profile for a density or fugacity");
  add_common(equil, true);
  std::optional<double> rho_flag, phi_flag;
  auto* rho_opt = equil->add_option("--rho", rho_flag, "target density");
  equil->add_option("--phi", phi_flag, "fugacity")->excludes(rho_opt);
  auto* sim = app.add_subcommand("simulate", "integrate the truncated system and classify the long-time state");
  add_common(sim, false);
  std::string resume_path;
  sim->add_option("--resume", resume_path, "checkpoint to continue from");
  auto* sweep = app.add_subcommand("sweep", "run one simulation per density");
  add_common(sweep, true);
  unsigned parallel = 0;
  sweep->add_option("--parallel", parallel, "worker threads (overrides the config)");
  auto* weights = app.add_subcommand("weights", "superlinear weight sequence for the initial profile");
  add_common(weights, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (!resume_path.empty()) {
      std::ifstream f(resume_path);
      if (!f) throw Error(ErrorKind::config, "cannot read checkpoint " + resume_path);
      json ck;
      try {
        ck = json::parse(f);
      } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("malformed checkpoint: ") + e.what());
      }
      if (!ck.contains("experiment")) throw Error(ErrorKind::config, "checkpoint has no embedded config; pass --config");
      cfg = parse_config(ck.at("experiment"));
    } else {
      throw Error(ErrorKind::config, "simulate needs --config or --resume");
    }
    const fs::path out(out_dir);
    if (*check) return cmd_check_kernel(cfg, out, log);
    if (*equil) {
      if (rho_flag) {
        cfg.eq_rho = rho_flag;
        cfg.eq_phi.reset();
      }
      if (phi_flag) {
        cfg.eq_phi = phi_flag;
        cfg.eq_rho.reset();
      }
      return cmd_equilibrium(cfg, out, log);
    }
    if (*sim) {
      std::optional<fs::path> resume;
      if (!resume_path.empty()) resume = resume_path;
      return cmd_simulate(cfg, out, resume, log);
    }
    if (*sweep) {
      if (parallel > 0) cfg.sweep.parallel = parallel;
      return cmd_sweep(cfg, out, log);
    }
    if (*weights) return cmd_weights(cfg, out, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace edg::cli
