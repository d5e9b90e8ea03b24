#include "runs.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <qsync/errors.hpp>
#include <qsync/random.hpp>

#include "output.hpp"

#ifndef QSYNC_VERSION
#define QSYNC_VERSION "unknown"
#endif

namespace qsync::tools {

namespace fs = std::filesystem;

namespace {

FailureInfo failure_from(const std::exception& e) {
  FailureInfo f;
  f.message = e.what();
  f.code = "error";
  if (const auto* err = dynamic_cast<const Error*>(&e)) f.code = std::string(to_string(err->code()));
  if (const auto* ie = dynamic_cast<const IntegrationError*>(&e)) f.time = ie->time();
  return f;
}

Manifest start_manifest(const std::string& command, const RunConfig& cfg, const RunOptions& opts) {
  Manifest m;
  m.set("command", command);
  m.set("version", QSYNC_VERSION);
  m.set("seed", std::to_string(opts.seed));
  m.set("started", utc_timestamp());
  m.set_config(cfg.text);
  return m;
}

void emit(Manifest& m, const RunOptions& opts, const std::string& name, const std::string& body) {
  const fs::path path = opts.out_dir / name;
  write_atomic(path, body);
  m.add_output(path, body);
}

void finish(Manifest& m, const RunOptions& opts, RunStatus status) {
  m.set("status", status == RunStatus::Ok ? "ok" : status == RunStatus::Partial ? "partial" : "failed");
  m.set("finished", utc_timestamp());
  m.write(opts.out_dir / "manifest.txt");
}

void record_failure(Manifest& m, const FailureInfo& f) {
  m.set("failure.code", f.code);
  m.set("failure.message", f.message);
  if (f.time) m.set("failure.t", format_double(*f.time));
}

void prepare(const RunOptions& opts) {
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + opts.out_dir.string() + ": " + ec.message());
}

double kappa_of(const std::vector<double>& freqs) {
  const auto [lo, hi] = std::minmax_element(freqs.begin(), freqs.end());
  return *lo / *hi;
}

}  // namespace

// ---------------------------------------------------------------------------

QuantumTrajectory simulate_trajectory(const SystemSpec& spec, const IntegratorConfig& cfg, const BlockMatrix& rho0,
                                      bool finite_difference) {
  QuantumTrajectory out;
  const auto ops = SystemOperators::build(spec);
  auto gen = std::make_shared<const Liouvillian>(ops, Liouvillian::invariant_partition(ops, *rho0.partition()));
  const MetricsContext ctx(spec, ops, gen, rho0);
  auto observer = [&](const Sample& s) {
    MetricsRecord r = ctx.evaluate(s.t, s.rho, s.eig);
    if (finite_difference) {
      // A failed probe step leaves the column empty; the main integration reports its own errors.
      try {
        const double h = cfg.dt;
        const double up = ctx.relative_to_initial(s.propagator.trial_step(h));
        const double down = ctx.relative_to_initial(s.propagator.trial_step(-h));
        r.ldot_fd = (up - down) / (2.0 * h);
      } catch (const Error&) {
        r.ldot_fd.reset();
      }
    }
    out.records.push_back(r);
  };
  try {
    integrate(rho0, spec, cfg, observer);
  } catch (const std::exception& e) {
    out.failure = failure_from(e);
  }
  return out;
}

ClassicalTrajectory simulate_classical(const SLConfig& cfg) {
  ClassicalTrajectory out;
  const double beta0 = 1.0 / cfg.temperature;
  auto observer = [&](const SLEnsemble& ens) {
    ClassicalSample s;
    s.t = ens.t;
    s.metrics = classical_metrics(ens, cfg.freqs, beta0);
    PhaseCoherence pc;
    pc.add(ens);
    s.circ_var = pc.circular_variance();
    s.csl = csl_bound(ens, cfg, beta0);
    out.samples.push_back(s);
  };
  try {
    integrate_classical(cfg, observer);
  } catch (const std::exception& e) {
    out.failure = failure_from(e);
  }
  return out;
}

// ---------------------------------------------------------------------------

ModeDims guarded_dims(const std::vector<double>& freqs, double temperature, double tail_target) {
  ModeDims dims = auto_dims(freqs, temperature, tail_target);
  const double beta = 1.0 / temperature;
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    while (top_two_mass(beta, freqs[j], dims.dims[j]) > kTailGuard) ++dims.dims[j];
  }
  return dims;
}

SystemSpec sweep_system(const RunConfig& cfg, double k, double delta_omega) {
  SystemSpec s = cfg.system;
  if (s.freqs.size() != 2) throw Error(ErrorCode::UnsupportedTopology, "sweeps need a two-mode system");
  if (s.gamma_minus) {
    throw Error(ErrorCode::InvalidArgument, "sweeps derive gamma_minus from detailed balance; drop the override");
  }
  s.k = k;
  s.freqs[1] = s.freqs[0] + delta_omega;
  s.dims = guarded_dims(s.freqs, s.temperature, cfg.sweep.tail_target);
  return s;
}

SweepPoint sweep_quantum_point(const RunConfig& cfg, double k, double delta_omega) {
  SweepPoint p;
  p.k = k;
  p.delta_omega = delta_omega;
  try {
    const SystemSpec spec = sweep_system(cfg, k, delta_omega);
    IntegratorConfig ic = cfg.integrator;
    ic.dt = cfg.sweep.dt;
    ic.t_final = cfg.sweep.t_obs;
    ic.sample_stride = ic.total_steps();
    const auto ops = SystemOperators::build(spec);
    const BlockMatrix rho0 = initial_product_state(spec);
    auto observer = [&](const Sample& s) {
      if (s.step != s.propagator.config().total_steps()) return;
      const auto dist = sync_distance(s.rho, ops.quads);
      p.d = std::sqrt(std::max(0.0, dist.d2));
      const double energy = s.rho.expectation(ops.h0).real();
      p.chi = chi_from(energy, entropy_of_spectrum(s.eig), spec.freqs);
    };
    integrate(rho0, spec, ic, observer);
  } catch (const std::exception& e) {
    p.status = failure_from(e).code;
    p.d = std::nan("");
    p.chi = std::nan("");
  }
  return p;
}

std::uint64_t sweep_subseed(std::uint64_t seed, std::size_t i, std::size_t j) {
  return hash_key({seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
}

SweepPoint sweep_classical_point(const RunConfig& cfg, double k, double delta_omega, std::uint64_t subseed) {
  SweepPoint p;
  p.k = k;
  p.delta_omega = delta_omega;
  p.chi = std::nan("");
  try {
    SystemSpec spec = cfg.system;
    spec.k = k;
    spec.freqs[1] = spec.freqs[0] + delta_omega;
    SLConfig sl = SLConfig::from_quantum(spec);
    sl.members = cfg.sweep.classical_members;
    sl.dt = cfg.sweep.classical_dt;
    sl.t_final = cfg.sweep.t_obs;
    sl.sample_stride = sl.total_steps();
    sl.noise = cfg.classical.noise;
    sl.cross_coupling = cfg.classical.cross_coupling;
    sl.seed = subseed;
    const SLEnsemble ens = integrate_classical(sl);
    p.d = std::sqrt(std::max(0.0, sync_distance(ensemble_raw_moments(ens)).d2));
  } catch (const std::exception& e) {
    p.status = failure_from(e).code;
    p.d = std::nan("");
  }
  return p;
}

SweepResult compute_sweep(const RunConfig& cfg, std::uint64_t seed, unsigned workers, bool quantum, bool classical) {
  const auto ks = cfg.sweep.k_values();
  const auto dws = cfg.sweep.dw_values();
  const std::size_t n = ks.size() * dws.size();
  SweepResult r;
  // Classical points are cheap, so they go last in the shared queue.
  const std::size_t nq = quantum ? n : 0;
  const std::size_t nc = classical ? n : 0;
  r.quantum.resize(nq);
  r.classical.resize(nc);
  parallel_for(nq + nc, workers, [&](std::size_t idx) {
    if (idx < nq) {
      const std::size_t i = idx / dws.size();
      const std::size_t j = idx % dws.size();
      r.quantum[idx] = sweep_quantum_point(cfg, ks[i], dws[j]);
    } else {
      const std::size_t c = idx - nq;
      const std::size_t i = c / dws.size();
      const std::size_t j = c % dws.size();
      r.classical[c] = sweep_classical_point(cfg, ks[i], dws[j], sweep_subseed(seed, i, j));
    }
  });
  return r;
}

// ---------------------------------------------------------------------------

std::string trajectory_csv(const std::vector<MetricsRecord>& records) {
  CsvWriter w({"t", "D2", "s_theta", "s_r", "chi", "L", "sigma0", "ldot_exact", "ldot_fd", "qsl_rhs", "energy",
               "entropy", "cap_ent", "cov_ce", "delta_c", "delta_e", "trace_err", "min_eig"});
  for (const auto& r : records) {
    w.add(r.t).add(r.d2).add(r.s_theta).add(r.s_r).add(r.chi).add(r.big_l).add(r.sigma0).add(r.ldot_exact);
    w.add(r.ldot_fd).add(r.qsl_rhs).add(r.energy).add(r.entropy).add(r.cap_ent).add(r.cov_ce).add(r.delta_c);
    w.add(r.delta_e).add(r.trace_err).add(r.min_eig);
    w.end_row();
  }
  return w.str();
}

std::string classical_csv(const std::vector<ClassicalSample>& samples) {
  CsvWriter w({"t", "D2_cl", "chi_cl", "phase_diff_circ_var", "mean_r1_sq", "mean_r2_sq", "csl_rhs"});
  for (const auto& s : samples) {
    w.add(s.t).add(s.metrics.d2).add(s.metrics.chi).add(s.circ_var).add(s.metrics.mean_r1_sq);
    w.add(s.metrics.mean_r2_sq).add(s.csl.rhs);
    w.end_row();
  }
  return w.str();
}

std::string bounds_csv(const BoundsGrid& grid) {
  CsvWriter w({"n_modes", "kappa", "D", "chi_min_quantum", "chi_min_classical", "chi_asymptotic_quantum",
               "chi_asymptotic_classical", "work_min_quantum", "status"});
  const auto ds = linspace(grid.d_min, grid.d_max, grid.d_count);
  for (int n : grid.n_modes) {
    for (double kappa : grid.kappas) {
      for (double d : ds) {
        const BoundParams p{n, kappa, d};
        w.add(static_cast<long long>(n)).add(kappa).add(d);
        try {
          const auto q = chi_lower_bound(p, Regime::Quantum);
          const auto c = chi_lower_bound(p, Regime::Classical);
          const auto work = work_lower_bound(p, grid.temperature, Regime::Quantum);
          w.add(q.finite).add(c.finite).add(q.asymptotic).add(c.asymptotic).add(work.finite);
          w.add(q.divergent ? "divergent" : "ok");
        } catch (const Error& e) {
          const double nan = std::nan("");
          w.add(nan).add(nan).add(nan).add(nan).add(nan).add(to_string(e.code()));
        }
        w.end_row();
      }
    }
  }
  return w.str();
}

// ---------------------------------------------------------------------------

RunStatus run_simulate(const RunConfig& cfg, const RunOptions& opts) {
  prepare(opts);
  Manifest m = start_manifest("simulate", cfg, opts);
  const SystemSpec spec = cfg.resolved_system();
  m.set("dims", std::to_string(spec.dims.dims.front()) +
                    (spec.modes() > 1 ? "x" + std::to_string(spec.dims.dims.back()) : std::string{}));
  QuantumTrajectory traj;
  try {
    traj = simulate_trajectory(spec, cfg.integrator, initial_product_state(spec));
  } catch (const std::exception& e) {
    traj.failure = failure_from(e);
  }
  emit(m, opts, "trajectory.csv", trajectory_csv(traj.records));
  m.set("samples", std::to_string(traj.records.size()));
  if (traj.failure) record_failure(m, *traj.failure);
  const RunStatus status = traj.failure ? RunStatus::Fatal : RunStatus::Ok;
  finish(m, opts, status);
  return status;
}

RunStatus run_classical(const RunConfig& cfg, const RunOptions& opts) {
  prepare(opts);
  Manifest m = start_manifest("classical", cfg, opts);
  SLConfig sl = cfg.classical;
  sl.seed = opts.seed;
  const auto traj = simulate_classical(sl);
  emit(m, opts, "classical.csv", classical_csv(traj.samples));
  m.set("samples", std::to_string(traj.samples.size()));
  if (traj.failure) record_failure(m, *traj.failure);
  const RunStatus status = traj.failure ? RunStatus::Fatal : RunStatus::Ok;
  finish(m, opts, status);
  return status;
}

RunStatus run_sweep(const RunConfig& cfg, const RunOptions& opts) {
  prepare(opts);
  Manifest m = start_manifest("sweep", cfg, opts);
  const auto res = compute_sweep(cfg, opts.seed, opts.workers);
  std::size_t failed = 0;
  CsvWriter q({"k", "delta_omega", "D_at_t", "chi_at_t", "status"});
  for (const auto& p : res.quantum) {
    q.add(p.k).add(p.delta_omega).add(p.d).add(p.chi).add(p.status);
    q.end_row();
    failed += p.status != "ok";
  }
  CsvWriter c({"k", "delta_omega", "D_cl_at_t", "status"});
  for (const auto& p : res.classical) {
    c.add(p.k).add(p.delta_omega).add(p.d).add(p.status);
    c.end_row();
    failed += p.status != "ok";
  }
  emit(m, opts, "sweep_quantum.csv", q.str());
  emit(m, opts, "sweep_classical.csv", c.str());
  m.set("points", std::to_string(res.quantum.size()));
  m.set("failed_points", std::to_string(failed));
  const RunStatus status = failed ? RunStatus::Partial : RunStatus::Ok;
  finish(m, opts, status);
  return status;
}

RunStatus run_sample_gaussian(const RunConfig& cfg, const RunOptions& opts) {
  prepare(opts);
  Manifest m = start_manifest("sample-gaussian", cfg, opts);
  SampleParams sp = cfg.sample;
  sp.seed = opts.seed;
  sp.validate();
  const auto& freqs = cfg.sample_freqs;
  const double kappa = kappa_of(freqs);
  constexpr double kViolationTolerance = 1e-8;

  struct Row {
    double d, chi_q, chi_c, nu1, nu2, r, margin;
  };
  std::vector<Row> rows(sp.count);
  parallel_for(sp.count, opts.workers, [&](std::size_t i) {
    const auto draw = sample_gaussian(sp, i);
    Row row{};
    row.d = std::sqrt(std::max(0.0, gaussian_sync_distance(draw.state).d2));
    row.chi_q = gaussian_chi(draw.state, freqs, Regime::Quantum);
    row.chi_c = gaussian_chi(draw.state, freqs, Regime::Classical);
    row.nu1 = draw.nu(0);
    row.nu2 = draw.nu(1);
    row.r = draw.r;
    row.margin = uncertainty_margin(draw.state.cov);
    rows[i] = row;
  });

  CsvWriter samples({"index", "D", "chi_quantum", "chi_classical", "nu1", "nu2", "r", "validity_margin"});
  std::vector<Point2> pq, pc;
  std::size_t viol_q = 0, viol_c = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    samples.add(static_cast<long long>(i)).add(r.d).add(r.chi_q).add(r.chi_c).add(r.nu1).add(r.nu2).add(r.r);
    samples.add(r.margin);
    samples.end_row();
    pq.push_back({r.d, r.chi_q});
    pc.push_back({r.d, r.chi_c});
    const BoundParams bp{2, kappa, r.d};
    if (r.chi_q < chi_lower_bound(bp, Regime::Quantum).finite - kViolationTolerance) ++viol_q;
    if (r.chi_c < chi_lower_bound(bp, Regime::Classical).finite - kViolationTolerance) ++viol_c;
  }

  auto hull_csv = [](const Hull& h) {
    CsvWriter w({"D", "chi"});
    for (const auto& v : h.vertices) {
      w.add(v.x).add(v.y);
      w.end_row();
    }
    return w.str();
  };
  const Hull hq = convex_hull(pq);
  const Hull hc = convex_hull(pc);

  CsvWriter curves({"D", "chi_min_quantum", "chi_min_classical"});
  for (double d : linspace(0.01, 2.0, 400)) {
    const BoundParams bp{2, kappa, d};
    curves.add(d).add(chi_lower_bound(bp, Regime::Quantum).finite).add(chi_lower_bound(bp, Regime::Classical).finite);
    curves.end_row();
  }

  emit(m, opts, "samples.csv", samples.str());
  emit(m, opts, "hull_quantum.csv", hull_csv(hq));
  emit(m, opts, "hull_classical.csv", hull_csv(hc));
  emit(m, opts, "bound_curves.csv", curves.str());
  m.set("count", std::to_string(sp.count));
  m.set("kappa", format_double(kappa));
  m.set("violations_quantum", std::to_string(viol_q));
  m.set("violations_classical", std::to_string(viol_c));
  finish(m, opts, RunStatus::Ok);
  return RunStatus::Ok;
}

RunStatus run_bounds(const RunConfig& cfg, const RunOptions& opts) {
  prepare(opts);
  Manifest m = start_manifest("bounds", cfg, opts);
  emit(m, opts, "bounds.csv", bounds_csv(cfg.bounds));
  finish(m, opts, RunStatus::Ok);
  return RunStatus::Ok;
}

}  // namespace qsync::tools
