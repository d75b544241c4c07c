#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nsync/nsync.hpp"

namespace fs = std::filesystem;
using namespace nsync;

namespace {

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3, kNumerical = 4, kIo = 5 };

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir = "nsync_out";
};

struct Context {
  RunConfig cfg;
  fs::path out;
  unsigned workers = 1;
  std::string command;

  std::string header() const { return audit_header(command, cfg); }
  fs::path file(const std::string& name) const { return out / name; }
};

Context resolve(const Globals& g, const std::string& command) {
  Context ctx;
  if (!g.config_path.empty()) ctx.cfg = load_config(g.config_path);
  for (const auto& o : g.overrides) apply_override(ctx.cfg, o);
  if (g.seed) ctx.cfg.sim.run.seed = *g.seed;
  validate(ctx.cfg);
  ctx.out = g.out_dir;
  ctx.workers = std::max(1u, g.workers);
  ctx.command = command;
  fs::create_directories(ctx.out);
  write_text(ctx.file("resolved.cfg"), "# nsync " + command + " resolved configuration\n",
             dump_config(ctx.cfg));
  return ctx;
}

// ---- simulate

struct SimulateOpts {
  std::size_t density_paths = 0;
  double density_time = -1.0;
};

void cmd_simulate(const Context& ctx, const SimulateOpts& opt) {
  const auto& cfg = ctx.cfg;
  const ForcingSpec spec = forcing_spec(cfg);
  const auto tr = simulate_ensemble_common_noise(cfg.sim.ics, spec, cfg.model, cfg.sim.run);

  PlotScript plot;
  plot.figure("Displacement").xlabel("t").ylabel("x1");
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const std::string name = "trajectory_" + std::to_string(i) + ".csv";
    CsvWriter w(ctx.file(name), ctx.header(), {"t", "x1", "x2", "u"});
    for (std::size_t n = 0; n < tr[i].times.size(); ++n)
      w.row({tr[i].times[n], tr[i].states[n].x1, tr[i].states[n].x2, tr[i].forcing_trace[n]});
    plot.series("ic" + std::to_string(i), name, "t", "x1");
  }
  std::cout << "simulate: " << tr.size() << " trajectories, " << tr[0].times.size()
            << " samples each\n";

  if (tr.size() >= 2) {
    std::vector<std::string> cols{"t"};
    std::vector<std::vector<double>> errs;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      cols.push_back("e_0_" + std::to_string(i));
      errs.push_back(sync_error_series(tr[0], tr[i]));
    }
    CsvWriter w(ctx.file("sync_error.csv"), ctx.header(), cols);
    for (std::size_t n = 0; n < tr[0].times.size(); ++n) {
      std::vector<CsvWriter::Cell> row{tr[0].times[n]};
      for (const auto& e : errs) row.emplace_back(e[n]);
      w.row(row);
    }
    plot.figure("Synchronization error").xlabel("t").ylabel("e").yscale("log");
    for (std::size_t i = 1; i < cols.size(); ++i) plot.series(cols[i], "sync_error.csv", "t", cols[i]);
    for (std::size_t i = 0; i < errs.size(); ++i) {
      std::size_t n = 0;
      while (n < errs[i].size() && errs[i][n] >= cfg.mct.grid.epsilon) ++n;
      if (n < errs[i].size())
        std::cout << "  " << cols[i + 1] << " first below " << cfg.mct.grid.epsilon << " at t="
                  << tr[0].times[n] << "\n";
      else
        std::cout << "  " << cols[i + 1] << " stays above " << cfg.mct.grid.epsilon << "\n";
    }
  }

  if (opt.density_paths > 0) {
    const double t_snap = opt.density_time > 0.0 ? opt.density_time : cfg.sim.run.t_end;
    const auto edges = uniform_edges(-4.0, 4.0, 100);
    std::vector<Histogram2D> hs;
    for (std::size_t i = 0; i < cfg.sim.ics.size(); ++i) {
      const auto samples =
          transient_samples(cfg.sim.ics[i], spec, cfg.model, opt.density_paths, t_snap,
                            cfg.sim.run.dt, derive_seed(cfg.sim.run.seed, 1000 + i));
      hs.push_back(density_histogram(samples, edges, edges));
      write_histogram(ctx.file("density_" + std::to_string(i) + ".txt"), ctx.header(), hs.back());
    }
    for (std::size_t i = 1; i < hs.size(); ++i)
      std::cout << "  total variation density_0 vs density_" << i << ": "
                << total_variation(hs[0], hs[i]) << "\n";
  }
  plot.write(ctx.file("simulate.plot"), ctx.header());
}

// ---- mct

void cmd_mct(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& g = cfg.mct.grid;
  CsvWriter summary(ctx.file("mct.csv"), ctx.header(),
                    {"omega", "c", "mean_T", "saturated", "K", "M", "epsilon"});
  CsvWriter reps(ctx.file("mct_replications.csv"), ctx.header(), {"omega", "c", "k", "T"});
  for (double c : cfg.mct.cs) {
    for (double omega : cfg.mct.omegas) {
      RunConfig point = cfg;
      point.model.c = c;
      point.forcing.omega = omega;
      const auto r = mean_convergence_time(forcing_spec(point), point.model, g, cfg.sim.run.seed,
                                           ctx.workers);
      summary.row({omega, c, r.mean_T, std::string(r.saturated ? "1" : "0"),
                   static_cast<long long>(g.K), static_cast<long long>(g.grid_m * g.grid_m),
                   g.epsilon});
      for (int k = 0; k < g.K; ++k) reps.row({omega, c, static_cast<long long>(k), r.T[k]});
      std::cout << "mct: omega=" << omega << " c=" << c << " <T>=" << r.mean_T
                << (r.saturated ? " (saturated)" : "")
                << (r.diverged.empty() ? "" : " diverged=" + std::to_string(r.diverged.size()))
                << "\n";
    }
  }
}

// ---- sweep

void cmd_sweep(const Context& ctx) {
  const auto& s = ctx.cfg.sweep;
  const MdeParams tmpl = mde_params(ctx.cfg, s.omega_lo);
  const SweepOptions opt{s.settle_periods, s.measure_periods};
  std::vector<ResponsePoint> fwd, bwd;
  auto run = [&](SweepDirection d, std::vector<ResponsePoint>& out) {
    out = sweep_frequency(s.omega_lo, s.omega_hi, s.n_steps, d, tmpl, s.q0, opt);
  };
  if (ctx.workers > 1) {
    std::exception_ptr err;
    std::thread t([&] {
      try {
        run(SweepDirection::backward, bwd);
      } catch (...) {
        err = std::current_exception();
      }
    });
    run(SweepDirection::forward, fwd);
    t.join();
    if (err) std::rethrow_exception(err);
  } else {
    run(SweepDirection::forward, fwd);
    run(SweepDirection::backward, bwd);
  }
  CsvWriter w(ctx.file("sweep.csv"), ctx.header(),
              {"omega", "direction", "ptp_m1", "ptp_msq", "ptp_s22"});
  for (const auto* pts : {&fwd, &bwd})
    for (const auto& r : *pts)
      w.row({r.omega, std::string(to_string(r.direction)), r.ptp_m1, r.ptp_msq, r.ptp_s22});

  PlotScript plot;
  plot.figure("Frequency response").xlabel("omega").ylabel("peak-to-peak of E[x1^2]");
  plot.series("forward", "sweep.csv", "omega", "ptp_msq", "line", "direction:forward");
  plot.series("backward", "sweep.csv", "omega", "ptp_msq", "line", "direction:backward");
  plot.figure("Mean response").xlabel("omega").ylabel("peak-to-peak of m1");
  plot.series("forward", "sweep.csv", "omega", "ptp_m1", "line", "direction:forward");
  plot.series("backward", "sweep.csv", "omega", "ptp_m1", "line", "direction:backward");
  plot.write(ctx.file("sweep.plot"), ctx.header());

  double widest = 0.0, at = 0.0;
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    const auto& b = bwd[bwd.size() - 1 - i];
    const double rel = std::abs(fwd[i].ptp_msq - b.ptp_msq) /
                       std::max(std::min(fwd[i].ptp_msq, b.ptp_msq), 1e-300);
    if (rel > widest) widest = rel, at = fwd[i].omega;
  }
  std::cout << "sweep: " << fwd.size() << " points per direction; largest forward/backward gap "
            << widest << " at omega=" << at << "\n";
}

// ---- poincare

void cmd_poincare(const Context& ctx) {
  const auto& pc = ctx.cfg.poincare;
  const MdeParams p = mde_params(ctx.cfg, pc.omega);
  const auto cls = classify_attractor(pc.q0, p, pc.transient, pc.probe, pc.tol);

  std::ostringstream rep;
  rep << "omega = " << detail::fmt(pc.omega) << "\n";
  rep << "q0 = " << detail::fmt_moments(pc.q0) << "\n";
  rep << "classification = " << to_string(cls.kind) << "\n";
  rep << "diameter = " << detail::fmt(cls.diameter) << "\n";

  if (cls.kind == AttractorKind::divergent) {
    write_text(ctx.file("poincare_report.txt"), ctx.header(), rep.str());
    throw DivergenceError(pc.transient * p.period(), 0);
  }
  const MomentState start = cls.points.back();
  const auto pts = poincare_plot(start, p, pc.iters);
  CsvWriter w(ctx.file("poincare.csv"), ctx.header(), {"iter", "m1", "m2", "s11", "s12", "s22"});
  const long long base = pc.transient + 2LL * pc.probe;
  for (std::size_t i = 0; i < pts.size(); ++i)
    w.row({base + static_cast<long long>(i), pts[i].m1, pts[i].m2, pts[i].s11, pts[i].s12,
           pts[i].s22});

  if (cls.kind == AttractorKind::periodic) {
    rep << "period = " << cls.period << "\n";
    const auto fp = find_fixed_point(start, cls.period, p);
    rep << "newton_status = " << to_string(fp.status) << "\n";
    rep << "q_bar = " << detail::fmt_moments(fp.q_bar) << "\n";
    rep << "m = " << fp.m << "\n";
    rep << "residual = " << detail::fmt(fp.residual) << "\n";
    rep << "stable = " << (fp.stable ? "true" : "false") << "\n";
    rep << "multipliers (re, im, modulus):\n";
    for (const auto& s : fp.multipliers)
      rep << "  " << detail::fmt(s.real()) << ", " << detail::fmt(s.imag()) << ", "
          << detail::fmt(std::abs(s)) << "\n";
  }
  write_text(ctx.file("poincare_report.txt"), ctx.header(), rep.str());

  PlotScript plot;
  plot.figure("Poincare section").xlabel("m1").ylabel("m2");
  plot.series("iterates", "poincare.csv", "m1", "m2", "points");
  plot.write(ctx.file("poincare.plot"), ctx.header());
  std::cout << "poincare: " << to_string(cls.kind);
  if (cls.kind == AttractorKind::periodic) std::cout << " period " << cls.period;
  std::cout << ", diameter " << cls.diameter << "\n";
}

// ---- bif

void cmd_bif(const Context& ctx, bool markers) {
  const auto& cc = ctx.cfg.continuation;
  const MdeParams base = mde_params(ctx.cfg, cc.omega_lo);
  const auto seed = detect_saddle_node(cc.omega_lo, cc.omega_hi, cc.c_seed, cc.m, base);
  std::cout << "bif: fold at c=" << seed.c << " omega*=" << detail::fmt(seed.omega_star) << "\n";
  const auto curve = trace_bifurcation_set(seed, cc.c_lo, cc.c_hi, cc.delta_c, base, cc.m);
  for (const auto& n : curve.notes) std::cout << "  note: " << n << "\n";

  CsvWriter w(ctx.file("bif.csv"), ctx.header(),
              {"c", "omega_star", "m1", "m2", "s11", "s12", "s22", "res_fp", "res_P1"});
  for (const auto& b : curve.points)
    w.row({b.c, b.omega_star, b.q_bar.m1, b.q_bar.m2, b.q_bar.s11, b.q_bar.s12, b.q_bar.s22,
           b.res_fp, b.res_p1});
  std::cout << "  " << curve.points.size() << " points over c in [" << curve.points.front().c
            << ", " << curve.points.back().c << "]\n";

  PlotScript plot;
  plot.figure("Saddle-node set").xlabel("omega").ylabel("c");
  plot.series("fold", "bif.csv", "omega_star", "c", "line");

  if (markers) {
    const auto& g = ctx.cfg.mct.grid;
    CsvWriter m(ctx.file("markers.csv"), ctx.header(),
                {"omega", "c", "mean_T", "class", "predicted"});
    for (double c : ctx.cfg.mct.cs) {
      const auto ws = omega_star_at(curve, c);
      for (double omega : ctx.cfg.mct.omegas) {
        RunConfig point = ctx.cfg;
        point.model.c = c;
        point.forcing.omega = omega;
        const auto r = mean_convergence_time(forcing_spec(point), point.model, g,
                                             ctx.cfg.sim.run.seed, ctx.workers);
        const std::string cls = r.mean_T < 1e3 ? "fast" : "slow";
        const std::string pred = !ws ? "unknown" : omega < *ws ? "slow" : "fast";
        m.row({omega, c, r.mean_T, cls, pred});
        std::cout << "  marker omega=" << omega << " c=" << c << " <T>=" << r.mean_T << " " << cls
                  << " (curve predicts " << pred << ")\n";
      }
    }
    plot.series("fast", "markers.csv", "omega", "c", "points", "class:fast");
    plot.series("slow", "markers.csv", "omega", "c", "points", "class:slow");
  }
  plot.write(ctx.file("bif.plot"), ctx.header());
}

// ---- gains-check

void cmd_gains_check(const Context& ctx) {
  const double mu = ctx.cfg.model.mu;
  CsvWriter w(ctx.file("gains.csv"), ctx.header(),
              {"m1", "s11", "alpha0", "alpha0_oracle", "alpha1", "alpha1_fd"});
  double e0 = 0.0, e1 = 0.0;
  const double h = 1e-6;
  for (double s11 : {1e-4, 1e-2, 0.1, 1.0, 10.0}) {
    for (int i = -30; i <= 30; ++i) {
      const double m1 = 0.1 * i;
      const GainInput in{m1, s11, mu};
      const double a0 = alpha0(in), a0o = alpha0_oracle(in);
      const double a1 = alpha1(in);
      const double fd = (alpha0({m1 + h, s11, mu}) - alpha0({m1 - h, s11, mu})) / (2.0 * h);
      w.row({m1, s11, a0, a0o, a1, fd});
      e0 = std::max(e0, std::abs(a0 - a0o));
      e1 = std::max(e1, std::abs(a1 - fd));
    }
  }
  std::cout << "gains-check: max |alpha0 - oracle| = " << e0 << ", max |alpha1 - fd| = " << e1
            << "\n";
}

int report(const char* kind, const std::string& msg, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", msg}, {"exit", code}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Common-noise synchronization of dead-zone oscillators: simulation, moment "
               "equations, periodic orbits and saddle-node continuation."};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Sectioned key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides sim.seed)");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--set", g.overrides, "Override a config value: section.key=value (repeatable)")
      ->take_all();

  SimulateOpts sim_opt;
  auto* simulate = app.add_subcommand("simulate", "Common-noise trajectories and error series");
  simulate->add_option("--density-paths", sim_opt.density_paths,
                       "Independent paths per initial condition for density histograms (0: off)");
  simulate->add_option("--density-time", sim_opt.density_time,
                       "Snapshot time of the density histograms (default sim.t_end)");
  auto* mct = app.add_subcommand("mct", "Mean convergence time over the [mct] omegas x cs grid");
  auto* sweep = app.add_subcommand("sweep", "Forward and backward frequency sweeps of the moment equations");
  auto* poincare = app.add_subcommand("poincare", "Poincare plot, attractor class and fixed point");
  bool markers = false;
  auto* bif = app.add_subcommand("bif", "Saddle-node detection and continuation in c");
  bif->add_flag("--markers", markers, "Also classify the [mct] grid as fast/slow by <T>");
  auto* gains = app.add_subcommand("gains-check", "Closed-form gains against quadrature and FD");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    const auto left = app.remaining();
    if (app.get_subcommands().empty() && !left.empty())
      return report("usage", "unknown subcommand '" + left.front() + "'", kUsage);
    return report("usage", e.what(), kUsage);
  }

  try {
    auto* sub = app.get_subcommands().front();
    const Context ctx = resolve(g, sub->get_name());
    if (sub == simulate) cmd_simulate(ctx, sim_opt);
    else if (sub == mct) cmd_mct(ctx);
    else if (sub == sweep) cmd_sweep(ctx);
    else if (sub == poincare) cmd_poincare(ctx);
    else if (sub == bif) cmd_bif(ctx, markers);
    else if (sub == gains) cmd_gains_check(ctx);
  } catch (const ConfigError& e) {
    return report("config", e.what(), kConfig);
  } catch (const ContinuationError& e) {
    return report("continuation", e.what(), kNumerical);
  } catch (const DivergenceError& e) {
    return report("divergence", e.what(), kNumerical);
  } catch (const DomainError& e) {
    return report("domain", e.what(), kNumerical);
  } catch (const OutputError& e) {
    return report("io", e.what(), kIo);
  } catch (const fs::filesystem_error& e) {
    return report("io", e.what(), kIo);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), kRuntime);
  }
  return kOk;
}
