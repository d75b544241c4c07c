// Acceptance suite: one PASS/FAIL line per criterion with the measured values.
// Usage: acceptance [--criterion N]   (no argument runs all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nsync/nsync.hpp"

using namespace nsync;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

const BifurcationPoint& fold_c004() {
  static const BifurcationPoint b = detect_saddle_node(0.88, 0.96, 0.04, 1, MdeParams{});
  return b;
}

Outcome c1_gains() {
  double e0 = 0.0, e1 = 0.0;
  const double h = 1e-6, mu = 0.7;
  for (double s11 : {1e-4, 1e-2, 0.1, 1.0, 10.0}) {
    for (int i = -30; i <= 30; ++i) {
      const double m1 = 0.1 * i;
      const GainInput in{m1, s11, mu};
      e0 = std::max(e0, std::abs(alpha0(in) - alpha0_oracle(in)));
      const double fd = (alpha0({m1 + h, s11, mu}) - alpha0({m1 - h, s11, mu})) / (2.0 * h);
      e1 = std::max(e1, std::abs(alpha1(in) - fd));
    }
  }
  return {e0 <= 1e-8 && e1 <= 1e-5,
          format("max|alpha0-quadrature|=%.3e (<=1e-8) max|alpha1-FD|=%.3e (<=1e-5)", e0, e1)};
}

Outcome c2_jacobian() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0, worst_raw = 0.0;
  for (double w : {0.8, 0.9, 0.95}) {
    MdeParams p;
    p.omega = w;
    for (int k = 0; k < 10; ++k) {
      const double s11 = 0.5 + 11.5 * U(rng), s22 = 0.5 + 7.5 * U(rng);
      const MomentState q{3.0 * U(rng), -3.0 + 6.0 * U(rng), s11,
                          (U(rng) - 0.5) * std::sqrt(s11 * s22), s22};
      const Mat5 J = poincare_map_with_jacobian(q, p).monodromy;
      Mat5 F;
      for (int j = 0; j < 5; ++j) {
        const double hj = 1e-6 * (1.0 + std::abs(q.vec()(j)));
        Vec5 a = q.vec(), b = q.vec();
        a(j) += hj;
        b(j) -= hj;
        F.col(j) = (poincare_map(MomentState::from(a), p).vec() -
                    poincare_map(MomentState::from(b), p).vec()) / (2.0 * hj);
      }
      const double floor = 1e-3 * F.cwiseAbs().maxCoeff();
      for (int i = 0; i < 25; ++i) {
        const double d = std::abs(J(i) - F(i));
        worst = std::max(worst, d / std::max(std::abs(F(i)), floor));
        worst_raw = std::max(worst_raw, d / std::abs(F(i)));
      }
    }
  }
  return {worst_raw <= 1e-4,
          format("max entrywise relative error=%.3e (<=1e-4); floored at 1e-3*max|FD|: %.3e",
                 worst_raw, worst)};
}

Outcome c3_fixed_point() {
  MdeParams p;
  p.P = 0.0;
  const auto r = find_fixed_point({1.1, 0.1, 0.01, 0.0, 0.01}, 1, p);
  const Vec5 target = (Vec5() << 1.0, 0.0, 0.0, 0.0, 0.0).finished();
  const double dist = (r.q_bar.vec() - target).cwiseAbs().maxCoeff();
  double rho = 0.0;
  for (const auto& s : r.multipliers) rho = std::max(rho, std::abs(s));
  return {r.converged() && r.residual <= 1e-10 && dist <= 1e-8 && rho < 1.0,
          format("status=%s residual=%.3e |q-(1,0,0,0,0)|=%.3e max|multiplier|=%.6f iterations=%d",
                 to_string(r.status), r.residual, dist, rho, r.iterations)};
}

Outcome c4_fold() {
  const auto& b = fold_c004();
  return {b.omega_star >= 0.90 && b.omega_star <= 0.92,
          format("omega*=%.6f (required [0.90, 0.92]) res_fp=%.2e |P(1)|=%.2e", b.omega_star,
                 b.res_fp, b.res_p1)};
}

Outcome c5_hysteresis() {
  const MomentState q0{0.5, 0.0, 0.01, 0.0, 0.01};
  const auto fwd = sweep_frequency(0.7, 1.0, 120, SweepDirection::forward, MdeParams{}, q0);
  const auto bwd = sweep_frequency(0.7, 1.0, 120, SweepDirection::backward, MdeParams{}, q0);
  const std::size_t n = fwd.size();
  // longest run of grid points where the branches differ by more than 10%
  std::size_t best_lo = 0, best_len = 0, run_lo = 0, run_len = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = fwd[i].ptp_msq, b = bwd[n - 1 - i].ptp_msq;
    if (std::abs(f - b) > 0.1 * std::max(f, b)) {
      if (run_len == 0) run_lo = i;
      if (++run_len > best_len) best_len = run_len, best_lo = run_lo;
    } else {
      run_len = 0;
    }
  }
  const bool has_interval = best_len >= 2;
  const double h_lo = has_interval ? fwd[best_lo].omega : 0.0;
  const double h_hi = has_interval ? fwd[best_lo + best_len - 1].omega : 0.0;
  const bool overlaps = has_interval && h_lo <= 0.92 && h_hi >= 0.78;

  std::size_t drop = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (fwd[i].ptp_msq - fwd[i + 1].ptp_msq > fwd[drop].ptp_msq - fwd[drop + 1].ptp_msq) drop = i;
  const double jump = 0.5 * (fwd[drop].omega + fwd[drop + 1].omega);
  const double gap = std::abs(jump - fold_c004().omega_star);
  return {overlaps && gap <= 0.02,
          format("hysteresis on [%.4f, %.4f] (must overlap [0.78, 0.92]); forward jump at %.5f "
                 "(drop %.3f -> %.3f), |jump - omega*|=%.4f (<=0.02)",
                 h_lo, h_hi, jump, fwd[drop].ptp_msq, fwd[drop + 1].ptp_msq, gap)};
}

Outcome c6_curve() {
  const auto curve = trace_bifurcation_set(fold_c004(), 0.03, 0.06, 1e-3, MdeParams{});
  double fp = 0.0, p1 = 0.0, unity = 0.0;
  for (const auto& b : curve.points) {
    fp = std::max(fp, b.res_fp);
    p1 = std::max(p1, b.res_p1);
    unity = std::max(unity, b.unity_distance);
  }
  const bool covered = curve.notes.empty() && curve.points.size() == 31 &&
                       std::abs(curve.points.front().c - 0.03) < 1e-12 &&
                       std::abs(curve.points.back().c - 0.06) < 1e-12;
  return {covered && fp <= 1e-8 && p1 <= 1e-8 && unity <= 1e-5,
          format("%zu points c=[%.4f, %.4f]; max res_fp=%.2e max |P(1)|=%.2e max unity dist=%.2e; "
                 "omega*(0.03)=%.5f omega*(0.06)=%.5f",
                 curve.points.size(), curve.points.front().c, curve.points.back().c, fp, p1, unity,
                 curve.points.front().omega_star, curve.points.back().omega_star)};
}

MctConfig desk_mct() {
  MctConfig cfg;
  cfg.K = 20;
  return cfg;
}

double mct_at(double omega, double c, std::uint64_t seed) {
  OscillatorParams p;
  p.c = c;
  return mean_convergence_time(RandomPhase{0.2, omega, 2e-5}, p, desk_mct(), seed, workers()).mean_T;
}

Outcome c7_contrast() {
  const double slow = mct_at(0.8, 0.04, 7), fast = mct_at(0.95, 0.04, 7);
  const double ratio = slow / fast;
  return {slow == desk_mct().t_max && fast < 500.0 && ratio >= 6.0,
          format("<T>(0.8)=%.1f (must equal t_max=3000) <T>(0.95)=%.1f (<500) ratio=%.2f (>=6)", slow,
                 fast, ratio)};
}

Outcome c8_fold_predicts() {
  const auto curve = trace_bifurcation_set(fold_c004(), 0.03, 0.06, 1e-3, MdeParams{});
  int agree = 0, total = 0;
  std::string grid;
  for (double c : {0.03, 0.04, 0.05, 0.06}) {
    const double ws = *omega_star_at(curve, c);
    for (int i = 0; i < 7; ++i) {
      const double omega = 0.86 + 0.02 * i;
      const double T = mct_at(omega, c, 11);
      const bool slow = T >= 1e3, predicted_slow = omega < ws;
      agree += slow == predicted_slow;
      ++total;
      grid += format(" (%.2f,%.2f):%.0f%s", omega, c, T, slow == predicted_slow ? "" : "*");
    }
  }
  const double frac = static_cast<double>(agree) / total;
  return {frac >= 0.8, format("agreement %d/%d=%.3f (>=0.8); <T> per point, * = disagreement:%s",
                              agree, total, frac, grid.c_str())};
}

Outcome c9_brownian() {
  const auto [mean, se] = brownian_cos_average(1.0, 1.0, 100000, 0.005, 99);
  const double z = std::abs(mean - std::exp(-0.5)) / se;
  return {z <= 3.0, format("E[cos B_1]=%.6f exp(-1/2)=%.6f se=%.2e z=%.2f (<=3)", mean,
                           std::exp(-0.5), se, z)};
}

Outcome c10_exactness() {
  CommonNoiseEnsemble ens({{2.0, 2.0}, {2.0, 2.0}}, RandomPhase{}, OscillatorParams{}, 0.005, 5);
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    ens.step();
    const auto& s = ens.states();
    worst = std::max({worst, std::abs(s[0].x1 - s[1].x1), std::abs(s[0].x2 - s[1].x2)});
  }
  return {worst == 0.0, format("max error over 1e6 steps=%.17g (must be exactly 0)", worst)};
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"gains oracle equivalence", 1, c1_gains},
      {"variational Jacobian", 10, c2_jacobian},
      {"known fixed point", 10, c3_fixed_point},
      {"saddle-node location", 60, c4_fold},
      {"hysteresis and jump consistency", 300, c5_hysteresis},
      {"bifurcation-curve validity", 600, c6_curve},
      {"slow/fast convergence contrast", 1800, c7_contrast},
      {"fold predicts slowness", 7200, c8_fold_predicts},
      {"Brownian-average law", 10, c9_brownian},
      {"common-noise exactness", 10, c10_exactness},
  };
  int first = 1, last = static_cast<int>(all.size());
  if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) {
    first = last = std::atoi(argv[2]);
    if (first < 1 || first > static_cast<int>(all.size())) {
      std::fprintf(stderr, "criterion must be 1..%zu\n", all.size());
      return 2;
    }
  } else if (argc != 1) {
    std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
    return 2;
  }

  int failed = 0;
  for (int i = first; i <= last; ++i) {
    const auto& c = all[i - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d (%s): %s; runtime %.2fs (budget %.0fs%s)\n", pass ? "PASS" : "FAIL",
                i, c.name, o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
