// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <uam/harness.hpp>

#include "../support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#ifndef UAM_SCENARIO_DIR
#define UAM_SCENARIO_DIR "scenarios"
#endif

using namespace uam;

namespace {

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-34s %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Bitmap of the direct conditions, same layout as GridBitmap.
std::vector<char> oracle_bitmap(int cond, const LoopParams& p, const GainBox& box, int N) {
  std::vector<char> bits(static_cast<std::size_t>(N + 1) * (N + 1));
  for (int j = 0; j <= N; ++j)
    for (int i = 0; i <= N; ++i) {
      const double kf = box.kf_min + (box.kf_max - box.kf_min) * i / N;
      const double bf = box.bf_min + (box.bf_max - box.bf_min) * j / N;
      bits[static_cast<std::size_t>(j) * (N + 1) + i] =
          oracle::no_switch(cond, p.k_p, p.k_d, kf, bf, p.k_e, p.b_e, p.m_t);
    }
  return bits;
}

bool uniform_3x3(const std::vector<char>& b, int N, int i, int j) {
  const char v = b[static_cast<std::size_t>(j) * (N + 1) + i];
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      const int ii = i + di, jj = j + dj;
      if (ii < 0 || jj < 0 || ii > N || jj > N) continue;
      if (b[static_cast<std::size_t>(jj) * (N + 1) + ii] != v) return false;
    }
  return true;
}

void region_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> ke(50.0, 500.0), be(0.1, 1.0), m(3.0, 5.0);
  const GainBox box;
  const int N = 125;
  long false_cert = 0, interior = 0, interior_mismatch = 0, certified = 0;
  int nonempty = 0;
  for (int d = 0; d < 200; ++d) {
    LoopParams p;
    p.k_e = ke(rng);
    p.b_e = be(rng);
    p.m_t = m(rng);
    for (int c = 1; c <= 3; ++c) {
      const GainRegion r = region_explicit(kConditions[c - 1], p, box);
      if (!r.empty()) ++nonempty;
      const GridBitmap ex = rasterize(r, box, N);
      const std::vector<char> ref = oracle_bitmap(c, p, box, N);
      for (int j = 0; j <= N; ++j)
        for (int i = 0; i <= N; ++i) {
          const std::size_t k = static_cast<std::size_t>(j) * (N + 1) + i;
          if (ex.bits[k]) {
            ++certified;
            if (!ref[k]) ++false_cert;
          }
          if (uniform_3x3(ex.bits, N, i, j) && uniform_3x3(ref, N, i, j)) {
            ++interior;
            if (ex.bits[k] != ref[k]) ++interior_mismatch;
          }
        }
    }
  }
  const double secs = seconds_since(t0);
  report(1, "region explicit vs oracle", false_cert == 0 && interior_mismatch == 0 && secs < 120,
         fmt("false_cert=%ld certified=%ld interior_mismatch=%ld/%ld nonempty_regions=%d "
             "time=%.1fs",
             false_cert, certified, interior_mismatch, interior, nonempty, secs));
}

void lambda_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  using S = oracle::Spectrum;
  std::mt19937_64 rng(2002);
  int total = 0, combos = 0;
  double worst = 0.0;
  std::string missing;
  for (S a : {S::Real, S::Repeated, S::Complex})
    for (S b : {S::Real, S::Repeated, S::Complex}) {
      int got = 0;
      for (int attempt = 0; attempt < 50000 && got < 8; ++attempt) {
        const auto [K1, B1] = oracle::draw_mode(a, rng);
        const auto [K2, B2] = oracle::draw_mode(b, rng);
        const auto o = oracle::cycle_contraction(K1, B1, K2, B2);
        if (!o) continue;
        const double f = lambda_pair({K1, B1, K2, B2}).product;
        worst = std::max(worst, std::abs(f - *o));
        ++got;
      }
      total += got;
      if (got > 0) ++combos;
      else missing += std::string(" ") + oracle::name(a) + "/" + oracle::name(b);
    }
  const double secs = seconds_since(t0);
  report(2, "lambda formula vs cycle oracle", total >= 50 && combos == 9 && worst < 1e-3 && secs < 60,
         fmt("sets=%d combos=%d/9 worst_abs_err=%.2e time=%.1fs%s", total, combos, worst, secs,
             missing.c_str()));
}

void scheduler_safety() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> ke(50.0, 500.0), be(0.1, 1.0), m(3.0, 5.0);
  const GainBox box;
  int outside = 0, unsafe = 0;
  std::map<Provenance, int> hist;
  for (int i = 0; i < 10000; ++i) {
    const double k = ke(rng), b = be(rng), mm = m(rng);
    const ScheduleResult s = schedule(23.5, 19.5, k, b, mm, box);
    ++hist[s.provenance];
    if (!box.contains(s.k_f, s.b_f)) ++outside;
    if (s.provenance == Provenance::NSCentroid &&
        !oracle::no_switch(static_cast<int>(*s.condition) + 1, 23.5, 19.5, s.k_f, s.b_f, k, b, mm))
      ++unsafe;
  }
  const double secs = seconds_since(t0);
  report(3, "scheduler safety (1e4 draws)", outside == 0 && unsafe == 0 && secs < 60,
         fmt("outside_box=%d ns_violations=%d ns=%d pattern=%d fallback=%d time=%.1fs", outside,
             unsafe, hist[Provenance::NSCentroid], hist[Provenance::PatternSearch],
             hist[Provenance::Fallback], secs));
}

void benchmark() {
  const BenchResult at = bench_scheduler({125, 175}, 21);
  const BenchResult sweep = bench_scheduler({60, 80, 100, 125, 150, 175, 200, 250}, 21);
  const bool ok = at.rows[0].ratio() >= 10.0 && at.rows[1].ratio() >= 10.0 &&
                  sweep.grid_exponent >= 1.7 && sweep.grid_exponent <= 2.3;
  report(4, "grid vs explicit timing", ok,
         fmt("ratio@125=%.1f ratio@175=%.1f grid_exponent=%.2f (grid %.3gs / explicit %.3gs at "
             "175)",
             at.rows[0].ratio(), at.rows[1].ratio(), sweep.grid_exponent,
             at.rows[1].grid_median_s, at.rows[1].explicit_median_s));
}

struct Timed {
  Metrics m;
  double wall;
};

Timed simulate(const std::string& name) {
  const Scenario sc = load_scenario(std::string(UAM_SCENARIO_DIR) + "/" + name + ".json");
  const auto t0 = std::chrono::steady_clock::now();
  const RunLog log = run(sc);
  const double wall = seconds_since(t0);
  return {metrics(log, sc.settle_window), wall};
}

void experiment1_slow() {
  const Timed r = simulate("exp1_slow");
  const bool ok = r.m.settled() && r.m.force_rms < 0.3 && r.m.breaks_after_settle == 0 && r.wall < 10.0;
  report(5, "slow approach, constant force", ok,
         fmt("force_rms=%.4fN breaks_after_settle=%d settle_start=%.2fs wall=%.2fs", r.m.force_rms,
             r.m.breaks_after_settle, r.m.settle_start, r.wall));
}

void experiment1_fast() {
  const Timed r = simulate("exp1_fast");
  const bool ok = r.m.settled() && r.m.breaks_after_settle == 0 && r.m.force_rms < 0.5 &&
                  std::abs(r.m.phase_lag) < 0.2;
  report(6, "fast approach, sinusoidal force", ok,
         fmt("switches=%d breaks_after_settle=%d force_rms=%.4fN lag=%.3fs", r.m.contact_switches,
             r.m.breaks_after_settle, r.m.force_rms, r.m.phase_lag));
}

void experiment2() {
  const Timed v = simulate("exp2_vertical");
  const Timed t = simulate("exp2_tilted");
  const bool ok = v.m.settled() && t.m.settled() && v.m.motion_rms < 0.02 && v.m.force_rms < 0.5 &&
                  t.m.motion_rms < 0.02 && t.m.force_rms < 0.5 &&
                  t.m.contact_force_rms <= v.m.contact_force_rms;
  report(7, "sliding on vertical/tilted surface", ok,
         fmt("vertical: motion=%.4fm force=%.4fN; tilted: motion=%.4fm force=%.4fN; "
             "contact-phase force rms tilted=%.4f vertical=%.4f",
             v.m.motion_rms, v.m.force_rms, t.m.motion_rms, t.m.force_rms, t.m.contact_force_rms,
             v.m.contact_force_rms));
}

void rlse_convergence() {
  const RlseParams prm;
  const SurfaceModel s = make_surface(0.0, 0.0, Vec3::Zero(), 200.0, 0.5);
  EnvEstimate e = EnvEstimate::initial(prm.bounds);
  const double dt = 2e-3;
  double max_eig = 0.0, settled_at = -1.0;
  for (int i = 1; i <= 15000; ++i) {
    const double t = i * dt;
    const double w1 = 2 * kPi * 0.5, w2 = 2 * kPi * 1.7;
    const double x = 0.02 + 0.008 * std::sin(w1 * t) + 0.004 * std::sin(w2 * t);
    const double xd = 0.008 * w1 * std::cos(w1 * t) + 0.004 * w2 * std::cos(w2 * t);
    e = rlse_update(e, x, xd, contact_force(x, xd, s), 0.0, prm, dt);
    max_eig = std::max(max_eig, max_eigenvalue(e.P));
    const bool in = std::abs(e.k_hat - 200.0) <= 2.0 && std::abs(e.b_hat - 0.5) <= 0.025;
    if (in && settled_at < 0.0) settled_at = t;
    if (!in) settled_at = -1.0;
  }
  const bool ok = settled_at >= 0.0 && settled_at <= 10.0 && max_eig <= prm.rho_max;
  report(8, "RLSE convergence", ok,
         fmt("within 1%%/5%% from t=%.2fs, final k=%.3f b=%.4f, max lambda(P)=%.1f", settled_at,
             e.k_hat, e.b_hat, max_eig));
}

void dob_closed_forms() {
  const double L = 10.0, dt = 2e-3;
  GainSet g;
  g.L_f = L;
  const SurfaceModel s = make_surface(0.0, 0.0, Vec3{5, 0, 0}, 200, 0.5);
  auto errors = [&](double d0, double slope, int n) {
    DOBState dob;
    std::vector<double> err;
    for (int k = 0; k <= n; ++k) {
      const double t = k * dt;
      Measurement meas;
      meas.x_dot_f = (d0 * t + 0.5 * slope * t * t) / g.m_bar;
      const DOBOutput o = dob_update(dob, meas, 0.0, Vec2::Zero(), g, false, s, dt);
      dob = o.state;
      err.push_back(d0 + slope * t - o.delta_f_hat);
    }
    return err;
  };
  const auto ec = errors(2.0, 0.0, 1500);
  double worst = 0.0;
  for (std::size_t k = 0; k < ec.size(); ++k)
    worst = std::max(worst, std::abs(ec[k] - oracle::dob_constant_error(2.0, L, k * dt)));
  const double slope = 1.5;
  const auto er = errors(0.0, slope, 3000);
  const double rel = std::abs(er.back() - slope / L) / (slope / L);
  report(9, "disturbance observer closed forms", worst < 1e-6 && rel < 0.01,
         fmt("const |err-e^{-Lt}|max=%.2e ramp steady err=%.6f (expect %.6f, rel %.2e)", worst,
             er.back(), slope / L, rel));
}

void extraction_round_trip() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> ang(-1.3, 1.3), yaw(-kPi, kPi), T(1.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 phi{ang(rng), ang(rng), yaw(rng)};
    const Vec3 u = T(rng) * rotation(phi) * kE3;
    const ThrustCommand c = extract_inputs(u, phi);
    const Vec3 back = c.thrust * rotation(Vec3{c.roll_r, c.pitch_r, phi.z()}) * kE3;
    worst = std::max(worst, (back - u).norm());
  }
  report(10, "input extraction round trip", worst < 1e-10, fmt("max residual=%.2e N", worst));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> checks{
      region_oracle, lambda_oracle,    scheduler_safety, benchmark,        experiment1_slow,
      experiment1_fast, experiment2, rlse_convergence, dob_closed_forms, extraction_round_trip};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      checks[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), "exception", false, e.what());
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
