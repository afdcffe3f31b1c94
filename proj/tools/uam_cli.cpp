#include <uam/harness.hpp>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string scenario;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

uam::Metrics run_one(uam::Scenario sc, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const uam::RunLog log = uam::run(sc);
  {
    auto os = open_out(out_dir / (sc.name + "_log.csv"));
    uam::write_log_csv(os, log);
  }
  {
    auto os = open_out(out_dir / (sc.name + "_events.csv"));
    uam::write_events_csv(os, log);
  }
  const uam::Metrics m = uam::metrics(log, sc.settle_window);
  auto os = open_out(out_dir / (sc.name + "_metrics.txt"));
  uam::write_metrics(os, m);
  return m;
}

uam::Scenario prepare(const std::string& path, const RunOptions& o) {
  uam::Scenario sc = uam::load_scenario(path);
  if (o.seed) sc.seed = *o.seed;
  if (o.duration) sc.duration = *o.duration;
  sc.validate();
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aerial manipulator motion/force control simulation"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Simulate one scenario; write log, events and metrics");
  run->add_option("-s,--scenario", ro.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", ro.out_dir, "Output directory");
  run->add_option("--seed", ro.seed, "RNG seed override");
  run->add_option("--duration", ro.duration, "Duration override, s")->check(CLI::NonNegativeNumber);

  std::string log_path;
  double settle = 3.0;
  auto* met = app.add_subcommand("metrics", "Summarize a log CSV as key=value lines");
  met->add_option("-l,--log", log_path, "Log CSV")->required()->check(CLI::ExistingFile);
  met->add_option("--settle", settle, "Continuous-contact settling window, s");

  std::vector<int> Ns{125, 175};
  int reps = 21;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench-scheduler", "Time grid vs explicit region computation");
  bench->add_option("-N,--N", Ns, "Grid resolutions")->check(CLI::PositiveNumber);
  bench->add_option("--reps", reps, "Repetitions per N")->check(CLI::Range(20, 100000));
  bench->add_option("-o,--out", bench_out, "CSV output file (default stdout)");

  int region_N = 125;
  std::string region_out = "regions";
  uam::LoopParams lp;
  uam::GainBox box;
  auto* reg = app.add_subcommand("region-export", "Write stable-gain polygons and grid bitmaps");
  reg->add_option("-o,--out", region_out, "Output directory");
  reg->add_option("-N,--N", region_N, "Grid resolution")->check(CLI::PositiveNumber);
  reg->add_option("--ke", lp.k_e, "Environment stiffness");
  reg->add_option("--be", lp.b_e, "Environment damping");
  reg->add_option("--mass", lp.m_t, "Nominal mass");
  reg->add_option("--kp", lp.k_p, "Free-motion proportional gain");
  reg->add_option("--kd", lp.k_d, "Free-motion derivative gain");

  std::vector<std::string> sweep_paths;
  RunOptions so;
  auto* sweep = app.add_subcommand("sweep", "Run several scenarios in parallel");
  sweep->add_option("-s,--scenario", sweep_paths, "Scenario JSON files")->required()->check(CLI::ExistingFile);
  sweep->add_option("-o,--out", so.out_dir, "Output directory");
  sweep->add_option("--seed", so.seed, "RNG seed override");
  sweep->add_option("--duration", so.duration, "Duration override, s")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const uam::Scenario sc = prepare(ro.scenario, ro);
      const uam::Metrics m = run_one(sc, ro.out_dir);
      uam::write_metrics(std::cout, m);
    } else if (*met) {
      std::ifstream in(log_path);
      const uam::RunLog log = uam::read_log_csv(in);
      if (log.rows.empty()) throw std::runtime_error("log has no rows");
      uam::write_metrics(std::cout, uam::metrics(log, settle));
    } else if (*bench) {
      const uam::BenchResult b = uam::bench_scheduler(Ns, reps);
      if (bench_out.empty()) {
        uam::write_bench_csv(std::cout, b);
      } else {
        auto os = open_out(bench_out);
        uam::write_bench_csv(os, b);
      }
      std::cerr << "grid_exponent=" << b.grid_exponent << '\n';
    } else if (*reg) {
      fs::create_directories(region_out);
      for (uam::Condition c : uam::kConditions) {
        const std::string tag = uam::to_string(c);
        const uam::GainRegion r = uam::region_explicit(c, lp, box);
        auto pos = open_out(fs::path(region_out) / (tag + "_polygon.csv"));
        uam::write_region_csv(pos, r);
        auto bos = open_out(fs::path(region_out) / (tag + "_grid.csv"));
        uam::write_bitmap_csv(bos, uam::region_grid(c, lp, box, region_N));
        std::cout << tag << ".area=" << r.area << '\n';
      }
    } else if (*sweep) {
      std::vector<uam::Scenario> scs;
      for (const auto& p : sweep_paths) scs.push_back(prepare(p, so));
      std::vector<std::future<uam::Metrics>> jobs;
      for (const auto& sc : scs)
        jobs.push_back(std::async(std::launch::async, run_one, sc, fs::path(so.out_dir)));
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        const uam::Metrics m = jobs[i].get();
        std::cout << scs[i].name << ": settled=" << m.settled() << " force_rms=" << m.force_rms
                  << " motion_rms=" << m.motion_rms
                  << " breaks_after_settle=" << m.breaks_after_settle << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
