// ddfc: run the funnel/MPC benchmark from the command line.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ddfc/config.hpp"
#include "ddfc/csv.hpp"
#include "ddfc/errors.hpp"
#include "ddfc/funnel.hpp"
#include "ddfc/kernels.hpp"
#include "ddfc/lti.hpp"
#include "ddfc/scenarios.hpp"
#include "ddfc/supervisor.hpp"

namespace fs = std::filesystem;
using namespace ddfc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitViolation = 2;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string scenario;
  std::string mode;
  long long L = -1;
  long long L_cap = -1;
  long long seed = -1;
  double T_end = -1.0;
  double tau = -1.0;
  double u_max = -1.0;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_file, "key = value configuration file");
  app->add_option("--set", o.sets, "override a configuration key, key=value (repeatable)");
  app->add_option("--scenario", o.scenario, "named scenario (mass-on-car)");
  app->add_option("--mode", o.mode, "fixed | adaptive | zoh-only");
  app->add_option("--L", o.L, "fixed prediction horizon");
  app->add_option("--L-cap", o.L_cap, "upper limit of the adaptive horizon");
  app->add_option("--seed", o.seed, "excitation seed");
  app->add_option("--T-end", o.T_end, "final time");
  app->add_option("--tau", o.tau, "sampling time (default: maximal admissible)");
  app->add_option("--u-max", o.u_max, "input bound of the safe region");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.config_file.empty() ? default_benchmark() : load_config(o.config_file);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.scenario.empty()) cfg.scenario = o.scenario;
  if (!o.mode.empty()) cfg.mode = parse_mode(o.mode);
  if (o.L >= 0) cfg.L = o.L;
  if (o.L_cap >= 0) cfg.L_cap = o.L_cap;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.T_end >= 0.0) cfg.T_end = o.T_end;
  if (o.tau >= 0.0) cfg.tau = o.tau;
  if (o.u_max >= 0.0) cfg.u_max = o.u_max;
  return cfg;
}

fs::path output_dir() {
  const char* env = std::getenv("DDFC_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

fs::path default_name(const ExperimentConfig& cfg) {
  return output_dir() / (cfg.scenario + "_" + std::string(to_string(cfg.mode)) + "_seed" +
                         std::to_string(cfg.seed) + ".csv");
}

struct RunSummary {
  std::uint64_t seed = 0;
  double max_ratio = 0.0;
  int zoh = 0;
  int spikes = 0;
  double seconds = 0.0;
  std::size_t rows = 0;
  fs::path file;
};

RunSummary run_one(const ExperimentConfig& cfg, const fs::path& out) {
  const ContinuousLTI plant = make_plant(cfg);
  const ControllerConfig ctrl = make_controller(cfg, plant);
  const TrajectoryLog log = run(plant, ctrl);
  RunSummary s;
  s.seed = cfg.seed;
  for (const auto& r : log.records) {
    s.max_ratio = std::max({s.max_ratio, r.e.front().norm(), r.intersample_ratio});
  }
  s.zoh = zoh_activations(log);
  s.spikes = count_spikes(log, cfg.u_max);
  s.seconds = log.solve_seconds;
  s.rows = log.records.size();
  s.file = out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw ConfigError("cannot write " + out.string());
  write_csv(f, to_rows(log, ctrl.funnel));
  return s;
}

void print_summary(const RunSummary& s) {
  std::cout << "seed " << s.seed << ": rows " << s.rows << ", max |e|/funnel " << s.max_ratio
            << ", zoh activations " << s.zoh << ", spikes " << s.spikes << ", time " << s.seconds
            << " s -> " << s.file.string() << '\n';
}

int cmd_run(const CommonOptions& o, const std::string& out) {
  const ExperimentConfig cfg = resolve(o);
  fs::path path = !out.empty() ? fs::path(out) : !cfg.output.empty() ? fs::path(cfg.output) : default_name(cfg);
  print_summary(run_one(cfg, path));
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o, long long first, long long count, int jobs) {
  const ExperimentConfig base = resolve(o);
  if (count < 1 || first < 0) throw ConfigError("sweep: need --seeds >= 1 and --first-seed >= 0");
  std::vector<RunSummary> results(static_cast<std::size_t>(count));
  std::vector<std::string> errors(results.size());
  std::vector<int> codes(results.size(), kExitOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      ExperimentConfig cfg = base;
      cfg.seed = static_cast<std::uint64_t>(first) + i;
      try {
        results[i] = run_one(cfg, default_name(cfg));
      } catch (const FunnelViolation& e) {
        errors[i] = e.what();
        codes[i] = kExitViolation;
      } catch (const std::exception& e) {
        errors[i] = e.what();
        codes[i] = kExitConfig;
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_threads = static_cast<std::size_t>(jobs > 0 ? jobs : static_cast<int>(hw));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(n_threads, results.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  int code = kExitOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (codes[i] != kExitOk) {
      std::cout << "seed " << first + static_cast<long long>(i) << ": " << errors[i] << '\n';
      code = std::max(code, codes[i]);
    } else {
      print_summary(results[i]);
    }
  }
  return code;
}

int cmd_constants(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  const ContinuousLTI plant = make_plant(cfg);
  const ControllerConstants c = make_constants(cfg, plant);
  std::cout << "mode        " << to_string(cfg.mode) << '\n';
  std::cout << "gamma       [" << c.bounds.gamma_min << ", " << c.bounds.gamma_max << "]\n";
  for (std::size_t k = 0; k < c.eps.size(); ++k) {
    std::cout << "eps_hat_" << k + 1 << "   " << c.eps_hat[k] << '\n';
    std::cout << "eps_" << k + 1 << "       " << c.eps[k] << '\n';
    std::cout << "mu_" << k + 1 << "        " << c.mu[k] << '\n';
    std::cout << "gamma_bar_" << k + 1 << " " << c.gamma_bar[k] << '\n';
  }
  std::cout << "L_max       " << c.L_max << '\n';
  std::cout << "kappa0      " << c.kappa0 << '\n';
  std::cout << "beta_min    " << c.beta_min << '\n';
  std::cout << "beta        " << c.beta << '\n';
  std::cout << "kappa1      " << c.kappa1 << '\n';
  std::cout << "lambda      " << c.lambda << '\n';
  std::cout << "u_max       " << c.u_max << '\n';
  std::cout << "tau         " << c.tau << '\n';
  std::cout << "input bound " << c.input_bound() << '\n';
  return kExitOk;
}

int cmd_check(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  const ContinuousLTI plant = make_plant(cfg);
  const int r = relative_degree(plant);
  const ByrnesIsidoriForm bif = byrnes_isidori(plant);
  const HighGainBounds b = high_gain_bounds(bif.Gamma);
  const Eigen::VectorXcd eig = bif.K.eigenvalues();
  std::cout << "states          " << plant.states() << '\n';
  std::cout << "channels        " << plant.channels() << '\n';
  std::cout << "relative degree " << r << '\n';
  std::cout << "Gamma           " << bif.Gamma.format(Eigen::IOFormat(8, 0, " ", "; ")) << '\n';
  std::cout << "gamma bounds    [" << b.gamma_min << ", " << b.gamma_max << "]\n";
  std::cout << "zero dynamics   ";
  for (Eigen::Index i = 0; i < eig.size(); ++i) std::cout << eig(i) << ' ';
  std::cout << '\n';
  std::cout << "minimum phase   " << (minimum_phase(plant) ? "yes" : "no") << '\n';
  const ControllerConstants c = make_constants(cfg, plant);
  const double lmax = l_max_oracle(bif, make_funnel(cfg), make_reference(cfg, r), c, Alpha::standard());
  std::cout << "L_max oracle    " << lmax << " (configured " << cfg.L_max << ")\n";
  std::cout << "simd            " << kernels::to_string(kernels::active().isa) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Funnel-safe data-driven MPC benchmark"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, const_opts, check_opts;
  std::string out;
  auto* run_cmd = app.add_subcommand("run", "simulate one closed loop and write its CSV trace");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--out", out, "CSV path (default: $DDFC_OUTPUT_DIR/<scenario>_<mode>_seed<seed>.csv)");

  long long first = 1, count = 20;
  int jobs = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a range of seeds in parallel");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--first-seed", first, "first seed");
  sweep_cmd->add_option("--seeds", count, "number of seeds");
  sweep_cmd->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");

  auto* const_cmd = app.add_subcommand("constants", "print the controller constants");
  add_common(const_cmd, const_opts);
  auto* check_cmd = app.add_subcommand("check", "structural analysis of the plant");
  add_common(check_cmd, check_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, first, count, jobs);
    if (*const_cmd) return cmd_constants(const_opts);
    if (*check_cmd) return cmd_check(check_opts);
  } catch (const FunnelViolation& e) {
    std::cerr << "funnel violation at t = " << e.time() << ": " << e.what() << '\n';
    return kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
