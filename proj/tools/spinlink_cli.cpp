// spinlink: desk-scale simulator of a heralded photon / Rydberg-memory
// entanglement experiment, with the statistical pipeline that turns click
// streams into the published-style figures of merit.
//
// Subcommands:
//   simulate  config -> event file
//   analyze   events + config -> summary (+ fringe/scan data files)
//   tomo      events + config -> reconstructed density matrix + fidelity
//   report    summary + reference -> z-score comparison table
//   doppler   wavelengths + speed -> dephasing time
//
// Exit status: 0 success, 1 report-threshold failure, 2 config error,
// 3 data-integrity error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spinlink/spinlink.hpp"

namespace fs = std::filesystem;
using namespace spinlink;

namespace {

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path.string());
  out << content;
}

RunConfig load_config(const std::string& path, std::uint64_t seed_override, bool has_seed,
                      int threads_override) {
  RunConfig rc = load_run_config(Config::from_file(path));
  if (has_seed) rc.seed = seed_override;
  if (threads_override > 0) rc.threads = threads_override;
  rc.validate();
  return rc;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed, int threads) {
  const RunConfig rc = load_config(config_path, seed_override, has_seed, threads);
  fs::create_directories(out_dir);
  const fs::path events = fs::path(out_dir) / "events.csv";
  simulate_to_file(rc, events.string());
  std::printf("campaign: %s\nseed: %llu\nevents_file: %s\n", campaign_name(rc.campaign),
              static_cast<unsigned long long>(rc.seed), events.string().c_str());
  return 0;
}

int run_analyze(const std::string& events_path, const std::string& config_path,
                const std::string& out_dir, std::uint64_t seed_override, bool has_seed) {
  const RunConfig rc = load_config(config_path, seed_override, has_seed, 0);
  const auto rows = read_event_file(events_path);
  const AnalysisOutput out = analyze_events(rc, rows);
  fs::create_directories(out_dir);
  const fs::path summary_path = fs::path(out_dir) / "summary.txt";
  out.summary.write(summary_path.string());
  for (const auto& [name, content] : out.files)
    write_text_file(fs::path(out_dir) / name, content);
  for (const auto& w : out.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::fputs(out.summary.to_text().c_str(), stdout);
  return 0;
}

int run_tomo(const std::string& events_path, const std::string& config_path,
             const std::string& out_dir, std::uint64_t seed_override, bool has_seed) {
  const RunConfig rc = load_config(config_path, seed_override, has_seed, 0);
  const auto rows = read_event_file(events_path);
  const TomoReport report = tomo_from_events(rc, rows);
  fs::create_directories(out_dir);
  report.summary.write((fs::path(out_dir) / "tomo_summary.txt").string());
  write_text_file(fs::path(out_dir) / "rho_mle.csv", report.rho_csv);
  std::fputs(report.summary.to_text().c_str(), stdout);
  if (!report.mle.converged)
    std::fprintf(stderr, "warning: MLE stopped at the iteration cap (grad %.3e)\n",
                 report.mle.grad_norm);
  return 0;
}

int run_report(const std::string& summary_path, const std::string& reference_path,
               const std::string& out_dir, double z_threshold) {
  const Summary summary = Summary::from_file(summary_path);
  const auto reference = read_reference_file(reference_path);
  const ComparisonReport report = compare_to_reference(summary, reference, z_threshold);
  const std::string csv = report.to_csv();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file(fs::path(out_dir) / "report.csv", csv);
  }
  std::fputs(csv.c_str(), stdout);
  std::printf("overall: %s (z threshold %.3g)\n", report.all_pass ? "PASS" : "FAIL", z_threshold);
  return report.all_pass ? 0 : 1;
}

int run_doppler(double lambda1, double lambda2, double speed) {
  const double t = doppler_dephasing_time(lambda1, lambda2, speed);
  std::printf("doppler_dephasing_time_s: %.6e\ndoppler_dephasing_time_us: %.4f\n", t, t * 1e6);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-wave entanglement simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path, events_path, summary_path, reference_path, out_dir = ".";
  std::string report_out;  // report writes a file only when --out is given
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
  double z_threshold = 3.0;
  double lambda1 = 0.0, lambda2 = 0.0, speed = 0.0;

  auto* simulate = app.add_subcommand("simulate", "generate an event file from a config");
  simulate->add_option("--config", config_path, "run configuration file")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    has_seed = true;
  });
  simulate->add_option("--threads", threads, "simulation worker count");

  auto* analyze = app.add_subcommand("analyze", "compute campaign estimators from events");
  analyze->add_option("events", events_path, "event file")->required();
  analyze->add_option("--config", config_path, "run configuration file")->required();
  analyze->add_option("--out", out_dir, "output directory");
  analyze->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    has_seed = true;
  });

  auto* tomo = app.add_subcommand("tomo", "reconstruct the two-qubit state from tomo events");
  tomo->add_option("events", events_path, "event file")->required();
  tomo->add_option("--config", config_path, "run configuration file")->required();
  tomo->add_option("--out", out_dir, "output directory");
  tomo->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    has_seed = true;
  });

  auto* report = app.add_subcommand("report", "compare a summary against reference values");
  report->add_option("summary", summary_path, "summary file")->required();
  report->add_option("--reference", reference_path, "reference value table")->required();
  report->add_option("--out", report_out, "directory for report.csv (stdout only when omitted)");
  report->add_option("--z-threshold", z_threshold, "pass/fail z threshold");

  auto* doppler = app.add_subcommand("doppler", "Doppler dephasing time from wavelengths + speed");
  doppler->add_option("lambda_coupling", lambda1, "coupling wavelength (m)")->required();
  doppler->add_option("lambda_signal", lambda2, "signal wavelength (m)")->required();
  doppler->add_option("speed", speed, "atomic speed (m/s)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(config_path, out_dir, seed, has_seed, threads);
    if (analyze->parsed()) return run_analyze(events_path, config_path, out_dir, seed, has_seed);
    if (tomo->parsed()) return run_tomo(events_path, config_path, out_dir, seed, has_seed);
    if (report->parsed()) return run_report(summary_path, reference_path, report_out, z_threshold);
    if (doppler->parsed()) return run_doppler(lambda1, lambda2, speed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataIntegrityError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
