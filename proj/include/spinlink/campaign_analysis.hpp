#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinlink/campaign.hpp"

namespace spinlink {

struct AnalysisOutput {
  Summary summary;
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
  std::vector<std::string> warnings;
};

namespace detail {

// Per-cycle click pattern, grouped and integrity-checked: rows must arrive in
// nondecreasing cycle order with at most one row per detector per cycle and a
// consistent setting within the cycle.
struct CycleGroup {
  std::int64_t cycle = 0;
  SettingKey key;
  bool d1 = false, d2 = false, d3 = false;
};

template <typename Fn>
void for_each_cycle_group(const std::vector<EventRow>& rows, Fn&& fn) {
  std::size_t i = 0;
  std::int64_t last_cycle = -1;
  while (i < rows.size()) {
    CycleGroup g;
    g.cycle = rows[i].cycle;
    if (g.cycle < last_cycle) throw DataIntegrityError("event rows not sorted by cycle");
    if (g.cycle == last_cycle) throw DataIntegrityError("split cycle group in event stream");
    last_cycle = g.cycle;
    g.key = SettingKey::make(rows[i].theta1, rows[i].theta2, rows[i].basis);
    bool seen[3] = {false, false, false};
    for (; i < rows.size() && rows[i].cycle == g.cycle; ++i) {
      const int d = static_cast<int>(rows[i].detector);
      if (seen[d]) throw DataIntegrityError("duplicate detector row in a cycle");
      seen[d] = true;
      if (!(SettingKey::make(rows[i].theta1, rows[i].theta2, rows[i].basis) == g.key))
        throw DataIntegrityError("conflicting settings within a cycle");
      if (rows[i].clicked) {
        if (rows[i].detector == DetectorId::D1) g.d1 = true;
        if (rows[i].detector == DetectorId::D2) g.d2 = true;
        if (rows[i].detector == DetectorId::D3) g.d3 = true;
      }
    }
    fn(g);
  }
}

struct TripleTally {
  std::int64_t herald = 0, h_and_a = 0, h_and_b = 0, triple = 0;
};

inline CorrelationEstimate hbt_estimate(const TripleTally& t) {
  return heralded_autocorrelation(t.herald, t.h_and_a, t.h_and_b, t.triple);
}

// Scan points keyed by the quantized theta1 column.
struct ScanPoint {
  double x = 0.0;
  std::int64_t clicks = 0;
  std::int64_t coincidences = 0;
};

inline std::string format_fringe_csv(const std::vector<std::pair<double, double>>& pts,
                                     const FringeFit& fit) {
  std::string out = "x,counts,stderr,fitted\n";
  char buf[160];
  const double b = fit.visibility * fit.mean_level;
  for (const auto& [x, y] : pts) {
    const double fitted = fit.mean_level + b * std::cos(x - fit.phase);
    std::snprintf(buf, sizeof buf, "%.6f,%.1f,%.4f,%.4f\n", x, y, std::sqrt(std::max(y, 0.0)),
                  fitted);
    out += buf;
  }
  return out;
}

inline double fringe_visibility_stderr(const std::vector<std::pair<double, double>>& pts) {
  // First-order Poisson error of the fitted contrast: sigma_V ~ sqrt(2/C_tot).
  double total = 0.0;
  for (const auto& [x, y] : pts) total += y;
  return total > 0.0 ? std::sqrt(2.0 / total) : 0.0;
}

}  // namespace detail

// Tabulated fringe scan plus its fit, ready for external plotting:
// columns (x, counts, stderr, fitted).
struct FringeScan {
  std::string label;
  std::vector<std::pair<double, double>> points;
  FringeFit fit;
};

inline std::string emit_fringe_plot_data(const FringeScan& scan) {
  return detail::format_fringe_csv(scan.points, scan.fit);
}

inline AnalysisOutput analyze_events(const RunConfig& rc, const std::vector<EventRow>& rows) {
  rc.validate();
  AnalysisOutput out;
  Summary& s = out.summary;
  s.set_meta("campaign", campaign_name(rc.campaign));
  s.set_meta("seed", std::to_string(rc.seed));
  const auto blocks = detail::build_blocks(rc);
  const std::int64_t cycles = detail::total_cycles(blocks);
  const std::int64_t cpw = rc.schedule.cycles_per_window;
  const std::int64_t windows = rc.windows > 0 ? rc.windows : (cycles + cpw - 1) / cpw;
  s.set_meta("windows", std::to_string(windows));
  s.set_meta("cycles", std::to_string(cycles));
  s.set_meta("cycles_per_window", std::to_string(cpw));
  {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", rc.schedule.window_ms());
    s.set_meta("window_ms", buf);
  }
  s.set_meta("events", std::to_string(rows.size()));

  const Transmission optics = end_to_end_transmission(rc.losses);
  s.set_metric("optical_transmission", Summary::Metric{optics.transmission, 0.0, true, -1});
  s.set_metric("optical_total_loss", Summary::Metric{optics.total_loss, 0.0, true, -1});

  const auto warn = [&](const std::string& w) { out.warnings.push_back(w); };

  switch (rc.campaign) {
    case Campaign::Chsh: {
      const CoincidenceCounts counts = count_coincidences(rows);
      const auto coincidences_at = [&](double t1, double t2) -> std::int64_t {
        const auto it = counts.by_setting.find(SettingKey::make(t1, t2, "CHSH"));
        return it == counts.by_setting.end() ? 0 : it->second.coincidences;
      };
      constexpr double kHalfPi = 1.57079632679489661923;
      const auto estimate_E = [&](double t1, double t2) {
        return chsh_E_from_counts(coincidences_at(t1, t2),
                                  coincidences_at(t1 + kHalfPi, t2 + kHalfPi),
                                  coincidences_at(t1 + kHalfPi, t2),
                                  coincidences_at(t1, t2 + kHalfPi));
      };
      const ChshAngles a;
      const auto e11 = estimate_E(a.theta1, a.theta2);
      const auto e12p = estimate_E(a.theta1, a.theta2p);
      const auto e1p2 = estimate_E(a.theta1p, a.theta2);
      const auto e1p2p = estimate_E(a.theta1p, a.theta2p);
      const auto S = chsh_S(e11, e12p, e1p2, e1p2p);
      if (!S.defined) warn("chsh: no coincidences recorded; S undefined");
      std::int64_t total_coinc = 0;
      for (const auto& [key, tally] : counts.by_setting)
        if (key.basis == "CHSH") total_coinc += tally.coincidences;
      s.set_metric("chsh_E_11", e11);
      s.set_metric("chsh_E_12p", e12p);
      s.set_metric("chsh_E_1p2", e1p2);
      s.set_metric("chsh_E_1p2p", e1p2p);
      s.set_metric("chsh_S", S, total_coinc);

      // Fig-4-style fringes: coincidence counts against theta1 per signal-2
      // basis; fitted in the doubled angle where the fringe is harmonic.
      for (const char* basis : {"H", "V", "D", "A"}) {
        const std::string label = std::string("FR_") + basis;
        std::vector<std::pair<double, double>> pts;
        for (const auto& [key, tally] : counts.by_setting)
          if (key.basis == label)
            pts.push_back({2.0 * key.theta1(), static_cast<double>(tally.coincidences)});
        std::sort(pts.begin(), pts.end());
        const std::string metric = std::string("fringe_visibility_") + basis;
        if (pts.size() < 5) {
          if (!pts.empty()) warn("chsh: fringe scan " + label + " too sparse to fit");
          s.set_metric(metric, Summary::Metric{0.0, 0.0, false, -1});
          continue;
        }
        FringeScan scan;
        scan.label = label;
        scan.points = pts;
        scan.fit = fit_fringe_visibility(pts);
        s.set_metric(metric, Summary::Metric{scan.fit.visibility,
                                             detail::fringe_visibility_stderr(pts), true, -1});
        out.files.push_back({"fringe_" + std::string(basis) + ".csv", emit_fringe_plot_data(scan)});
      }
      break;
    }

    case Campaign::WhichPath: {
      std::int64_t n10[2] = {0, 0}, n01[2] = {0, 0}, n11[2] = {0, 0};
      std::map<std::int64_t, detail::ScanPoint> fringe[2];
      detail::for_each_cycle_group(rows, [&](const detail::CycleGroup& g) {
        if (g.key.basis == "OCC_IN" || g.key.basis == "OCC_OUT") {
          const int io = g.key.basis == "OCC_IN" ? 0 : 1;
          if (g.d1 && g.d3) ++n11[io];
          else if (g.d1) ++n10[io];
          else if (g.d3) ++n01[io];
        } else if (g.key.basis == "FR_IN" || g.key.basis == "FR_OUT") {
          const int io = g.key.basis == "FR_IN" ? 0 : 1;
          auto& pt = fringe[io][g.key.theta1_micro];
          pt.x = g.key.theta1();
          if (g.d1) ++pt.clicks;
        }
      });

      const char* io_name[2] = {"input", "output"};
      double visibility[2] = {0.0, 0.0};
      double vis_err[2] = {0.0, 0.0};
      bool vis_ok[2] = {false, false};
      for (int io = 0; io < 2; ++io) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [k, pt] : fringe[io]) pts.push_back({pt.x, static_cast<double>(pt.clicks)});
        const std::string metric = io == 0 ? "visibility_input" : "visibility_stored";
        if (pts.size() < 5) {
          warn(std::string("whichpath: ") + io_name[io] + " fringe missing or too sparse");
          s.set_metric(metric, Summary::Metric{0.0, 0.0, false, -1});
          continue;
        }
        FringeScan scan;
        scan.label = io == 0 ? "FR_IN" : "FR_OUT";
        scan.points = pts;
        scan.fit = fit_fringe_visibility(pts);
        visibility[io] = scan.fit.visibility;
        vis_err[io] = detail::fringe_visibility_stderr(pts);
        vis_ok[io] = true;
        s.set_metric(metric, Summary::Metric{visibility[io], vis_err[io], true, -1});
        out.files.push_back({std::string("fringe_") + (io == 0 ? "input" : "stored") + ".csv",
                             emit_fringe_plot_data(scan)});
      }

      const double trials = static_cast<double>(rc.wp_occupancy_cycles);
      for (int io = 0; io < 2; ++io) {
        ProbTable table;
        table.p10 = static_cast<double>(n10[io]) / trials;
        table.p01 = static_cast<double>(n01[io]) / trials;
        table.p11 = static_cast<double>(n11[io]) / trials;
        table.p00 = 1.0 - table.p10 - table.p01 - table.p11;
        const std::string suffix = std::string("_") + io_name[io];
        const auto prob_metric = [&](const char* name, double p, std::int64_t n) {
          s.set_metric(name + suffix,
                       Summary::Metric{p, std::sqrt(std::max(p * (1 - p) / trials, 0.0)), true, n});
        };
        prob_metric("p00", table.p00, rc.wp_occupancy_cycles - n10[io] - n01[io] - n11[io]);
        prob_metric("p01", table.p01, n01[io]);
        prob_metric("p10", table.p10, n10[io]);
        prob_metric("p11", table.p11, n11[io]);

        if (!vis_ok[io] || table.total() <= 0.0) {
          warn(std::string("whichpath: concurrence") + suffix + " undefined");
          s.set_metric("concurrence" + suffix, Summary::Metric{0.0, 0.0, false, -1});
          continue;
        }
        const double con = concurrence_whichpath(table, visibility[io]);
        // First-order propagation over the three click categories (Poisson)
        // and the fitted visibility.
        const double P = table.total();
        const double dV = (table.p01 + table.p10) / P;
        const double dp = visibility[io] / P;  // per unit p01 or p10
        const double d11 = table.p11 > 0.0 ? -std::sqrt(table.p00 / table.p11) / P : 0.0;
        double var = dV * dV * vis_err[io] * vis_err[io];
        var += dp * dp * (table.p01 + table.p10) / trials;
        var += d11 * d11 * table.p11 / trials;
        s.set_metric("concurrence" + suffix, Summary::Metric{con, std::sqrt(var), true, -1});
      }
      break;
    }

    case Campaign::HeraldedG2: {
      detail::TripleTally tallies[2];
      detail::for_each_cycle_group(rows, [&](const detail::CycleGroup& g) {
        const int io = g.key.basis == "IN" ? 0 : 1;
        if (!g.d2) return;
        auto& t = tallies[io];
        ++t.herald;
        if (g.d1) ++t.h_and_a;
        if (g.d3) ++t.h_and_b;
        if (g.d1 && g.d3) ++t.triple;
      });
      const auto g_in = detail::hbt_estimate(tallies[0]);
      const auto g_ret = detail::hbt_estimate(tallies[1]);
      if (!g_in.defined) warn("heralded_g2: input segment has no twofolds; estimate undefined");
      if (!g_ret.defined) warn("heralded_g2: retrieved segment has no twofolds; estimate undefined");
      s.set_metric("heralded_g2_input", g_in, tallies[0].triple);
      s.set_metric("heralded_g2_retrieved", g_ret, tallies[1].triple);
      s.set_metric("heralds_input", Summary::Metric{static_cast<double>(tallies[0].herald), 0.0,
                                                    true, tallies[0].herald});
      s.set_metric("heralds_retrieved", Summary::Metric{static_cast<double>(tallies[1].herald), 0.0,
                                                        true, tallies[1].herald});
      break;
    }

    case Campaign::CauchySchwarz: {
      std::int64_t s1 = 0, s2 = 0, both = 0;
      detail::for_each_cycle_group(rows, [&](const detail::CycleGroup& g) {
        if (g.d1) ++s1;
        if (g.d2) ++s2;
        if (g.d1 && g.d2) ++both;
      });
      const double n = static_cast<double>(rc.cs_cycles);
      CorrelationEstimate g12 = CorrelationEstimate::undefined();
      if (s1 > 0 && s2 > 0 && both > 0) {
        g12.defined = true;
        g12.value = static_cast<double>(both) * n / (static_cast<double>(s1) * static_cast<double>(s2));
        g12.stderr = g12.value * std::sqrt(1.0 / both + 1.0 / s1 + 1.0 / s2);
      } else {
        warn("cauchy_schwarz: no coincidences; cross-correlation undefined");
      }
      const CorrelationEstimate g11{expected_autocorrelation(rc.source.mode_number), 0.0, true};
      const CorrelationEstimate g22{expected_autocorrelation(rc.cs_mode_number_s2), 0.0, true};
      s.set_metric("g12_cross", g12, both);
      s.set_metric("g11_auto", g11, -1);
      s.set_metric("g22_auto", g22, -1);
      if (g12.defined) {
        s.set_metric("cauchy_schwarz_R", cauchy_schwarz_R(g12, g11, g22), both);
      } else {
        s.set_metric("cauchy_schwarz_R", Summary::Metric{0.0, 0.0, false, 0});
      }
      break;
    }

    case Campaign::Tomo: {
      // Per-setting coincidences; the reconstruction itself lives in
      // tomo_from_events (the `tomo` subcommand).
      std::map<std::string, std::int64_t> counts;
      detail::for_each_cycle_group(rows, [&](const detail::CycleGroup& g) {
        if (g.d1 && g.d2) ++counts[g.key.basis];
      });
      for (const auto& setting : tomo_settings_16()) {
        const auto it = counts.find(setting.label);
        const std::int64_t n = it == counts.end() ? 0 : it->second;
        s.set_metric("tomo_counts_" + setting.label,
                     Summary::Metric{static_cast<double>(n), poisson_stderr(n), true, n});
      }
      s.set_metric("tomo_shots_per_setting",
                   Summary::Metric{static_cast<double>(rc.tomo_shots_per_setting), 0.0, true,
                                   rc.tomo_shots_per_setting});
      break;
    }

    case Campaign::EfficiencyScan: {
      std::map<std::int64_t, detail::ScanPoint> points;
      detail::for_each_cycle_group(rows, [&](const detail::CycleGroup& g) {
        auto& pt = points[g.key.theta1_micro];
        pt.x = g.key.theta1();
        if (g.d2) ++pt.clicks;
      });
      MemoryParams mem = rc.memory;
      mem.storage_time_s = rc.storage_time_s();
      const double shots = static_cast<double>(rc.scan_shots_per_point);
      std::string table = "t_us,measured,stderr,analytic\n";
      char buf[160];
      const double t_store_us = rc.storage_time_s() * 1e6;
      std::optional<Summary::Metric> at_storage;
      // Walk the configured scan grid so zero-click points still appear.
      for (const auto& blk : blocks) {
        const double t_us = blk.theta1;
        const auto it = points.find(SettingKey::quantize(t_us));
        const std::int64_t clicks = it == points.end() ? 0 : it->second.clicks;
        const double measured = static_cast<double>(clicks) / shots;
        const double stderr = std::sqrt(std::max(measured * (1.0 - measured) / shots, 0.0));
        const double analytic = retrieval_efficiency(blk.aux, mem) * rc.det2.efficiency;
        std::snprintf(buf, sizeof buf, "%.4f,%.6f,%.6f,%.6f\n", t_us, measured, stderr, analytic);
        table += buf;
        if (std::abs(t_us - t_store_us) < 1e-9)
          at_storage = Summary::Metric{measured, stderr, true, clicks};
      }
      out.files.push_back({"scan_efficiency.csv", table});
      if (!at_storage) {
        warn("efficiency_scan: configured storage time missing from the grid");
        s.set_metric("storage_efficiency", Summary::Metric{0.0, 0.0, false, -1});
      } else {
        s.set_metric("storage_efficiency", *at_storage);
      }
      break;
    }
  }
  return out;
}

// One-call campaign run: simulates the event file, analyzes it, and writes
// events.csv, summary.txt and any auxiliary data files under out_dir.
// Deterministic in (config, seed) for any worker count.
inline AnalysisOutput run_campaign(const RunConfig& rc, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string events_path = (fs::path(out_dir) / "events.csv").string();
  simulate_to_file(rc, events_path);
  const AnalysisOutput out = analyze_events(rc, read_event_file(events_path));
  out.summary.write((fs::path(out_dir) / "summary.txt").string());
  for (const auto& [name, content] : out.files) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write campaign output file: " + name);
    f << content;
  }
  return out;
}

// Reconstruction pipeline behind the `tomo` subcommand: rebuilds per-setting
// counts from the event stream, reconstructs by linear inversion and by MLE,
// scores the Bell fidelity and a parametric-bootstrap spread.
struct TomoReport {
  Summary summary;
  std::string rho_csv;
  MleResult mle;
  LinearInversionResult inversion;
};

inline TomoReport tomo_from_events(const RunConfig& rc, const std::vector<EventRow>& rows) {
  if (rc.campaign != Campaign::Tomo) throw ConfigError("tomo: config campaign must be 'tomo'");
  std::map<std::string, std::int64_t> by_label;
  detail::for_each_cycle_group(rows, [&](const detail::CycleGroup& g) {
    if (g.d1 && g.d2) ++by_label[g.key.basis];
  });
  const auto& settings = tomo_settings_16();
  TomoCounts counts;
  for (const auto& setting : settings) {
    const auto it = by_label.find(setting.label);
    counts.counts.push_back(it == by_label.end() ? 0 : it->second);
    counts.trials.push_back(rc.tomo_shots_per_setting);
  }

  TomoReport report{Summary{}, "", mle_reconstruct(counts), linear_inversion(counts)};
  const double fid = fidelity_to_bell(report.mle.state);
  double fid_spread = 0.0;
  if (rc.tomo_bootstrap >= 2) {
    const RandomStream base(rc.seed ^ 0xb007b007ull);
    fid_spread = bootstrap_fidelity_spread(counts, rc.tomo_bootstrap, base).stddev;
  }

  Summary& s = report.summary;
  s.set_meta("campaign", campaign_name(rc.campaign));
  s.set_meta("seed", std::to_string(rc.seed));
  s.set_meta("events", std::to_string(rows.size()));
  s.set_meta("shots_per_setting", std::to_string(rc.tomo_shots_per_setting));
  s.set_metric("fidelity_bell", Summary::Metric{fid, fid_spread, true, -1});
  s.set_metric("fidelity_bell_linear",
               Summary::Metric{state_fidelity(TwoQubitState(report.inversion.rho),
                                              bell_phi_plus_vector()),
                               0.0, report.inversion.psd, -1});
  s.set_metric("purity", Summary::Metric{report.mle.state.purity(), 0.0, true, -1});
  s.set_metric("mle_converged",
               Summary::Metric{report.mle.converged ? 1.0 : 0.0, 0.0, true, report.mle.iterations});
  s.set_metric("mle_grad_norm", Summary::Metric{report.mle.grad_norm, 0.0, true, -1});
  s.set_metric("min_eigenvalue_linear",
               Summary::Metric{report.inversion.min_eigenvalue, 0.0, true, -1});

  // 4x4 real then imaginary parts, mirroring the usual bar-chart pair.
  std::string csv = "part,r0,r1,r2,r3\n";
  char buf[200];
  const auto& rho = report.mle.state.rho();
  for (const char* part : {"real", "imag"}) {
    const bool re = part[0] == 'r';
    for (std::size_t i = 0; i < 4; ++i) {
      std::snprintf(buf, sizeof buf, "%s,%.9f,%.9f,%.9f,%.9f\n", part,
                    re ? rho(i, 0).real() : rho(i, 0).imag(),
                    re ? rho(i, 1).real() : rho(i, 1).imag(),
                    re ? rho(i, 2).real() : rho(i, 2).imag(),
                    re ? rho(i, 3).real() : rho(i, 3).imag());
      csv += buf;
    }
  }
  report.rho_csv = csv;
  return report;
}

}  // namespace spinlink
