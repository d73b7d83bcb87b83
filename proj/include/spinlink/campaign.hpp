#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "spinlink/analysis.hpp"
#include "spinlink/config.hpp"
#include "spinlink/detection.hpp"
#include "spinlink/events.hpp"
#include "spinlink/memory.hpp"
#include "spinlink/source.hpp"
#include "spinlink/summary.hpp"
#include "spinlink/tomography.hpp"

namespace spinlink {

// MOT trapping / operation / state-preparation sequence. The operation
// window hosts back-to-back storage cycles with no dead time.
struct ExperimentSchedule {
  double trap_ms = 7.5;
  double op_window_ms = 1.5;
  std::int64_t cycles_per_window = 3000;
  double cycle_ns = 500.0;
  double state_prep_ms = 1.0;
  double storage_time_ns = 300.0;

  double window_ms() const { return trap_ms + op_window_ms + state_prep_ms; }

  void validate() const {
    if (cycles_per_window <= 0 || cycle_ns <= 0.0)
      throw ConfigError("schedule: cycle count and length must be positive");
    if (static_cast<double>(cycles_per_window) * cycle_ns > op_window_ms * 1e6 + 1e-6)
      throw ConfigError("schedule: cycles do not fit in the operation window");
    if (storage_time_ns < 0.0) throw ConfigError("schedule: negative storage time");
  }
};

enum class Campaign { CauchySchwarz, HeraldedG2, WhichPath, Chsh, Tomo, EfficiencyScan };

inline const char* campaign_name(Campaign c) {
  switch (c) {
    case Campaign::CauchySchwarz: return "cauchy_schwarz";
    case Campaign::HeraldedG2: return "heralded_g2";
    case Campaign::WhichPath: return "whichpath";
    case Campaign::Chsh: return "chsh";
    case Campaign::Tomo: return "tomo";
    case Campaign::EfficiencyScan: return "efficiency_scan";
  }
  return "chsh";
}

inline Campaign parse_campaign(const std::string& name) {
  for (Campaign c : {Campaign::CauchySchwarz, Campaign::HeraldedG2, Campaign::WhichPath,
                     Campaign::Chsh, Campaign::Tomo, Campaign::EfficiencyScan})
    if (name == campaign_name(c)) return c;
  throw ConfigError("unknown campaign: " + name);
}

struct RunConfig {
  ExperimentSchedule schedule;
  SourceParams source;
  MemoryParams memory;
  DetectorParams det1, det2, det3;
  LossBudget losses;
  Campaign campaign = Campaign::Chsh;
  std::uint64_t seed = 1;
  std::int64_t windows = 0;  // 0 = derive from the campaign's cycle demand
  int threads = 1;

  // chsh campaign
  double chsh_visibility = 0.81;          // werner noise equivalent
  std::int64_t chsh_cycles_per_subsetting = 100000;
  int chsh_fringe_points = 12;
  std::int64_t chsh_fringe_cycles_per_point = 20000;

  // which-path campaign: occupancy blocks are calibrated directly to the
  // measured per-cycle click probabilities; fringe blocks run the full
  // state -> channel -> projection pipeline.
  std::int64_t wp_occupancy_cycles = 2000000;
  double wp_in_p10 = 2.29e-2, wp_in_p01 = 2.61e-2, wp_in_p11 = 2.6e-5;
  double wp_out_p10 = 2.98e-3, wp_out_p01 = 3.33e-3, wp_out_p11 = 1.0e-6;
  double wp_input_jitter_sigma = 0.4443;  // exp(-s^2/2) = 0.906
  int wp_fringe_points = 12;
  std::int64_t wp_fringe_cycles_per_point = 300000;
  double wp_fringe_rate = 0.5;  // herald-and-collection scale of fringe counts

  // heralded-g2 campaign
  std::int64_t g2_cycles_input = 2000000;
  std::int64_t g2_cycles_retrieved = 20000000;

  // cauchy-schwarz campaign
  std::int64_t cs_cycles = 2000000;
  double cs_mode_number_s2 = 1.25;

  // tomography campaign
  double tomo_visibility = 0.859;
  std::int64_t tomo_shots_per_setting = 1000000;
  int tomo_bootstrap = 25;

  // efficiency scan campaign
  int scan_points = 13;
  double scan_t_max_us = 3.0;
  std::int64_t scan_shots_per_point = 100000;

  double storage_time_s() const { return schedule.storage_time_ns * 1e-9; }

  void validate() const {
    schedule.validate();
    source.validate();
    MemoryParams mem = memory;
    mem.storage_time_s = storage_time_s();
    mem.validate();
    det1.validate();
    det2.validate();
    det3.validate();
    losses.validate();
    if (threads < 1 || threads > 256) throw ConfigError("threads must be in [1,256]");
    if (!(chsh_visibility >= 0.0 && chsh_visibility <= 1.0) ||
        !(tomo_visibility >= 0.0 && tomo_visibility <= 1.0))
      throw ConfigError("werner visibility knobs must be in [0,1]");
    if (wp_in_p10 + wp_in_p01 + wp_in_p11 > 1.0 || wp_out_p10 + wp_out_p01 + wp_out_p11 > 1.0)
      throw ConfigError("which-path occupancy probabilities exceed 1");
    if (scan_points < 2) throw ConfigError("scan needs at least 2 points");
  }
};

inline RunConfig load_run_config(const Config& cfg) {
  RunConfig rc;
  rc.campaign = parse_campaign(cfg.require_string("campaign"));
  rc.seed = cfg.get_uint("seed", 1);
  rc.windows = cfg.get_int("windows", 0);
  rc.threads = static_cast<int>(cfg.get_int("threads", 1));

  rc.schedule.trap_ms = cfg.get_double("schedule.trap_ms", rc.schedule.trap_ms);
  rc.schedule.op_window_ms = cfg.get_double("schedule.op_window_ms", rc.schedule.op_window_ms);
  rc.schedule.cycles_per_window =
      cfg.get_int("schedule.cycles_per_window", rc.schedule.cycles_per_window);
  rc.schedule.cycle_ns = cfg.get_double("schedule.cycle_ns", rc.schedule.cycle_ns);
  rc.schedule.state_prep_ms = cfg.get_double("schedule.state_prep_ms", rc.schedule.state_prep_ms);
  rc.schedule.storage_time_ns =
      cfg.get_double("schedule.storage_time_ns", rc.schedule.storage_time_ns);

  rc.source.p_pair = cfg.get_double("source.p_pair", 3.3e-3);
  rc.source.p_double = cfg.get_double("source.p_double", 0.0);
  rc.source.mode_number = cfg.get_double("source.mode_number", 1.5625);
  rc.source.phase_phi = cfg.get_double("source.phase_phi", 0.0);

  rc.memory.eta0 = cfg.get_double("memory.eta0", 1.0);
  rc.memory.tau_doppler_s = cfg.get_double("memory.tau_doppler_us", 4.2756) * 1e-6;
  rc.memory.tau_life_s = cfg.get_double("memory.tau_life_us", 5.0) * 1e-6;
  rc.memory.tau_extra_s = cfg.get_double("memory.tau_extra_us", 1e15) * 1e-6;
  rc.memory.phase_jitter_sigma = cfg.get_double("memory.phase_jitter_sigma", 0.0);
  if (cfg.has("memory.calibrate_efficiency")) {
    MemoryParams m = rc.memory;
    rc.memory.eta0 =
        calibrate_eta0(cfg.get_double("memory.calibrate_efficiency", 0.229),
                       cfg.get_double("schedule.storage_time_ns", rc.schedule.storage_time_ns) * 1e-9, m);
  }

  const auto load_det = [&](const std::string& prefix, DetectorParams& d) {
    d.efficiency = cfg.get_double(prefix + ".efficiency", 1.0);
    d.dark_prob = cfg.get_double(prefix + ".dark_prob", 0.0);
    d.gate_ns = cfg.get_double(prefix + ".gate_ns", rc.schedule.cycle_ns);
  };
  load_det("detector.d1", rc.det1);
  load_det("detector.d2", rc.det2);
  load_det("detector.d3", rc.det3);

  rc.losses.detection_loss = cfg.get_double("losses.detection", 0.50);
  rc.losses.fiber_loss = cfg.get_double("losses.fiber", 0.30);
  rc.losses.filtering_loss = cfg.get_double("losses.filtering", 0.335);
  rc.losses.excitation_loss = cfg.get_double("losses.excitation", 0.77);

  rc.chsh_visibility = cfg.get_double("chsh.werner_visibility", rc.chsh_visibility);
  rc.chsh_cycles_per_subsetting =
      cfg.get_int("chsh.cycles_per_subsetting", rc.chsh_cycles_per_subsetting);
  rc.chsh_fringe_points = static_cast<int>(cfg.get_int("chsh.fringe_points", rc.chsh_fringe_points));
  rc.chsh_fringe_cycles_per_point =
      cfg.get_int("chsh.fringe_cycles_per_point", rc.chsh_fringe_cycles_per_point);

  rc.wp_occupancy_cycles = cfg.get_int("whichpath.occupancy_cycles", rc.wp_occupancy_cycles);
  rc.wp_in_p10 = cfg.get_double("whichpath.input.p10", rc.wp_in_p10);
  rc.wp_in_p01 = cfg.get_double("whichpath.input.p01", rc.wp_in_p01);
  rc.wp_in_p11 = cfg.get_double("whichpath.input.p11", rc.wp_in_p11);
  rc.wp_out_p10 = cfg.get_double("whichpath.output.p10", rc.wp_out_p10);
  rc.wp_out_p01 = cfg.get_double("whichpath.output.p01", rc.wp_out_p01);
  rc.wp_out_p11 = cfg.get_double("whichpath.output.p11", rc.wp_out_p11);
  rc.wp_input_jitter_sigma =
      cfg.get_double("whichpath.input_jitter_sigma", rc.wp_input_jitter_sigma);
  rc.wp_fringe_points = static_cast<int>(cfg.get_int("whichpath.fringe_points", rc.wp_fringe_points));
  rc.wp_fringe_cycles_per_point =
      cfg.get_int("whichpath.fringe_cycles_per_point", rc.wp_fringe_cycles_per_point);
  rc.wp_fringe_rate = cfg.get_double("whichpath.fringe_rate", rc.wp_fringe_rate);

  rc.g2_cycles_input = cfg.get_int("g2.cycles_input", rc.g2_cycles_input);
  rc.g2_cycles_retrieved = cfg.get_int("g2.cycles_retrieved", rc.g2_cycles_retrieved);
  if (cfg.has("g2.tune_target")) {
    const double survival = [&] {
      MemoryParams m = rc.memory;
      m.storage_time_s = rc.storage_time_s();
      return retrieval_efficiency(m.storage_time_s, m);
    }();
    rc.source.p_double = tune_p_double_for_g2(rc.source.p_pair, rc.det2.efficiency,
                                              survival * rc.det1.efficiency,
                                              cfg.get_double("g2.tune_target", 0.10));
  }

  rc.cs_cycles = cfg.get_int("cs.cycles", rc.cs_cycles);
  rc.cs_mode_number_s2 = cfg.get_double("cs.mode_number_s2", rc.cs_mode_number_s2);

  rc.tomo_visibility = cfg.get_double("tomo.werner_visibility", rc.tomo_visibility);
  rc.tomo_shots_per_setting = cfg.get_int("tomo.shots_per_setting", rc.tomo_shots_per_setting);
  rc.tomo_bootstrap = static_cast<int>(cfg.get_int("tomo.bootstrap", rc.tomo_bootstrap));

  rc.scan_points = static_cast<int>(cfg.get_int("scan.points", rc.scan_points));
  rc.scan_t_max_us = cfg.get_double("scan.t_max_us", rc.scan_t_max_us);
  rc.scan_shots_per_point = cfg.get_int("scan.shots_per_point", rc.scan_shots_per_point);

  rc.validate();
  return rc;
}

// ---------------------------------------------------------------------------
// Campaign cycle layout: contiguous blocks of cycles, each with its own
// analyzer setting / scan coordinate / segment label.

struct CycleBlock {
  std::int64_t start = 0;
  std::int64_t count = 0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::string basis;
  int tag = 0;       // campaign-specific discriminator
  double aux = 0.0;  // campaign-specific scalar
  int index = 0;     // campaign-specific index
};

namespace detail {

inline std::vector<CycleBlock> build_blocks(const RunConfig& rc) {
  std::vector<CycleBlock> blocks;
  std::int64_t cursor = 0;
  const auto push = [&](CycleBlock b) {
    if (b.count <= 0) return;  // zero-sized segments are configured away
    b.start = cursor;
    cursor += b.count;
    blocks.push_back(std::move(b));
  };

  switch (rc.campaign) {
    case Campaign::Chsh: {
      const ChshAngles a;
      const double pairs[4][2] = {{a.theta1, a.theta2},
                                  {a.theta1, a.theta2p},
                                  {a.theta1p, a.theta2},
                                  {a.theta1p, a.theta2p}};
      constexpr double kHalfPi = 1.57079632679489661923;
      const double subs[4][2] = {{0, 0}, {kHalfPi, kHalfPi}, {kHalfPi, 0}, {0, kHalfPi}};
      for (const auto& pair : pairs)
        for (const auto& sub : subs) {
          CycleBlock b;
          b.count = rc.chsh_cycles_per_subsetting;
          b.theta1 = pair[0] + sub[0];
          b.theta2 = pair[1] + sub[1];
          b.basis = "CHSH";
          b.tag = 0;
          push(std::move(b));
        }
      const BasisLabel bases[4] = {BasisLabel::H, BasisLabel::V, BasisLabel::D, BasisLabel::A};
      for (const BasisLabel basis : bases)
        for (int k = 0; k < rc.chsh_fringe_points; ++k) {
          CycleBlock b;
          b.count = rc.chsh_fringe_cycles_per_point;
          const auto setting = MeasurementSetting::with_basis(
              basis, M_PI * k / static_cast<double>(rc.chsh_fringe_points));
          b.theta1 = setting.theta1;
          b.theta2 = setting.theta2;
          b.basis = std::string("FR_") + basis_name(basis);
          b.tag = 1;
          push(std::move(b));
        }
      break;
    }
    case Campaign::WhichPath: {
      for (int io = 0; io < 2; ++io) {
        CycleBlock b;
        b.count = rc.wp_occupancy_cycles;
        b.basis = io == 0 ? "OCC_IN" : "OCC_OUT";
        b.tag = io;  // 0 input occupancy, 1 output occupancy
        push(std::move(b));
      }
      for (int io = 0; io < 2; ++io)
        for (int k = 0; k < rc.wp_fringe_points; ++k) {
          CycleBlock b;
          b.count = rc.wp_fringe_cycles_per_point;
          b.aux = 2.0 * M_PI * k / static_cast<double>(rc.wp_fringe_points);  // phase-plate x
          b.theta1 = b.aux;
          b.basis = io == 0 ? "FR_IN" : "FR_OUT";
          b.tag = 2 + io;  // 2 input fringe, 3 stored fringe
          push(std::move(b));
        }
      break;
    }
    case Campaign::HeraldedG2: {
      CycleBlock in;
      in.count = rc.g2_cycles_input;
      in.basis = "IN";
      in.tag = 0;
      push(std::move(in));
      CycleBlock ret;
      ret.count = rc.g2_cycles_retrieved;
      ret.basis = "RET";
      ret.tag = 1;
      push(std::move(ret));
      break;
    }
    case Campaign::CauchySchwarz: {
      CycleBlock b;
      b.count = rc.cs_cycles;
      b.basis = "CS";
      push(std::move(b));
      break;
    }
    case Campaign::Tomo: {
      const auto& settings = tomo_settings_16();
      for (int s = 0; s < static_cast<int>(settings.size()); ++s) {
        CycleBlock b;
        b.count = rc.tomo_shots_per_setting;
        b.basis = settings[s].label;
        b.index = s;
        push(std::move(b));
      }
      break;
    }
    case Campaign::EfficiencyScan: {
      std::vector<double> times;
      for (int k = 0; k < rc.scan_points; ++k)
        times.push_back(rc.scan_t_max_us * 1e-6 * k / static_cast<double>(rc.scan_points - 1));
      const double t_store = rc.storage_time_s();
      if (std::none_of(times.begin(), times.end(),
                       [&](double t) { return std::abs(t - t_store) < 1e-12; }))
        times.push_back(t_store);
      std::sort(times.begin(), times.end());
      for (int k = 0; k < static_cast<int>(times.size()); ++k) {
        CycleBlock b;
        b.count = rc.scan_shots_per_point;
        b.aux = times[k];              // seconds
        b.theta1 = times[k] * 1e6;     // microseconds in the event rows
        b.basis = "SCAN";
        b.index = k;
        push(std::move(b));
      }
      break;
    }
  }
  if (blocks.empty()) throw ConfigError("campaign produced no cycle blocks");
  return blocks;
}

inline std::int64_t total_cycles(const std::vector<CycleBlock>& blocks) {
  const auto& last = blocks.back();
  return last.start + last.count;
}

}  // namespace detail

// Number of trap/operate super-cycles needed to host the campaign.
inline std::int64_t required_windows(const RunConfig& rc) {
  const auto blocks = detail::build_blocks(rc);
  const std::int64_t cycles = detail::total_cycles(blocks);
  return (cycles + rc.schedule.cycles_per_window - 1) / rc.schedule.cycles_per_window;
}

namespace detail {

// Per-campaign immutable state shared by all simulation workers.
struct SimShared {
  std::vector<CycleBlock> blocks;
  std::vector<BornTable> tables;  // chsh: per block
  std::shared_ptr<const TwoQubitState> werner;  // chsh/tomo noise state
  std::shared_ptr<const TwoQubitState> whichpath;  // stored-fringe input state
  EmissionSampler sampler;
  MemoryParams memory;  // storage_time filled in
  double survival = 1.0;
  std::vector<double> tomo_probs;

  explicit SimShared(const RunConfig& rc) : sampler(rc.source), memory(rc.memory) {
    memory.storage_time_s = rc.storage_time_s();
    blocks = build_blocks(rc);
    survival = retrieval_efficiency(memory.storage_time_s, memory);
    if (rc.campaign == Campaign::Chsh) {
      werner = std::make_shared<const TwoQubitState>(werner_state(rc.chsh_visibility));
      tables.reserve(blocks.size());
      for (const auto& b : blocks)
        tables.push_back(make_born_table(*werner, MeasurementSetting::custom(b.theta1, b.theta2)));
    } else if (rc.campaign == Campaign::Tomo) {
      werner = std::make_shared<const TwoQubitState>(werner_state(rc.tomo_visibility));
      const auto& settings = tomo_settings_16();
      for (const auto& s : settings) {
        double p = tomo_probability(*werner, s) * rc.det1.efficiency * rc.det2.efficiency +
                   rc.det1.dark_prob * rc.det2.dark_prob;
        tomo_probs.push_back(std::min(p, 1.0));
      }
    } else if (rc.campaign == Campaign::WhichPath) {
      whichpath = std::make_shared<const TwoQubitState>(ideal_psi1(0.0));
    }
  }
};

// Click probability of the recombined which-path interferometer at
// phase-plate setting x: overlap with (|01> + e^{-ix}|10>)/sqrt2.
inline double whichpath_click_probability(const TwoQubitState& state, double x) {
  const double r = 0.70710678118654752440;
  const TwoQubitVector port{0.0, cplx(r, 0.0), std::polar(r, -x), 0.0};
  return state_fidelity(state, port);
}

inline void simulate_cycle_range(const RunConfig& rc, const SimShared& shared,
                                 std::int64_t begin, std::int64_t end, std::string& out) {
  const RandomStream master(rc.seed);
  const char* cname = campaign_name(rc.campaign);
  std::size_t bi = 0;
  while (bi + 1 < shared.blocks.size() && shared.blocks[bi].start + shared.blocks[bi].count <= begin)
    ++bi;
  EventRow row;
  row.campaign = cname;

  for (std::int64_t cycle = begin; cycle < end; ++cycle) {
    while (bi + 1 < shared.blocks.size() &&
           cycle >= shared.blocks[bi].start + shared.blocks[bi].count)
      ++bi;
    const CycleBlock& blk = shared.blocks[bi];
    if (cycle >= blk.start + blk.count) continue;  // idle padding cycles
    row.cycle = cycle;
    row.theta1 = blk.theta1;
    row.theta2 = blk.theta2;
    row.basis = blk.basis;

    switch (rc.campaign) {
      case Campaign::Chsh: {
        const PairEmission em = shared.sampler.sample(cycle, master);
        if (em.multiplicity == 0) break;
        RandomStream det = master.fork(cycle).fork(kStreamDetection);
        const auto [c1, c2] = sample_clicks(shared.tables[bi], rc.det1, rc.det2, cycle, det);
        if (c1.clicked) {
          row.detector = DetectorId::D1;
          row.clicked = true;
          append_event_row(out, row);
        }
        if (c2.clicked) {
          row.detector = DetectorId::D2;
          row.clicked = true;
          append_event_row(out, row);
        }
        break;
      }
      case Campaign::WhichPath: {
        RandomStream rng = master.fork(cycle).fork(kStreamDetection);
        if (blk.tag <= 1) {
          // occupancy block: categorical draw calibrated to the measured
          // per-cycle L/R click probabilities
          const double p10 = blk.tag == 0 ? rc.wp_in_p10 : rc.wp_out_p10;
          const double p01 = blk.tag == 0 ? rc.wp_in_p01 : rc.wp_out_p01;
          const double p11 = blk.tag == 0 ? rc.wp_in_p11 : rc.wp_out_p11;
          const double u = rng.uniform();
          bool in_l = false, in_r = false;
          if (u < p10) {
            in_l = true;
          } else if (u < p10 + p01) {
            in_r = true;
          } else if (u < p10 + p01 + p11) {
            in_l = true;
            in_r = true;
          }
          if (in_l) {
            row.detector = DetectorId::D1;
            row.clicked = true;
            append_event_row(out, row);
          }
          if (in_r) {
            row.detector = DetectorId::D3;
            row.clicked = true;
            append_event_row(out, row);
          }
        } else if (blk.tag == 2) {
          // input fringe: source-path jitter only
          RandomStream src = master.fork(cycle).fork(kStreamEmission);
          const double delta = src.normal(0.0, rc.wp_input_jitter_sigma);
          const TwoQubitState state = ideal_psi1(delta);
          const double p = rc.wp_fringe_rate * whichpath_click_probability(state, blk.aux);
          if (rng.bernoulli(p * rc.det1.efficiency)) {
            row.detector = DetectorId::D1;
            row.clicked = true;
            append_event_row(out, row);
          }
        } else {
          // stored fringe: full emission -> memory channel -> projection
          PairEmission em;
          em.cycle_index = cycle;
          em.multiplicity = 1;
          em.joint_state = shared.whichpath;
          RandomStream mem = master.fork(cycle).fork(kStreamMemory);
          const StoredOutcome stored = apply_memory_channel(em, shared.memory, mem);
          if (!stored.retrieved) break;
          const double p = rc.wp_fringe_rate * whichpath_click_probability(*stored.state, blk.aux);
          if (rng.bernoulli(p * rc.det1.efficiency)) {
            row.detector = DetectorId::D1;
            row.clicked = true;
            append_event_row(out, row);
          }
        }
        break;
      }
      case Campaign::HeraldedG2: {
        const PairEmission em = shared.sampler.sample(cycle, master);
        if (em.multiplicity == 0) break;
        RandomStream det = master.fork(cycle).fork(kStreamDetection);
        bool herald = false;
        for (int i = 0; i < em.multiplicity; ++i)
          if (det.bernoulli(rc.det2.efficiency)) herald = true;
        RandomStream route = master.fork(cycle).fork(kStreamRouting);
        const double survive = blk.tag == 1 ? shared.survival : 1.0;
        bool arm_a = false, arm_b = false;
        for (int i = 0; i < em.multiplicity; ++i) {
          if (!route.bernoulli(survive)) continue;
          const auto [a, b] = hbt_split(ClickRecord{cycle, DetectorId::D1, true}, route);
          if (a.clicked && route.bernoulli(rc.det1.efficiency)) arm_a = true;
          if (b.clicked && route.bernoulli(rc.det3.efficiency)) arm_b = true;
        }
        if (herald) {
          row.detector = DetectorId::D2;
          row.clicked = true;
          append_event_row(out, row);
        }
        if (arm_a) {
          row.detector = DetectorId::D1;
          row.clicked = true;
          append_event_row(out, row);
        }
        if (arm_b) {
          row.detector = DetectorId::D3;
          row.clicked = true;
          append_event_row(out, row);
        }
        break;
      }
      case Campaign::CauchySchwarz: {
        const PairEmission em = shared.sampler.sample(cycle, master);
        if (em.multiplicity == 0) break;
        RandomStream det = master.fork(cycle).fork(kStreamDetection);
        bool s1 = false, s2 = false;
        for (int i = 0; i < em.multiplicity; ++i) {
          if (det.bernoulli(rc.det1.efficiency)) s1 = true;
          if (det.bernoulli(rc.det2.efficiency)) s2 = true;
        }
        if (s1) {
          row.detector = DetectorId::D1;
          row.clicked = true;
          append_event_row(out, row);
        }
        if (s2) {
          row.detector = DetectorId::D2;
          row.clicked = true;
          append_event_row(out, row);
        }
        break;
      }
      case Campaign::Tomo:
        break;  // handled by simulate_tomo_range

      case Campaign::EfficiencyScan: {
        RandomStream rng = master.fork(cycle).fork(kStreamMemory);
        MemoryParams m = shared.memory;
        m.storage_time_s = blk.aux;
        const double eta = retrieval_efficiency(m.storage_time_s, m);
        if (rng.bernoulli(eta * rc.det2.efficiency)) {
          row.detector = DetectorId::D2;
          row.clicked = true;
          append_event_row(out, row);
        }
        break;
      }
    }
  }
}

// Tomography uses per-setting binomial streams rather than per-cycle forks so
// the event rows agree count-for-count with simulate_tomo_counts on the same
// base stream.
inline void simulate_tomo_range(const RunConfig& rc, const SimShared& shared, std::int64_t begin,
                                std::int64_t end, std::string& out) {
  const RandomStream master(rc.seed);
  EventRow row;
  row.campaign = campaign_name(rc.campaign);
  for (const auto& blk : shared.blocks) {
    const std::int64_t lo = std::max(begin, blk.start);
    const std::int64_t hi = std::min(end, blk.start + blk.count);
    if (lo >= hi) continue;
    RandomStream rng = master.fork(static_cast<std::uint64_t>(blk.index));
    rng.skip(static_cast<std::uint64_t>(lo - blk.start));  // one word per shot
    const double p = shared.tomo_probs[static_cast<std::size_t>(blk.index)];
    row.theta1 = 0.0;
    row.theta2 = 0.0;
    row.basis = blk.basis;
    for (std::int64_t cycle = lo; cycle < hi; ++cycle) {
      if (rng.uniform() < p) {
        row.cycle = cycle;
        row.clicked = true;
        row.detector = DetectorId::D1;
        append_event_row(out, row);
        row.detector = DetectorId::D2;
        append_event_row(out, row);
      }
    }
  }
}

}  // namespace detail

// Simulates the configured campaign and returns the event-file body (rows
// only, no header). Work is split across `threads` workers window by window;
// buffers are stitched in window order, so the byte stream is identical for
// any worker count.
inline std::string simulate_events_body(const RunConfig& rc) {
  rc.validate();
  const detail::SimShared shared(rc);
  const std::int64_t cycles = detail::total_cycles(shared.blocks);
  const std::int64_t cpw = rc.schedule.cycles_per_window;
  const std::int64_t windows = rc.windows > 0 ? rc.windows : (cycles + cpw - 1) / cpw;
  if (windows * cpw < cycles)
    throw ConfigError("windows=" + std::to_string(windows) + " cannot host " +
                      std::to_string(cycles) + " campaign cycles");

  std::vector<std::string> buffers(static_cast<std::size_t>(windows));
  const auto worker = [&](int worker_id) {
    for (std::int64_t w = worker_id; w < windows; w += rc.threads) {
      const std::int64_t begin = w * cpw;
      const std::int64_t end = std::min(begin + cpw, cycles);
      if (begin >= end) continue;
      if (rc.campaign == Campaign::Tomo)
        detail::simulate_tomo_range(rc, shared, begin, end, buffers[static_cast<std::size_t>(w)]);
      else
        detail::simulate_cycle_range(rc, shared, begin, end, buffers[static_cast<std::size_t>(w)]);
    }
  };
  if (rc.threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < rc.threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  std::string body;
  std::size_t total = 0;
  for (const auto& b : buffers) total += b.size();
  body.reserve(total);
  for (const auto& b : buffers) body += b;
  return body;
}

inline void simulate_to_file(const RunConfig& rc, const std::string& path) {
  write_event_file(path, simulate_events_body(rc));
}

}  // namespace spinlink
