#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinlink/errors.hpp"
#include "spinlink/memory.hpp"
#include "spinlink/qcore.hpp"

namespace spinlink {

// Angle convention: theta1/theta2 are analyzer (polarization) angles — the
// angle of the transmitted polarization measured from H. The CHSH set
// {0, pi/8, pi/4, 3pi/8} is stated in these analyzer angles; the physical
// half-wave-plate angle is theta/2 (see hwp_operator).
enum class BasisLabel { H, V, D, A, Custom };

inline const char* basis_name(BasisLabel b) {
  switch (b) {
    case BasisLabel::H: return "H";
    case BasisLabel::V: return "V";
    case BasisLabel::D: return "D";
    case BasisLabel::A: return "A";
    case BasisLabel::Custom: return "CUSTOM";
  }
  return "CUSTOM";
}

struct MeasurementSetting {
  double theta1 = 0.0;   // signal-1 analyzer angle (xi_1), rad
  double theta2 = 0.0;   // signal-2 analyzer angle (xi_2), rad
  BasisLabel basis_label = BasisLabel::Custom;
  double pp_phase = 0.0;  // inserted phase plate on the signal-1 path, rad

  // Named signal-2 bases; theta1 stays an explicit scan angle.
  static MeasurementSetting with_basis(BasisLabel basis2, double theta1_angle) {
    MeasurementSetting s;
    s.theta1 = theta1_angle;
    s.basis_label = basis2;
    switch (basis2) {
      case BasisLabel::H: s.theta2 = 0.0; break;
      case BasisLabel::V: s.theta2 = 1.57079632679489661923; break;
      case BasisLabel::D: s.theta2 = 0.78539816339744830962; break;
      case BasisLabel::A: s.theta2 = -0.78539816339744830962; break;
      case BasisLabel::Custom:
        throw std::invalid_argument("CUSTOM basis requires explicit angles");
    }
    return s;
  }

  static MeasurementSetting custom(double t1, double t2, double pp = 0.0) {
    MeasurementSetting s;
    s.theta1 = t1;
    s.theta2 = t2;
    s.pp_phase = pp;
    return s;
  }
};

struct DetectorParams {
  double efficiency = 1.0;
  double dark_prob = 0.0;  // dark click probability per gate
  double gate_ns = 500.0;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw std::invalid_argument("DetectorParams: efficiency must be in [0,1]");
    if (!(dark_prob >= 0.0 && dark_prob <= 1.0))
      throw std::invalid_argument("DetectorParams: dark_prob must be in [0,1]");
  }
};

enum class DetectorId { D1, D2, D3 };

inline const char* detector_name(DetectorId d) {
  switch (d) {
    case DetectorId::D1: return "D1";
    case DetectorId::D2: return "D2";
    case DetectorId::D3: return "D3";
  }
  return "D1";
}

struct ClickRecord {
  std::int64_t cycle_index = 0;
  DetectorId detector_id = DetectorId::D1;
  bool clicked = false;
};

// Rank-1 polarization projector at analyzer angle theta, optionally preceded
// by a phase plate diag(1, e^{i pp}) on that photon's H/V components.
inline ComplexMatrix analyzer_projector(double theta, double pp_phase = 0.0) {
  const cplx a = std::cos(theta);
  const cplx b = std::polar(1.0, -pp_phase) * std::sin(theta);
  ComplexMatrix p(2, 2);
  p(0, 0) = a * std::conj(a);
  p(0, 1) = a * std::conj(b);
  p(1, 0) = b * std::conj(a);
  p(1, 1) = b * std::conj(b);
  return p;
}

// Born probability Tr[rho (P(theta2) x P(theta1))]: qubit 0 is the signal-2
// side, qubit 1 the signal-1 side.
inline double joint_click_probability(const TwoQubitState& state, const MeasurementSetting& s) {
  const ComplexMatrix joint =
      tensor_product(analyzer_projector(s.theta2), analyzer_projector(s.theta1, s.pp_phase));
  double p = state.rho().trace_of_product(joint).real();
  if (p < 0.0) p = 0.0;
  if (p > 1.0) p = 1.0;
  return p;
}

// Probabilities of the four joint analyzer outcomes (transmit/reject on each
// side); they sum to 1 for any state and setting.
struct BornTable {
  // p[o1][o2], o = 0 transmit, 1 reject (analyzer rotated by pi/2)
  double p[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

inline BornTable make_born_table(const TwoQubitState& state, const MeasurementSetting& s) {
  constexpr double kHalfPi = 1.57079632679489661923;
  BornTable t;
  for (int o1 = 0; o1 < 2; ++o1)
    for (int o2 = 0; o2 < 2; ++o2) {
      MeasurementSetting sub = s;
      sub.theta1 = s.theta1 + (o1 ? kHalfPi : 0.0);
      sub.theta2 = s.theta2 + (o2 ? kHalfPi : 0.0);
      t.p[o1][o2] = joint_click_probability(state, sub);
    }
  return t;
}

// Samples the joint outcome, thins by detector efficiency, ORs in dark
// clicks. Detector 1 watches the signal-1 transmitted port, detector 2 the
// signal-2 transmitted port.
inline std::pair<ClickRecord, ClickRecord> sample_clicks(const BornTable& table,
                                                         const DetectorParams& det1,
                                                         const DetectorParams& det2,
                                                         std::int64_t cycle, RandomStream& rng) {
  const double u = rng.uniform();
  int o1 = 1, o2 = 1;
  double acc = table.p[0][0];
  if (u < acc) {
    o1 = 0;
    o2 = 0;
  } else if (u < (acc += table.p[0][1])) {
    o1 = 0;
    o2 = 1;
  } else if (u < (acc += table.p[1][0])) {
    o1 = 1;
    o2 = 0;
  }
  bool c1 = (o1 == 0) && rng.bernoulli(det1.efficiency);
  bool c2 = (o2 == 0) && rng.bernoulli(det2.efficiency);
  if (det1.dark_prob > 0.0 && rng.bernoulli(det1.dark_prob)) c1 = true;
  if (det2.dark_prob > 0.0 && rng.bernoulli(det2.dark_prob)) c2 = true;
  return {ClickRecord{cycle, DetectorId::D1, c1}, ClickRecord{cycle, DetectorId::D2, c2}};
}

inline std::pair<ClickRecord, ClickRecord> sample_clicks(const TwoQubitState& state,
                                                         const MeasurementSetting& setting,
                                                         const DetectorParams& det1,
                                                         const DetectorParams& det2,
                                                         std::int64_t cycle, RandomStream& rng) {
  det1.validate();
  det2.validate();
  return sample_clicks(make_born_table(state, setting), det1, det2, cycle, rng);
}

// Routes one detected signal-1 photon to one of the two HBT detectors with
// probability 1/2 each. A photon never splits; two photons route independently.
inline std::pair<ClickRecord, ClickRecord> hbt_split(const ClickRecord& click, RandomStream& rng) {
  ClickRecord a{click.cycle_index, DetectorId::D1, false};
  ClickRecord b{click.cycle_index, DetectorId::D3, false};
  if (click.clicked) {
    if (rng.bernoulli(0.5))
      a.clicked = true;
    else
      b.clicked = true;
  }
  return {a, b};
}

// One event-file row: a click record tagged with the setting it was taken
// under. The CSV serialization lives in events.hpp.
struct EventRow {
  std::int64_t cycle = 0;
  DetectorId detector = DetectorId::D1;
  bool clicked = false;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::string basis;     // basis or campaign-segment label
  std::string campaign;
};

struct SettingKey {
  // Angles rounded to the event file's six decimals so lookups are stable.
  std::int64_t theta1_micro = 0;
  std::int64_t theta2_micro = 0;
  std::string basis;

  static std::int64_t quantize(double theta) {
    return static_cast<std::int64_t>(std::llround(theta * 1e6));
  }

  static SettingKey make(double t1, double t2, const std::string& basis) {
    return SettingKey{quantize(t1), quantize(t2), basis};
  }

  double theta1() const { return static_cast<double>(theta1_micro) * 1e-6; }
  double theta2() const { return static_cast<double>(theta2_micro) * 1e-6; }

  bool operator<(const SettingKey& o) const {
    if (theta1_micro != o.theta1_micro) return theta1_micro < o.theta1_micro;
    if (theta2_micro != o.theta2_micro) return theta2_micro < o.theta2_micro;
    return basis < o.basis;
  }
  bool operator==(const SettingKey& o) const {
    return theta1_micro == o.theta1_micro && theta2_micro == o.theta2_micro && basis == o.basis;
  }
};

struct CoincidenceTally {
  std::int64_t singles_1 = 0;     // cycles with a D1 click
  std::int64_t singles_2 = 0;     // cycles with a D2 click
  std::int64_t coincidences = 0;  // cycles with both
  std::int64_t trials = 0;        // distinct cycles observed under this setting
};

struct CoincidenceCounts {
  std::map<SettingKey, CoincidenceTally> by_setting;

  std::int64_t total_trials() const {
    std::int64_t t = 0;
    for (const auto& [k, v] : by_setting) t += v.trials;
    return t;
  }
  std::int64_t total_coincidences() const {
    std::int64_t t = 0;
    for (const auto& [k, v] : by_setting) t += v.coincidences;
    return t;
  }
};

// Tallies singles and same-cycle D1/D2 coincidences per setting. Rows must be
// grouped by nondecreasing cycle index with at most one row per detector per
// cycle; trials counts the distinct cycles present in the stream (sparse,
// click-only streams should override trials from run bookkeeping).
inline CoincidenceCounts count_coincidences(const std::vector<EventRow>& rows) {
  CoincidenceCounts out;
  std::int64_t i = 0;
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
  std::int64_t last_cycle = -1;
  while (i < n) {
    const std::int64_t cycle = rows[i].cycle;
    if (cycle < last_cycle)
      throw DataIntegrityError("event rows not sorted by cycle at cycle " + std::to_string(cycle));
    if (cycle == last_cycle)
      throw DataIntegrityError("duplicate cycle group for cycle " + std::to_string(cycle));
    last_cycle = cycle;

    bool c1 = false, c2 = false;
    bool seen[3] = {false, false, false};
    const SettingKey key = SettingKey::make(rows[i].theta1, rows[i].theta2, rows[i].basis);
    std::int64_t j = i;
    for (; j < n && rows[j].cycle == cycle; ++j) {
      const int d = static_cast<int>(rows[j].detector);
      if (seen[d])
        throw DataIntegrityError("duplicate detector row in cycle " + std::to_string(cycle));
      seen[d] = true;
      if (!(SettingKey::make(rows[j].theta1, rows[j].theta2, rows[j].basis) == key))
        throw DataIntegrityError("conflicting settings within cycle " + std::to_string(cycle));
      if (rows[j].clicked) {
        if (rows[j].detector == DetectorId::D1) c1 = true;
        if (rows[j].detector == DetectorId::D2) c2 = true;
      }
    }
    auto& tally = out.by_setting[key];
    tally.trials += 1;
    if (c1) tally.singles_1 += 1;
    if (c2) tally.singles_2 += 1;
    if (c1 && c2) tally.coincidences += 1;
    i = j;
  }
  return out;
}

}  // namespace spinlink
