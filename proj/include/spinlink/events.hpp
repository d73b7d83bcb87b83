#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "spinlink/detection.hpp"
#include "spinlink/errors.hpp"

namespace spinlink {

// Event-file format: CSV with the fixed header below, one row per armed
// detector per cycle; angle columns carry fixed six-decimal radians. Cycles
// in which no armed detector clicked carry no information beyond the trial
// totals tracked by the run config, so simulators omit their rows to keep
// large campaigns on disk manageable.
inline constexpr const char* kEventHeader =
    "cycle,detector,clicked,setting_theta1,setting_theta2,basis,campaign";

inline void append_event_row(std::string& out, const EventRow& row) {
  char buf[160];
  const int n =
      std::snprintf(buf, sizeof buf, "%lld,%s,%d,%.6f,%.6f,%s,%s\n",
                    static_cast<long long>(row.cycle), detector_name(row.detector),
                    row.clicked ? 1 : 0, row.theta1, row.theta2, row.basis.c_str(),
                    row.campaign.c_str());
  out.append(buf, static_cast<std::size_t>(n));
}

inline void write_event_file(const std::string& path, const std::string& body) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ConfigError("cannot open event file for writing: " + path);
  std::fputs(kEventHeader, f);
  std::fputc('\n', f);
  if (!body.empty()) std::fwrite(body.data(), 1, body.size(), f);
  std::fclose(f);
}

namespace detail {

inline DetectorId parse_detector(const char* s, std::size_t len) {
  if (len == 2 && s[0] == 'D') {
    if (s[1] == '1') return DetectorId::D1;
    if (s[1] == '2') return DetectorId::D2;
    if (s[1] == '3') return DetectorId::D3;
  }
  throw DataIntegrityError("bad detector field in event file");
}

}  // namespace detail

// Streaming reader: hands each row to `sink`. Validates the header and field
// count; per-field syntax errors surface as DataIntegrityError.
template <typename Sink>
void for_each_event_row(const std::string& path, Sink&& sink) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw DataIntegrityError("cannot open event file: " + path);
  char line[512];
  if (!std::fgets(line, sizeof line, f)) {
    std::fclose(f);
    throw DataIntegrityError("empty event file: " + path);
  }
  {
    std::size_t n = std::strlen(line);
    while (n > 0 && (line[n - 1] == '\n' || line[n - 1] == '\r')) line[--n] = '\0';
    if (std::strcmp(line, kEventHeader) != 0) {
      std::fclose(f);
      throw DataIntegrityError("unexpected event file header: " + std::string(line));
    }
  }
  std::int64_t lineno = 1;
  EventRow row;
  while (std::fgets(line, sizeof line, f)) {
    ++lineno;
    char* fields[7];
    int nf = 0;
    char* p = line;
    fields[nf++] = p;
    for (; *p && *p != '\n' && *p != '\r'; ++p) {
      if (*p == ',') {
        *p = '\0';
        if (nf == 7) {
          std::fclose(f);
          throw DataIntegrityError("too many fields at line " + std::to_string(lineno));
        }
        fields[nf++] = p + 1;
      }
    }
    *p = '\0';
    if (nf != 7) {
      if (nf == 1 && fields[0][0] == '\0') continue;  // trailing blank line
      std::fclose(f);
      throw DataIntegrityError("expected 7 fields at line " + std::to_string(lineno));
    }
    char* end = nullptr;
    row.cycle = std::strtoll(fields[0], &end, 10);
    if (end == fields[0]) {
      std::fclose(f);
      throw DataIntegrityError("bad cycle index at line " + std::to_string(lineno));
    }
    try {
      row.detector = detail::parse_detector(fields[1], std::strlen(fields[1]));
    } catch (...) {
      std::fclose(f);
      throw;
    }
    row.clicked = fields[2][0] == '1';
    row.theta1 = std::strtod(fields[3], nullptr);
    row.theta2 = std::strtod(fields[4], nullptr);
    row.basis.assign(fields[5]);
    row.campaign.assign(fields[6]);
    sink(row);
  }
  std::fclose(f);
}

inline std::vector<EventRow> read_event_file(const std::string& path) {
  std::vector<EventRow> rows;
  for_each_event_row(path, [&](const EventRow& r) { rows.push_back(r); });
  return rows;
}

}  // namespace spinlink
