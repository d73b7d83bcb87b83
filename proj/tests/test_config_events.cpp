#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "spinlink/config.hpp"
#include "spinlink/events.hpp"
#include "spinlink/summary.hpp"

using namespace spinlink;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("spinlink_test_" + name);
}

}  // namespace

TEST_CASE("config parsing: comments, sections, typed getters") {
  const auto cfg = Config::from_string(
      "# run setup\n"
      "campaign = chsh\n"
      "seed = 99\n"
      "source.p_pair = 3.3e-3   # inline comment\n"
      "\n"
      "memory.tau_life_us = 5.0\n");
  CHECK(cfg.require_string("campaign") == "chsh");
  CHECK(cfg.get_uint("seed", 0) == 99);
  CHECK(cfg.get_double("source.p_pair", 0.0) == doctest::Approx(3.3e-3));
  CHECK(cfg.get_double("missing.key", 7.5) == 7.5);
  CHECK(cfg.has("memory.tau_life_us"));
  CHECK_FALSE(cfg.has("memory.eta0"));
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(Config::from_string("just a line without equals\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("key =\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("= value\n"), ConfigError);
  const auto cfg = Config::from_string("a = not_a_number\n");
  CHECK_THROWS_AS(cfg.get_double("a", 0.0), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/path.cfg"), ConfigError);
  CHECK_THROWS_AS(cfg.require_string("zzz"), ConfigError);
}

TEST_CASE("event file round trip preserves rows") {
  std::string body;
  std::vector<EventRow> rows;
  for (int c = 0; c < 50; ++c) {
    EventRow r{c * 3, c % 2 ? DetectorId::D2 : DetectorId::D1, true, 0.392699, -0.785398, "CHSH",
               "chsh"};
    rows.push_back(r);
    append_event_row(body, r);
  }
  const auto path = temp_file("roundtrip.csv");
  write_event_file(path.string(), body);
  const auto back = read_event_file(path.string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].cycle == rows[i].cycle);
    CHECK(back[i].detector == rows[i].detector);
    CHECK(back[i].clicked == rows[i].clicked);
    CHECK(back[i].theta1 == doctest::Approx(rows[i].theta1).epsilon(1e-9));
    CHECK(back[i].theta2 == doctest::Approx(rows[i].theta2).epsilon(1e-9));
    CHECK(back[i].basis == rows[i].basis);
    CHECK(back[i].campaign == rows[i].campaign);
  }
  fs::remove(path);
}

TEST_CASE("event reader flags bad files") {
  const auto path = temp_file("bad_header.csv");
  {
    std::ofstream out(path);
    out << "not,the,right,header\n1,D1,1,0,0,X,t\n";
  }
  CHECK_THROWS_AS(read_event_file(path.string()), DataIntegrityError);
  {
    std::ofstream out(path);
    out << kEventHeader << "\n1,D9,1,0.0,0.0,X,t\n";
  }
  CHECK_THROWS_AS(read_event_file(path.string()), DataIntegrityError);
  {
    std::ofstream out(path);
    out << kEventHeader << "\n1,D1,1,0.0\n";
  }
  CHECK_THROWS_AS(read_event_file(path.string()), DataIntegrityError);
  fs::remove(path);
  CHECK_THROWS_AS(read_event_file("/nonexistent/events.csv"), DataIntegrityError);
}

TEST_CASE("summary round trip and metric accounting") {
  Summary s;
  s.set_meta("campaign", "chsh");
  s.set_meta("seed", "42");
  s.set_metric("chsh_S", Summary::Metric{2.291, 0.006, true, 250000});
  s.set_metric("broken", Summary::Metric{0.0, 0.0, false, -1});
  const std::string text = s.to_text();
  const Summary back = Summary::from_text(text);
  CHECK(back.meta("campaign") == "chsh");
  CHECK(back.meta("seed") == "42");
  const auto m = back.metric("chsh_S");
  REQUIRE(m.has_value());
  CHECK(m->value == doctest::Approx(2.291));
  CHECK(m->stderr == doctest::Approx(0.006));
  CHECK(m->count == 250000);
  CHECK(m->defined);
  CHECK_FALSE(back.metric("broken")->defined);
  CHECK_FALSE(back.metric("absent").has_value());
  // serialization is stable
  CHECK(back.to_text() == text);
}

TEST_CASE("reference comparison computes z and flags absences") {
  Summary s;
  s.set_metric("chsh_S", Summary::Metric{2.30, 0.006, true, -1});
  std::vector<ReferenceValue> ref;
  ref.push_back({"chsh_S", 2.29, 0.03, true});
  ref.push_back({"fidelity_bell", 0.894, 0.026, true});

  const auto report = compare_to_reference(s, ref, 3.0);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].present);
  // z = 0.01 / sqrt(0.03^2 + 0.006^2) = 0.327
  CHECK(report.rows[0].z == doctest::Approx(0.3268).epsilon(1e-3));
  CHECK(report.rows[0].pass);
  CHECK_FALSE(report.rows[1].present);
  CHECK_FALSE(report.all_pass);

  // exact-match and mismatch behavior with no uncertainties at all
  Summary s2;
  s2.set_metric("x", Summary::Metric{1.0, 0.0, true, -1});
  std::vector<ReferenceValue> ref2{{"x", 1.0, 0.0, false}};
  CHECK(compare_to_reference(s2, ref2).all_pass);
  ref2[0].value = 1.5;
  CHECK_FALSE(compare_to_reference(s2, ref2).all_pass);
}

TEST_CASE("reference file parsing") {
  const auto path = temp_file("ref.csv");
  {
    std::ofstream out(path);
    out << "# comment line\n"
        << "chsh_S,2.29,0.03\n"
        << "storage_efficiency,0.229,\n";
  }
  const auto ref = read_reference_file(path.string());
  REQUIRE(ref.size() == 2);
  CHECK(ref[0].metric == "chsh_S");
  CHECK(ref[0].has_uncertainty);
  CHECK(ref[1].metric == "storage_efficiency");
  CHECK_FALSE(ref[1].has_uncertainty);
  {
    std::ofstream out(path);
    out << "badline_without_commas\n";
  }
  CHECK_THROWS_AS(read_reference_file(path.string()), DataIntegrityError);
  fs::remove(path);
}
