#include <gtest/gtest.h>

#include "antibunch/scenario.hpp"

using namespace antibunch;

namespace {

std::string field_of(const std::string& text) {
  try {
    parse_scenario(Config::parse_string(text));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

const std::string kMinimal = "sim.duration_ps = 1e9\n";

}  // namespace

TEST(Config, ParsesValuesAndComments) {
  const auto c = Config::parse_string(
      "# heading\n"
      "  a.b = 1.5   # trailing\n"
      "name = some run\n"
      "list = 1, 2 ,3\n"
      "big = 2e9\n"
      "on = yes\n"
      "x = inf\n");
  EXPECT_DOUBLE_EQ(c.number("a.b", 0), 1.5);
  EXPECT_EQ(c.string("name", ""), "some run");
  EXPECT_EQ(c.numbers("list"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.count("big", 0), 2'000'000'000u);
  EXPECT_TRUE(c.flag("on", false));
  EXPECT_TRUE(std::isinf(c.number("x", 0)));
  EXPECT_DOUBLE_EQ(c.number("missing", 4.0), 4.0);
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(Config, SyntaxErrors) {
  EXPECT_THROW(Config::parse_string("just words\n"), ConfigError);
  EXPECT_THROW(Config::parse_string("= 3\n"), ConfigError);
  EXPECT_THROW(Config::parse_string("a = 1\na = 2\n"), ConfigError);
  const auto c = Config::parse_string("n = abc\nk = 1.5\nb = maybe\nneg = -3\n");
  EXPECT_THROW(c.number("n", 0), ConfigError);
  EXPECT_THROW(c.count("k", 0), ConfigError);
  EXPECT_THROW(c.count("neg", 0), ConfigError);
  EXPECT_THROW(c.flag("b", false), ConfigError);
  EXPECT_THROW(c.required_number("absent"), ConfigError);
}

TEST(Scenario, Defaults) {
  const auto s = parse_scenario(Config::parse_string(kMinimal));
  EXPECT_EQ(s.sim.duration, 1'000'000'000u);
  EXPECT_TRUE(s.is_cw());
  EXPECT_TRUE(std::isinf(s.background_snr));
  EXPECT_EQ(s.background_reference, BackgroundReference::arm_flux);
  EXPECT_DOUBLE_EQ(s.detector_a.efficiency, 0.30);
  EXPECT_DOUBLE_EQ(s.detector_b.dead_time, 50'000.0);
  EXPECT_EQ(s.correlation.bin_width, 100);
  EXPECT_EQ(s.analysis, AnalysisKind::none);
}

TEST(Scenario, PerDetectorOverridesShared) {
  const auto s = parse_scenario(Config::parse_string(kMinimal +
                                                     "detector.efficiency = 0.5\n"
                                                     "detector_b.efficiency = 0.2\n"
                                                     "detector_a.jitter_sigma_ps = 10\n"));
  EXPECT_DOUBLE_EQ(s.detector_a.efficiency, 0.5);
  EXPECT_DOUBLE_EQ(s.detector_b.efficiency, 0.2);
  EXPECT_DOUBLE_EQ(s.detector_a.jitter_sigma, 10.0);
  EXPECT_DOUBLE_EQ(s.detector_b.jitter_sigma, 212.0);
}

TEST(Scenario, DurationIsRequired) {
  EXPECT_EQ(field_of(""), "sim.duration_ps");
  EXPECT_EQ(field_of("sim.duration_ps = 0\n"), "sim.duration_ps");
}

TEST(Scenario, ErrorsNameTheField) {
  EXPECT_EQ(field_of(kMinimal + "emitter.gamma_ns_inv = -1\n"), "emitter");
  EXPECT_EQ(field_of(kMinimal + "cavity.q_factor = 0\n"), "cavity");
  EXPECT_EQ(field_of(kMinimal + "drive.kind = laser\n"), "drive.kind");
  EXPECT_EQ(field_of(kMinimal + "drive.kind = square\ndrive.duty = 0.5\n"), "drive.rep_rate_mhz");
  EXPECT_EQ(field_of(kMinimal + "drive.kind = square\ndrive.rep_rate_mhz = 100\ndrive.duty = 1.5\n"), "drive");
  EXPECT_EQ(field_of(kMinimal + "detector_a.efficiency = 1.5\n"), "detector_a");
  EXPECT_EQ(field_of(kMinimal + "background.snr = 0\n"), "background.snr");
  EXPECT_EQ(field_of(kMinimal + "background.reference = total\n"), "background.reference");
  EXPECT_EQ(field_of(kMinimal + "correlation.bin_width_ps = 0.5\n"), "correlation");
  EXPECT_EQ(field_of(kMinimal + "correlation.max_tau_ps = 50\n"), "correlation");
  EXPECT_EQ(field_of(kMinimal + "correlation.mode = half\n"), "correlation.mode");
  EXPECT_EQ(field_of(kMinimal + "analysis.kind = pulsed\n"), "analysis.kind");
  EXPECT_EQ(field_of(kMinimal + "sweep.powers_mw = 1, -2\n"), "sweep.powers_mw");
  EXPECT_EQ(field_of(kMinimal + "emitter.gama_ns_inv = 1\n"), "emitter.gama_ns_inv");
}

TEST(Scenario, ShippedScenariosParse) {
  for (const char* name : {"cw_fig2", "pulsed_100mhz", "pulsed_300mhz", "lifetime_80mhz", "sweep", "spectrum"}) {
    EXPECT_NO_THROW(load_scenario(std::string(ANTIBUNCH_SCENARIO_DIR) + "/" + name + ".cfg")) << name;
  }
  const auto s = load_scenario(std::string(ANTIBUNCH_SCENARIO_DIR) + "/pulsed_100mhz.cfg");
  ASSERT_TRUE(std::holds_alternative<SquareModulated>(s.drive));
  EXPECT_DOUBLE_EQ(std::get<SquareModulated>(s.drive).rep_rate, 100.0);
  EXPECT_EQ(s.analysis, AnalysisKind::pulsed);
}
