#include "csc/config.hpp"
#include "csc/errors.hpp"
#include "csc/report.hpp"
#include "doctest.h"

using namespace csc;

TEST_CASE("config formats and parses back to the same values") {
  ExperimentConfig cfg;
  cfg.name = "round_trip";
  cfg.seed = 1234567890123ULL;
  cfg.attack = AttackKind::blend;
  cfg.poison_rate = 0.05;
  cfg.blend_alpha = 0.3;
  cfg.min_pts = 12;
  cfg.poison_mode = PoisonMode::clean;
  cfg.synthetic.ambiguous_fraction = 0.25;
  const auto back = parse_config(format_config(cfg));
  CHECK(back.entries() == cfg.entries());
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(parse_config(""), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("csc-config v1\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("csc-config v1\nseed 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("csc-config v1\nepochs = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("csc-config v1\nattack = laser\n"), ConfigError);
  const auto c = parse_config("# comment\n\ncsc-config v1\nattack = badnets  # alias\nseed = 7\n");
  CHECK(c.attack == AttackKind::patch);
  CHECK(c.seed == 7);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg"), ConfigError);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.validate(false);
  auto bad = cfg;
  bad.poison_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = cfg;
  bad.ep_detect = cfg.epochs + 1;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = cfg;
  bad.target_label = 10;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = cfg;
  bad.eps = -1;
  CHECK_THROWS_AS(bad.validate(false), ConfigError);
  bad = cfg;
  bad.source = DataSource::idx;
  bad.data_dir = "/nonexistent";
  CHECK_THROWS_AS(bad.validate(true), DataError);
  CHECK(cfg.effective_assumed_rate() == doctest::Approx(cfg.poison_rate));
  cfg.attack = AttackKind::signal;
  CHECK(cfg.effective_mode() == PoisonMode::clean);
  cfg.attack = AttackKind::patch;
  CHECK(cfg.effective_mode() == PoisonMode::dirty);
}

TEST_CASE("report JSON round trip") {
  Report r;
  r.name = "x";
  r.seed = 3;
  r.config = {{"a", "1"}, {"b", "two"}};
  r.acc_clean = 0.9512345678901234;
  r.asr = 0.001;
  r.detection_precision = 1.0;
  r.detection_recall = 0.98;
  r.segregated = 44;
  r.poison.attack = "patch";
  r.poison.poisoned = 45;
  r.reference = ModelMetrics{0.95, 0.95, 0.01};
  r.undefended = {0.94, 0.94, 0.99};
  r.spectral_signature = DetectionMetrics{0.1, 0.2, 60, 6};
  r.unlearning = ModelMetrics{0.5, 0.5, 0.0};
  r.segregation.push_back({1, 2.0, 0.3, 1.1, 4, 10, 300, 1, 45, 44});
  r.timing_seconds["total"] = 1.5;
  CHECK(report_from_json(report_to_json(r)) == r);
  auto no_timing = r;
  no_timing.timing_seconds.clear();
  CHECK(report_from_json(report_to_json(r, false)) == no_timing);
  CHECK(report_to_json(r, false) == report_to_json(no_timing, false));
  CHECK_THROWS_AS(report_from_json("{"), FormatError);
  CHECK_THROWS_AS(report_from_json("[1, 2]"), FormatError);
  CHECK(report_csv_header().size() == report_csv_row(r).size());
}
