#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "qdband/mc.hpp"

using namespace qdband;

namespace {

CoverageConfig small_config() {
  CoverageConfig cfg;
  cfg.dist = DistributionName::Uniform;
  cfg.n = 300;
  cfg.levels = {0.8, 0.9, 0.95};
  cfg.reps = 150;
  cfg.n_sims = 2000;
  cfg.seed = 41001;
  return cfg;
}

}  // namespace

TEST_CASE("coverage configuration validation", "[mc]") {
  CoverageConfig cfg = small_config();
  cfg.reps = 50;
  CHECK_THROWS_AS(run_coverage(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.levels = {1.2};
  CHECK_THROWS_AS(run_coverage(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.levels.clear();
  CHECK_THROWS_AS(run_coverage(cfg), std::invalid_argument);
}

TEST_CASE("coverage is monotone in the nominal level", "[mc]") {
  const CoverageReport report = run_coverage(small_config());
  REQUIRE(report.coverage.size() == 3);
  for (std::size_t i = 0; i + 1 < report.coverage.size(); ++i) {
    REQUIRE(report.coverage[i].second <= report.coverage[i + 1].second);
  }
  for (const auto& [level, p] : report.coverage) {
    REQUIRE(p >= 0.0);
    REQUIRE(p <= 1.0);
  }
  for (std::size_t i = 0; i < report.mc_stderr.size(); ++i) {
    const double p = report.coverage[i].second;
    REQUIRE(report.mc_stderr[i].second ==
            Catch::Approx(std::sqrt(p * (1 - p) / 150.0)).margin(1e-12));
  }
}

TEST_CASE("coverage runs are reproducible across thread counts", "[mc]") {
  CoverageConfig cfg = small_config();
  cfg.threads = 1;
  const CoverageReport a = run_coverage(cfg);
  cfg.threads = 4;
  const CoverageReport b = run_coverage(cfg);
  CHECK(a.coverage == b.coverage);
  CHECK(a.mc_stderr == b.mc_stderr);

  cfg.seed = 41002;
  const CoverageReport c = run_coverage(cfg);
  CHECK(a.coverage != c.coverage);
}

TEST_CASE("an effectively infinite critical value covers always", "[mc]") {
  CoverageConfig cfg = small_config();
  const Bandwidth bw = scaled_bandwidth(cfg.n, cfg.bandwidth_c);
  CriticalValues huge{CritvalMethod::KnownProcess,
                      cfg.n,
                      bw.value(),
                      cfg.kernel_name,
                      cfg.grid,
                      1000,
                      0,
                      {},
                      {}};
  for (double level : cfg.levels) {
    huge.one_sided.emplace_back(level, 1e9);
    huge.absolute.emplace_back(1.0 - (1.0 - level) / 2.0, 1e9);
  }
  const CoverageReport report = run_coverage(cfg, huge);
  for (const auto& [level, p] : report.coverage) REQUIRE(p == 1.0);
}

TEST_CASE("coverage is nearly invariant to the data distribution", "[mc]") {
  // reduced-scale version of the full-size comparison: same critical values
  // for all three distributions at n = 5000, level 0.95
  CoverageConfig cfg;
  cfg.n = 5000;
  cfg.levels = {0.95};
  cfg.reps = 600;
  cfg.n_sims = 5000;
  cfg.seed = 41003;

  const CriticalValues critical = coverage_critical_values(cfg);
  double estimates[3];
  double ses[3];
  int i = 0;
  for (DistributionName dist :
       {DistributionName::Uniform, DistributionName::Linear,
        DistributionName::TruncNormal}) {
    cfg.dist = dist;
    const CoverageReport report = run_coverage(cfg, critical);
    estimates[i] = report.coverage[0].second;
    ses[i] = report.mc_stderr[0].second;
    ++i;
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const double joint = std::hypot(ses[a], ses[b]);
      REQUIRE(std::abs(estimates[a] - estimates[b]) <= 0.02 + 3.0 * joint);
    }
  }
}

TEST_CASE("band ensembles are deterministic and mostly cover", "[mc]") {
  CHECK_THROWS_AS(
      band_ensemble(DistributionName::Uniform, 500, 0.9, 0, 41004),
      std::invalid_argument);

  const BandEnsemble small =
      band_ensemble(DistributionName::Linear, 500, 0.9, 3, 41004,
                    KernelName::TruncatedNormal, Grid::standard(), 2000);
  REQUIRE(small.bands.size() == 3);
  CHECK(small.bands[0].lower != small.bands[1].lower);

  const BandEnsemble again =
      band_ensemble(DistributionName::Linear, 500, 0.9, 3, 41004,
                    KernelName::TruncatedNormal, Grid::standard(), 2000);
  CHECK(small.bands[2].lower == again.bands[2].lower);
  CHECK(small.bands[2].upper == again.bands[2].upper);

  // true curve present and plausible for the linear distribution
  REQUIRE(small.true_qd.size() == Grid::standard().size());
  CHECK(small.true_qd.front() == Catch::Approx(2.0).epsilon(0.02));

  const BandEnsemble big =
      band_ensemble(DistributionName::Uniform, 500, 0.9, 100, 41005,
                    KernelName::TruncatedNormal, Grid::standard(), 5000);
  int covering = 0;
  for (const auto& band : big.bands) {
    if (covers(band, big.true_qd)) ++covering;
  }
  // nominal 90% bands overcover slightly at this size; allow wide MC slack
  CHECK(covering >= 85);
  CHECK(covering <= 100);
}

TEST_CASE("large-sample coverage lands on the reference values", "[mc]") {
  // linear data, n = 5000: two-sided coverage near 0.949 at level 0.9 and
  // 0.996 at level 0.99
  CoverageConfig cfg;
  cfg.dist = DistributionName::Linear;
  cfg.n = 5000;
  cfg.levels = {0.9, 0.99};
  cfg.reps = 2000;
  cfg.n_sims = 20000;
  cfg.seed = 41006;
  const CoverageReport report = run_coverage(cfg);
  CHECK(report.coverage_at(0.9) == Catch::Approx(0.949).margin(0.02));
  CHECK(report.coverage_at(0.99) == Catch::Approx(0.996).margin(0.01));
}

TEST_CASE("coverage reports serialize to JSON and a table row", "[mc]") {
  const CoverageReport report = run_coverage(small_config());

  const auto j = to_json(report);
  CHECK(j.at("dist") == "uniform");
  CHECK(j.at("n") == 300);
  CHECK(j.at("coverage").size() == 3);
  CHECK(j.at("mc_stderr").size() == 3);
  CHECK(!j.contains("elapsed"));  // wall time would break byte-identity

  const std::string csv = to_csv(report);
  CHECK(csv.find("distribution,n,cov@0.8,cov@0.9,cov@0.95") == 0);
  CHECK(csv.find("uniform,300,") != std::string::npos);
}
