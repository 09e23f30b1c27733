#include <doctest.h>

#include <cmath>

#include "squint/harness.hpp"

using namespace squint::harness;
using nlohmann::json;

namespace {

json experts_config(const std::string& prior, std::uint64_t T) {
  return json::parse(R"({
    "schema": "squint-experiment/1", "mode": "experts", "K": 3, "T": 0,
    "algorithm": {"name": "squint", "prior": "improper"},
    "environment": {"generator": "adversarial_shift", "segment_length": 25, "noise": 0.1, "seed": 5},
    "report": {"singletons": true, "near_best_fraction": 0.1, "potential_every": 5}})")
      .patch(json::array({{{"op", "replace"}, {"path", "/algorithm/prior"}, {"value", prior}},
                          {{"op", "replace"}, {"path", "/T"}, {"value", T}}}));
}

}  // namespace

TEST_CASE("stochastic generator") {
  CHECK(gen_stochastic(3, {0, 0, 0}, 1, 50) == LossStream(50, std::vector<double>(3, 0.0)));
  CHECK(gen_stochastic(2, {1, 1}, 1, 50) == LossStream(50, std::vector<double>(2, 1.0)));
  const std::uint64_t T = 100000;
  const double p = 0.3;
  const auto s = gen_stochastic(1, {p}, 42, T);
  double sum = 0;
  for (const auto& r : s) sum += r[0];
  CHECK(std::abs(sum - p * T) <= 3 * std::sqrt(T * p * (1 - p)));
  CHECK_THROWS(gen_stochastic(1, {1.5}, 0, 1));
  CHECK(gen_stochastic(2, {0.5, 0.5}, 9, 30) == gen_stochastic(2, {0.5, 0.5}, 9, 30));
}

TEST_CASE("shift generator") {
  const auto one = gen_adversarial_shift(3, 100, 0, 100);
  for (const auto& r : one) CHECK(r == std::vector<double>{0, 1, 1});
  CHECK(gen_adversarial_shift(3, 40, 0, 40) == gen_adversarial_shift(3, 1000, 0, 40));
  const auto s = gen_adversarial_shift(3, 7, 0, 50);
  for (std::size_t t = 0; t < 50; ++t) CHECK(s[t][(t / 7) % 3] == 0.0);
  CHECK_THROWS(gen_adversarial_shift(3, 0, 0, 5));
}

TEST_CASE("config validation") {
  auto good = experts_config("improper", 10);
  CHECK_NOTHROW(ExperimentConfig::from_json(good));
  auto unknown = good;
  unknown["surprise"] = 1;
  CHECK_THROWS(ExperimentConfig::from_json(unknown));
  auto schema = good;
  schema["schema"] = "squint-experiment/2";
  CHECK_THROWS(ExperimentConfig::from_json(schema));
  auto nested = good;
  nested["algorithm"]["eta"] = 1;
  CHECK_THROWS(ExperimentConfig::from_json(nested));
  auto means = good;
  means["environment"] = {{"generator", "stochastic"}, {"means", {0.1, 2.0, 0.3}}};
  CHECK_THROWS(ExperimentConfig::from_json(means));
}

TEST_CASE("empty horizon") {
  const auto r = run_experiment(ExperimentConfig::from_json(experts_config("improper", 0)));
  CHECK(r.rows.empty());
  CHECK(r.violations == 0);
  CHECK(r.summary["max_potential"] == 0.0);
}

TEST_CASE("runs audit clean and reproduce") {
  for (const char* prior : {"conjugate", "cv", "improper", "grid"}) {
    const auto cfg = ExperimentConfig::from_json(experts_config(prior, 200));
    const auto a = run_experiment(cfg);
    CHECK(a.violations == 0);
    CHECK(a.summary["violation"] == false);
    const auto csv = format_csv(a);
    CHECK(csv == format_csv(run_experiment(cfg)));
    const auto audit = audit_csv(csv, &cfg);
    CHECK(audit.ok());
    CHECK(audit.rows == 200);
  }
}

TEST_CASE("audit catches a tampered regret column") {
  const auto cfg = ExperimentConfig::from_json(experts_config("improper", 30));
  auto csv = format_csv(run_experiment(cfg));
  const auto header_end = csv.find('\n');
  const auto row_end = csv.find('\n', header_end + 1);
  std::string row = csv.substr(header_end + 1, row_end - header_end - 1);
  // Replace R_e0 (column 8 with K = 3) with a huge value.
  std::size_t pos = 0;
  for (int i = 0; i < 7; ++i) pos = row.find(',', pos) + 1;
  const auto end = row.find(',', pos);
  row.replace(pos, end - pos, "1000");
  csv.replace(header_end + 1, row_end - header_end - 1, row);
  CHECK_FALSE(audit_csv(csv).ok());
  CHECK_FALSE(audit_csv(csv, &cfg).ok());
}

TEST_CASE("combinatorial run") {
  const auto cfg = ExperimentConfig::from_json(json::parse(R"({
    "schema": "squint-experiment/1", "mode": "combinatorial", "T": 64,
    "class": {"type": "k_subsets", "K": 4, "m": 2},
    "algorithm": {"name": "component_iprod"},
    "environment": {"generator": "uniform", "low": -1, "high": 1, "seed": 2},
    "report": {"comparators": "vertices", "potential_every": 1}})"));
  const auto r = run_experiment(cfg);
  CHECK(r.violations == 0);
  CHECK(r.targets.size() == 6);
  CHECK(audit_csv(format_csv(r), &cfg).ok());
}
