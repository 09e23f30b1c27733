#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "squint/experts.hpp"
#include "squint/polytopes.hpp"

namespace squint::harness {

/// std::mt19937_64 seeded with the config seed. A uniform double is the top 53
/// bits of one draw times 2^-53; a Bernoulli(p) draw is uniform() < p.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

using LossStream = std::vector<std::vector<double>>;

/// Independent Bernoulli(means[k]) losses.
LossStream gen_stochastic(std::size_t K, const std::vector<double>& means, std::uint64_t seed, std::uint64_t T);

/// Expert (t / segment_length) mod K gets loss 0, the rest 1; each entry is
/// flipped with probability `noise`.
LossStream gen_adversarial_shift(std::size_t K, std::uint64_t segment_length, std::uint64_t seed, std::uint64_t T,
                                 double noise = 0.0);

/// Independent uniform losses on [low, high].
LossStream gen_uniform(std::size_t K, double low, double high, std::uint64_t seed, std::uint64_t T);

enum class Mode { Experts, Combinatorial };

struct SquintAlgorithm {
  LearningRatePrior prior;
  std::string prior_name;  // conjugate | cv | improper | grid
};
struct IProdAlgorithm {
  std::size_t points = 32;
};
struct HedgeAlgorithm {
  double eta = 0.5;
};
struct ComponentIProdAlgorithm {
  std::uint64_t T_max = 0;  // 0 means the experiment horizon
};
using Algorithm = std::variant<SquintAlgorithm, IProdAlgorithm, HedgeAlgorithm, ComponentIProdAlgorithm>;

struct Environment {
  std::string generator;  // stochastic | adversarial_shift | uniform
  std::uint64_t seed = 0;
  std::vector<double> means;
  std::uint64_t segment_length = 1;
  double noise = 0.0;
  double low = 0.0;
  double high = 1.0;
};

struct Report {
  bool singletons = true;
  std::optional<double> near_best_fraction;
  std::vector<std::vector<std::size_t>> subsets;
  bool all_vertices = false;
  std::vector<std::vector<double>> comparators;
  std::uint64_t potential_every = 10;
};

struct ExperimentConfig {
  Mode mode = Mode::Experts;
  std::size_t K = 0;
  std::uint64_t T = 0;
  std::vector<double> prior;  // empty: uniform (experts) or 1/2 (combinatorial)
  Algorithm algorithm;
  Environment environment;
  std::optional<polytopes::ConceptClass> concept_class;
  Report report;
  std::string csv_path;
  std::string summary_path;

  /// Schema "squint-experiment/1". Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::string& path);
  std::string algorithm_name() const;
};

/// One audited quantity: an expert subset or a combinatorial comparator.
struct AuditTarget {
  std::string name;
  std::vector<std::size_t> subset;  // experts mode
  double pi_mass = 0.0;
  std::vector<double> v;            // combinatorial mode
  double entropy = 0.0;
  bool near_best = false;
};

struct ExperimentResult {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<AuditTarget> targets;
  nlohmann::json summary;
  std::size_t violations = 0;
};

LossStream generate_losses(const ExperimentConfig& config);

/// Runs the configured game. Configuration errors throw before any round.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Regret bound matching the configured algorithm, or NaN when it has none.
double bound_for(const ExperimentConfig& config, const AuditTarget& target, double V, std::uint64_t t);

/// Fixed-format CSV; numbers printed with %.17g so they round-trip.
std::string format_csv(const ExperimentResult& result);
void write_text(const std::string& path, const std::string& text);

struct AuditReport {
  std::size_t rows = 0;
  std::size_t checks = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Re-checks every R <= bound triple of a CSV written by run_experiment. With a
/// config, also recomputes R, V and bounds from the loss and weight columns.
AuditReport audit_csv(const std::string& csv_text, const ExperimentConfig* config = nullptr);

}  // namespace squint::harness
