#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace squint::polytopes {

/// A concept c in {0,1}^K.
using Concept = std::vector<std::uint8_t>;

/// Directed acyclic graph whose source-to-sink paths are the concepts.
/// Edge i is coordinate i of the usage vector.
struct Dag {
  struct Edge {
    std::size_t from;
    std::size_t to;
  };
  std::size_t nodes = 0;
  std::vector<Edge> edges;
  std::size_t source = 0;
  std::size_t sink = 0;
  std::vector<std::string> node_names;

  /// Parses {"nodes": [...], "edges": [{"source", "target", "index"}], "source", "sink"}.
  /// Edge indices are 1-based and must be a permutation of 1..K.
  static Dag from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  /// Throws unless the graph is acyclic and every edge lies on a source-sink path.
  void validate() const;
};

struct KSubsets {
  std::size_t m;
};

struct DagPaths {
  Dag dag;
};

struct ExplicitVertices {
  std::vector<Concept> vertices;
};

/// sum_k coeffs[k] u^k (== or <=) rhs
struct LinearConstraint {
  enum class Relation { Equal, LessEqual };
  std::vector<double> coeffs;
  Relation relation;
  double rhs;
};

class ConceptClass {
 public:
  using Kind = std::variant<KSubsets, DagPaths, ExplicitVertices>;

  static ConceptClass k_subsets(std::size_t K, std::size_t m);
  static ConceptClass dag_paths(Dag dag);
  static ConceptClass explicit_vertices(std::vector<Concept> vertices);
  /// {"type": "k_subsets", "K", "m"} | {"type": "dag", "dag": {...}} | {"type": "explicit", "vertices": [...]}
  static ConceptClass from_json(const nlohmann::json& doc);

  std::size_t dimension() const noexcept { return K_; }
  const Kind& kind() const noexcept { return kind_; }
  std::string name() const;

  /// Linear description of conv(C). Empty for explicit classes that are not the full cube.
  const std::vector<LinearConstraint>& hull_constraints() const noexcept { return constraints_; }
  /// Explicit class containing every point of {0,1}^K, whose hull is the cube.
  bool is_full_cube() const noexcept { return full_cube_; }

  /// Largest violation of the hull description (or, for general explicit
  /// classes, the distance of the best convex combination of vertices).
  double hull_residual(std::span<const double> u) const;

 private:
  ConceptClass(std::size_t K, Kind kind);

  std::size_t K_;
  Kind kind_;
  std::vector<LinearConstraint> constraints_;
  bool full_cube_ = false;
};

struct ProjectionOptions {
  double tolerance = 1e-12;      // target feasibility residual
  double max_residual = 1e-9;    // reported as failure above this
  std::size_t max_sweeps = 10000;
};

struct ProjectionResult {
  std::vector<double> u;
  double residual = 0.0;
  std::size_t iterations = 0;
};

class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(const std::string& what, ProjectionResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const ProjectionResult& partial() const noexcept { return partial_; }

 private:
  ProjectionResult partial_;
};

/// Coordinates of u_tilde are clamped into [1e-12, 1 - 1e-12] first.
inline constexpr double kInteriorClamp = 1e-12;

std::vector<double> clamp_interior(std::span<const double> u);

/// argmin_{u in conv(C)} binary relative entropy D2(u || u_tilde).
ProjectionResult project_detailed(const ConceptClass& cls, std::span<const double> u_tilde,
                                  const ProjectionOptions& options = {});

std::vector<double> project(const ConceptClass& cls, std::span<const double> u_tilde,
                            const ProjectionOptions& options = {});

struct Decomposition {
  std::vector<Concept> concepts;
  std::vector<double> weights;

  std::vector<double> reconstruct(std::size_t K) const;
};

class InfeasiblePoint : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Convex combination of at most 2K concepts reproducing u. Throws
/// InfeasiblePoint when u is farther than feasibility_tol from conv(C).
Decomposition decompose(const ConceptClass& cls, std::span<const double> u,
                        double feasibility_tol = 1e-8);

class EnumerationLimit : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Complete duplicate-free list of C, in a canonical order.
std::vector<Concept> enumerate_vertices(const ConceptClass& cls, std::size_t cap = 100000);

/// Closed-form minimizer of D2(u' || u) + sum_k (u'^k x1^k + (1 - u'^k) x0^k):
/// u'^k = u^k e^{-x1^k} / (u^k e^{-x1^k} + (1 - u^k) e^{-x0^k}).
std::vector<double> unconstrained_update(std::span<const double> u, std::span<const double> x1,
                                         std::span<const double> x0);

std::vector<double> to_vector(const Concept& c);

}  // namespace squint::polytopes
