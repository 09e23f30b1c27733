#include "squint/polytopes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

namespace squint::polytopes {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double u) { return std::log(u) - std::log1p(-u); }

std::string node_key(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw std::invalid_argument("dag: node ids must be strings or integers");
}

void require_keys(const json& doc, std::initializer_list<const char*> allowed, const char* where) {
  if (!doc.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

// Topological order of the DAG, or an exception if it has a cycle.
std::vector<std::size_t> topological_order(const Dag& dag) {
  std::vector<std::size_t> indegree(dag.nodes, 0);
  std::vector<std::vector<std::size_t>> out(dag.nodes);
  for (std::size_t e = 0; e < dag.edges.size(); ++e) {
    ++indegree[dag.edges[e].to];
    out[dag.edges[e].from].push_back(e);
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t v = dag.nodes; v-- > 0;) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t e : out[v]) {
      if (--indegree[dag.edges[e].to] == 0) ready.push_back(dag.edges[e].to);
    }
  }
  if (order.size() != dag.nodes) throw std::invalid_argument("dag: graph has a cycle");
  return order;
}

std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  k = std::min(k, n - k);
  long double value = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) {
    value = value * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (value > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(value));
}

// Monotone scalar root: find lambda with g(lambda) = 0 for increasing g,
// given g and its derivative. Safeguarded Newton inside an expanding bracket.
template <class G>
double solve_increasing(G&& g_and_slope, double tol) {
  constexpr double kLimit = 1000.0;
  double lo = -1.0;
  double hi = 1.0;
  while (g_and_slope(lo).first > 0.0 && lo > -kLimit) lo *= 2.0;
  while (g_and_slope(hi).first < 0.0 && hi < kLimit) hi *= 2.0;
  lo = std::max(lo, -kLimit);
  hi = std::min(hi, kLimit);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const auto [g, slope] = g_and_slope(x);
    if (std::abs(g) <= tol) return x;
    if (g > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = slope > 0.0 ? x - g / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

double constraint_residual(const std::vector<LinearConstraint>& constraints, std::span<const double> u) {
  double worst = 0.0;
  for (const auto& c : constraints) {
    double lhs = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) lhs += c.coeffs[k] * u[k];
    const double gap = lhs - c.rhs;
    worst = std::max(worst, c.relation == LinearConstraint::Relation::Equal ? std::abs(gap) : std::max(gap, 0.0));
  }
  return worst;
}

// Away-step Frank-Wolfe over the vertex list, minimizing a smooth convex function
// of u = sum_i p_i c_i. `gradient` fills g at u; `line_search` returns the step
// in [0, gmax] along d.
struct FrankWolfeResult {
  std::vector<double> p;
  std::vector<double> u;
  double gap = 0.0;
  std::size_t iterations = 0;
};

template <class Gradient, class LineSearch>
FrankWolfeResult frank_wolfe(const std::vector<std::vector<double>>& vertices, std::vector<double> p,
                             Gradient&& gradient, LineSearch&& line_search, double tol,
                             std::size_t max_iterations) {
  const std::size_t n = vertices.size();
  const std::size_t K = vertices.front().size();
  FrankWolfeResult r;
  r.u.assign(K, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < K; ++k) r.u[k] += p[i] * vertices[i][k];
  }
  std::vector<double> g(K), d(K);
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += a[k] * b[k];
    return s;
  };
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    gradient(r.u, g);
    const double gu = dot(g, r.u);
    std::size_t s = 0, a = n;
    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = dot(g, vertices[i]);
      if (gi < best) {
        best = gi;
        s = i;
      }
      if (p[i] > 0.0 && gi > worst) {
        worst = gi;
        a = i;
      }
    }
    r.gap = gu - best;
    if (r.gap <= tol) break;
    const bool toward = r.gap >= worst - gu || a == n || p[a] >= 1.0;
    double gmax;
    if (toward) {
      for (std::size_t k = 0; k < K; ++k) d[k] = vertices[s][k] - r.u[k];
      gmax = 1.0;
    } else {
      for (std::size_t k = 0; k < K; ++k) d[k] = r.u[k] - vertices[a][k];
      gmax = p[a] / (1.0 - p[a]);
    }
    const double step = line_search(r.u, d, gmax);
    if (!(step > 0.0)) break;
    if (toward) {
      for (double& x : p) x *= 1.0 - step;
      p[s] += step;
    } else {
      for (double& x : p) x *= 1.0 + step;
      p[a] -= step;
      if (step >= gmax) p[a] = 0.0;
    }
    for (std::size_t k = 0; k < K; ++k) r.u[k] += step * d[k];
  }
  r.p = std::move(p);
  return r;
}

std::vector<std::vector<double>> as_doubles(const std::vector<Concept>& concepts) {
  std::vector<std::vector<double>> out;
  out.reserve(concepts.size());
  for (const auto& c : concepts) out.push_back(to_vector(c));
  return out;
}

// Best convex combination of the vertices in the least-squares sense.
FrankWolfeResult least_squares_fit(const std::vector<std::vector<double>>& vertices, std::span<const double> target) {
  const std::size_t K = target.size();
  std::vector<double> p(vertices.size(), 1.0 / static_cast<double>(vertices.size()));
  auto gradient = [&](const std::vector<double>& u, std::vector<double>& g) {
    for (std::size_t k = 0; k < K; ++k) g[k] = 2.0 * (u[k] - target[k]);
  };
  auto line_search = [&](const std::vector<double>& u, const std::vector<double>& d, double gmax) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      num -= (u[k] - target[k]) * d[k];
      den += d[k] * d[k];
    }
    if (den <= 0.0) return 0.0;
    return std::clamp(num / den, 0.0, gmax);
  };
  return frank_wolfe(vertices, std::move(p), gradient, line_search, 1e-20, 200000);
}

// Drops vertices from a convex combination until at most K + 1 remain, keeping
// the represented point fixed.
void caratheodory_reduce(std::vector<std::vector<double>>& points, std::vector<double>& weights) {
  const std::size_t K = points.empty() ? 0 : points.front().size();
  while (points.size() > K + 1) {
    const std::size_t n = points.size();
    Eigen::MatrixXd A(K + 1, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < K; ++k) A(k, i) = points[i][k];
      A(K, i) = 1.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd z = lu.kernel().col(0);
    if (z.maxCoeff() <= 0.0) z = -z;
    double step = std::numeric_limits<double>::infinity();
    std::size_t drop = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (z(i) > 1e-14 && weights[i] / z(i) < step) {
        step = weights[i] / z(i);
        drop = i;
      }
    }
    for (std::size_t i = 0; i < n; ++i) weights[i] -= step * z(i);
    weights[drop] = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      if (weights[i] <= 0.0) {
        points.erase(points.begin() + static_cast<std::ptrdiff_t>(i));
        weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
  }
}

Concept to_concept(const std::vector<double>& v) {
  Concept c(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) c[k] = v[k] > 0.5 ? 1 : 0;
  return c;
}

void normalize_decomposition(Decomposition& d) {
  const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
  for (double& w : d.weights) w /= total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dag

Dag Dag::from_json(const json& doc) {
  require_keys(doc, {"nodes", "edges", "source", "sink"}, "dag");
  Dag dag;
  std::map<std::string, std::size_t> ids;
  for (const auto& n : doc.at("nodes")) {
    const std::string key = node_key(n);
    if (!ids.emplace(key, dag.nodes).second) throw std::invalid_argument("dag: duplicate node '" + key + "'");
    dag.node_names.push_back(key);
    ++dag.nodes;
  }
  auto lookup = [&](const json& v) {
    const auto it = ids.find(node_key(v));
    if (it == ids.end()) throw std::invalid_argument("dag: unknown node '" + node_key(v) + "'");
    return it->second;
  };
  const auto& edges = doc.at("edges");
  dag.edges.assign(edges.size(), Edge{0, 0});
  std::vector<bool> seen(edges.size(), false);
  for (const auto& e : edges) {
    require_keys(e, {"source", "target", "index"}, "dag edge");
    const auto index = e.at("index").get<long long>();
    if (index < 1 || static_cast<std::size_t>(index) > edges.size() || seen[index - 1]) {
      throw std::invalid_argument("dag: edge indices must be a permutation of 1..K");
    }
    seen[index - 1] = true;
    dag.edges[index - 1] = Edge{lookup(e.at("source")), lookup(e.at("target"))};
  }
  dag.source = lookup(doc.at("source"));
  dag.sink = lookup(doc.at("sink"));
  dag.validate();
  return dag;
}

json Dag::to_json() const {
  json doc;
  doc["nodes"] = node_names;
  doc["edges"] = json::array();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    doc["edges"].push_back(
        {{"source", node_names[edges[e].from]}, {"target", node_names[edges[e].to]}, {"index", e + 1}});
  }
  doc["source"] = node_names[source];
  doc["sink"] = node_names[sink];
  return doc;
}

void Dag::validate() const {
  if (nodes == 0 || edges.empty()) throw std::invalid_argument("dag: needs nodes and edges");
  if (source >= nodes || sink >= nodes || source == sink) {
    throw std::invalid_argument("dag: source and sink must be distinct nodes");
  }
  for (const auto& e : edges) {
    if (e.from >= nodes || e.to >= nodes || e.from == e.to) throw std::invalid_argument("dag: bad edge");
  }
  const auto order = topological_order(*this);
  std::vector<bool> from_source(nodes, false), to_sink(nodes, false);
  from_source[source] = true;
  to_sink[sink] = true;
  for (std::size_t v : order) {
    for (const auto& e : edges) {
      if (e.from == v && from_source[v]) from_source[e.to] = true;
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    for (const auto& e : edges) {
      if (e.to == *it && to_sink[*it]) to_sink[e.from] = true;
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!from_source[edges[i].from] || !to_sink[edges[i].to]) {
      throw std::invalid_argument("dag: edge " + std::to_string(i + 1) + " is on no source-sink path");
    }
  }
}

// ---------------------------------------------------------------------------
// ConceptClass

ConceptClass::ConceptClass(std::size_t K, Kind kind) : K_(K), kind_(std::move(kind)) {
  auto bounds = [&] {
    for (std::size_t k = 0; k < K_; ++k) {
      LinearConstraint upper{std::vector<double>(K_, 0.0), LinearConstraint::Relation::LessEqual, 1.0};
      upper.coeffs[k] = 1.0;
      LinearConstraint lower{std::vector<double>(K_, 0.0), LinearConstraint::Relation::LessEqual, 0.0};
      lower.coeffs[k] = -1.0;
      constraints_.push_back(std::move(upper));
      constraints_.push_back(std::move(lower));
    }
  };
  if (const auto* ks = std::get_if<KSubsets>(&kind_)) {
    constraints_.push_back({std::vector<double>(K_, 1.0), LinearConstraint::Relation::Equal,
                            static_cast<double>(ks->m)});
    bounds();
  } else if (const auto* dp = std::get_if<DagPaths>(&kind_)) {
    const Dag& dag = dp->dag;
    for (std::size_t v = 0; v < dag.nodes; ++v) {
      if (v == dag.sink) continue;
      LinearConstraint c{std::vector<double>(K_, 0.0), LinearConstraint::Relation::Equal, 0.0};
      bool touched = false;
      for (std::size_t e = 0; e < K_; ++e) {
        if (dag.edges[e].from == v) {
          c.coeffs[e] = v == dag.source ? 1.0 : -1.0;
          touched = true;
        }
        if (dag.edges[e].to == v) {
          c.coeffs[e] = v == dag.source ? -1.0 : 1.0;
          touched = true;
        }
      }
      if (v == dag.source) c.rhs = 1.0;
      if (touched) constraints_.push_back(std::move(c));
    }
    bounds();
  } else {
    const auto& verts = std::get<ExplicitVertices>(kind_).vertices;
    if (K_ < 63 && verts.size() == (std::size_t{1} << K_)) {
      full_cube_ = true;
      bounds();
    }
  }
}

ConceptClass ConceptClass::k_subsets(std::size_t K, std::size_t m) {
  if (K == 0 || m > K) throw std::invalid_argument("k_subsets: need K >= 1 and 0 <= m <= K");
  return ConceptClass(K, KSubsets{m});
}

ConceptClass ConceptClass::dag_paths(Dag dag) {
  dag.validate();
  const std::size_t K = dag.edges.size();
  return ConceptClass(K, DagPaths{std::move(dag)});
}

ConceptClass ConceptClass::explicit_vertices(std::vector<Concept> vertices) {
  if (vertices.empty()) throw std::invalid_argument("explicit class: no vertices");
  const std::size_t K = vertices.front().size();
  if (K == 0) throw std::invalid_argument("explicit class: zero dimension");
  for (const auto& v : vertices) {
    if (v.size() != K) throw std::invalid_argument("explicit class: vertices differ in dimension");
    for (auto b : v) {
      if (b > 1) throw std::invalid_argument("explicit class: vertices must be 0/1");
    }
  }
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  return ConceptClass(K, ExplicitVertices{std::move(vertices)});
}

ConceptClass ConceptClass::from_json(const json& doc) {
  const std::string type = doc.at("type").get<std::string>();
  if (type == "k_subsets") {
    require_keys(doc, {"type", "K", "m"}, "concept class");
    return k_subsets(doc.at("K").get<std::size_t>(), doc.at("m").get<std::size_t>());
  }
  if (type == "dag") {
    require_keys(doc, {"type", "dag"}, "concept class");
    return dag_paths(Dag::from_json(doc.at("dag")));
  }
  if (type == "explicit") {
    require_keys(doc, {"type", "vertices"}, "concept class");
    std::vector<Concept> vertices;
    for (const auto& v : doc.at("vertices")) {
      Concept c;
      for (const auto& b : v) c.push_back(static_cast<std::uint8_t>(b.get<int>()));
      vertices.push_back(std::move(c));
    }
    return explicit_vertices(std::move(vertices));
  }
  throw std::invalid_argument("concept class: unknown type '" + type + "'");
}

std::string ConceptClass::name() const {
  if (const auto* ks = std::get_if<KSubsets>(&kind_)) {
    return "k_subsets(K=" + std::to_string(K_) + ", m=" + std::to_string(ks->m) + ")";
  }
  if (const auto* dp = std::get_if<DagPaths>(&kind_)) {
    return "dag_paths(nodes=" + std::to_string(dp->dag.nodes) + ", K=" + std::to_string(K_) + ")";
  }
  return "explicit(K=" + std::to_string(K_) + ", vertices=" +
         std::to_string(std::get<ExplicitVertices>(kind_).vertices.size()) + ")";
}

double ConceptClass::hull_residual(std::span<const double> u) const {
  if (u.size() != K_) throw std::invalid_argument("hull_residual: dimension mismatch");
  if (std::holds_alternative<ExplicitVertices>(kind_) && !full_cube_) {
    const auto fit = least_squares_fit(as_doubles(std::get<ExplicitVertices>(kind_).vertices), u);
    double worst = 0.0;
    for (std::size_t k = 0; k < K_; ++k) worst = std::max(worst, std::abs(fit.u[k] - u[k]));
    return worst;
  }
  return constraint_residual(constraints_, u);
}

// ---------------------------------------------------------------------------
// Projection

std::vector<double> clamp_interior(std::span<const double> u) {
  std::vector<double> out(u.begin(), u.end());
  for (double& x : out) {
    if (std::isnan(x)) throw std::invalid_argument("projection: NaN coordinate");
    x = std::clamp(x, kInteriorClamp, 1.0 - kInteriorClamp);
  }
  return out;
}

namespace {

ProjectionResult project_k_subsets(std::size_t m, const std::vector<double>& ut, const ProjectionOptions& opt) {
  const std::size_t K = ut.size();
  ProjectionResult r;
  if (m == 0 || m == K) {
    r.u.assign(K, m == 0 ? 0.0 : 1.0);
    return r;
  }
  std::vector<double> theta(K);
  for (std::size_t k = 0; k < K; ++k) theta[k] = logit(ut[k]);
  const double target = static_cast<double>(m);
  const double lambda = solve_increasing(
      [&](double l) {
        double s = 0.0, slope = 0.0;
        for (double t : theta) {
          const double u = sigmoid(t + l);
          s += u;
          slope += u * (1.0 - u);
        }
        ++r.iterations;
        return std::pair{s - target, slope};
      },
      0.25 * opt.tolerance);
  r.u.resize(K);
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    r.u[k] = sigmoid(theta[k] + lambda);
    sum += r.u[k];
  }
  r.residual = std::abs(sum - target);
  return r;
}

ProjectionResult project_dag(const Dag& dag, const std::vector<LinearConstraint>& constraints,
                             const std::vector<double>& ut, const ProjectionOptions& opt) {
  const std::size_t K = ut.size();
  // Each flow constraint touches a handful of edges with coefficient +-1.
  struct Row {
    std::vector<std::size_t> edges;
    std::vector<double> signs;
    double rhs;
  };
  std::vector<Row> rows;
  for (const auto& c : constraints) {
    if (c.relation != LinearConstraint::Relation::Equal) continue;
    Row row{{}, {}, c.rhs};
    for (std::size_t e = 0; e < K; ++e) {
      if (c.coeffs[e] != 0.0) {
        row.edges.push_back(e);
        row.signs.push_back(c.coeffs[e]);
      }
    }
    rows.push_back(std::move(row));
  }
  (void)dag;
  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) logits[k] = logit(ut[k]);

  ProjectionResult r;
  r.u.resize(K);
  auto residual = [&] {
    double worst = 0.0;
    for (const auto& row : rows) {
      double s = -row.rhs;
      for (std::size_t i = 0; i < row.edges.size(); ++i) s += row.signs[i] * sigmoid(logits[row.edges[i]]);
      worst = std::max(worst, std::abs(s));
    }
    return worst;
  };
  const std::vector<double> theta = logits;
  std::vector<double> lam(rows.size(), 0.0);
  // Cyclic sweeps first; they stall when the solution hugs a face.
  const std::size_t sweeps = std::min<std::size_t>(opt.max_sweeps, 200);
  for (r.iterations = 0; r.iterations < sweeps; ++r.iterations) {
    r.residual = residual();
    if (r.residual <= opt.tolerance) break;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto& row = rows[j];
      // Bregman projection onto one hyperplane: logit(u_e) += sign_e * lambda.
      const double lambda = solve_increasing(
          [&](double l) {
            double s = -row.rhs, slope = 0.0;
            for (std::size_t i = 0; i < row.edges.size(); ++i) {
              const double u = sigmoid(logits[row.edges[i]] + row.signs[i] * l);
              s += row.signs[i] * u;
              slope += u * (1.0 - u);
            }
            return std::pair{s, slope};
          },
          0.01 * opt.tolerance);
      for (std::size_t i = 0; i < row.edges.size(); ++i) logits[row.edges[i]] += row.signs[i] * lambda;
      lam[j] += lambda;
    }
  }
  if (residual() > opt.tolerance) {
    // Damped Newton on the dual: minimise sum softplus(theta + A^T lam) - b^T lam.
    const std::size_t n = rows.size();
    auto logits_of = [&](const std::vector<double>& l) {
      std::vector<double> z = theta;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < rows[j].edges.size(); ++i) z[rows[j].edges[i]] += rows[j].signs[i] * l[j];
      }
      return z;
    };
    auto dual = [&](const std::vector<double>& l) {
      const auto z = logits_of(l);
      long double g = 0.0L;
      for (double x : z) g += x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      for (std::size_t j = 0; j < n; ++j) g -= rows[j].rhs * l[j];
      return g;
    };
    for (std::size_t it = 0; it < 200; ++it) {
      logits = logits_of(lam);
      r.residual = residual();
      if (r.residual <= opt.tolerance) break;
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      Eigen::VectorXd grad(static_cast<Eigen::Index>(n));
      std::vector<double> u(K), d(K);
      for (std::size_t k = 0; k < K; ++k) {
        u[k] = sigmoid(logits[k]);
        d[k] = u[k] * (1.0 - u[k]);
      }
      for (std::size_t a = 0; a < n; ++a) {
        double g = -rows[a].rhs;
        for (std::size_t i = 0; i < rows[a].edges.size(); ++i) g += rows[a].signs[i] * u[rows[a].edges[i]];
        grad(static_cast<Eigen::Index>(a)) = g;
        for (std::size_t b = 0; b < n; ++b) {
          double h = 0.0;
          for (std::size_t i = 0; i < rows[a].edges.size(); ++i) {
            for (std::size_t j = 0; j < rows[b].edges.size(); ++j) {
              if (rows[a].edges[i] == rows[b].edges[j]) h += rows[a].signs[i] * rows[b].signs[j] * d[rows[a].edges[i]];
            }
          }
          H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = h;
        }
      }
      H.diagonal().array() += 1e-14 * (1.0 + H.diagonal().maxCoeff());
      const Eigen::VectorXd step = H.ldlt().solve(-grad);
      const long double g0 = dual(lam);
      const double descent = grad.dot(step);
      double t = 1.0;
      std::vector<double> trial(n);
      for (int back = 0; back < 60; ++back, t *= 0.5) {
        for (std::size_t j = 0; j < n; ++j) trial[j] = lam[j] + t * step(static_cast<Eigen::Index>(j));
        if (dual(trial) <= g0 + 1e-4L * t * descent) break;
        // Near the optimum the dual decrease falls below rounding; fall back to the residual.
        logits = logits_of(trial);
        if (residual() <= 0.5 * r.residual) break;
      }
      lam = trial;
      ++r.iterations;
    }
    logits = logits_of(lam);
  }
  r.residual = residual();
  for (std::size_t k = 0; k < K; ++k) r.u[k] = sigmoid(logits[k]);
  return r;
}

ProjectionResult project_explicit(const std::vector<Concept>& concepts, const std::vector<double>& ut,
                                  const ProjectionOptions& opt) {
  const std::size_t K = ut.size();
  const auto vertices = as_doubles(concepts);
  // Coordinates shared by every vertex are fixed; the rest stay interior.
  std::vector<bool> fixed(K, true);
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& v : vertices) fixed[k] = fixed[k] && v[k] == vertices.front()[k];
  }
  auto gradient = [&](const std::vector<double>& u, std::vector<double>& g) {
    for (std::size_t k = 0; k < K; ++k) g[k] = fixed[k] ? 0.0 : logit(u[k]) - logit(ut[k]);
  };
  auto line_search = [&](const std::vector<double>& u, const std::vector<double>& d, double gmax) {
    auto slope = [&](double s) {
      double v = 0.0, curv = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        if (fixed[k] || d[k] == 0.0) continue;
        const double x = u[k] + s * d[k];
        if (x <= 0.0 || x >= 1.0) return std::pair{d[k] * (x <= 0.0 ? -1.0 : 1.0) * 1e300, 1e300};
        v += d[k] * (logit(x) - logit(ut[k]));
        curv += d[k] * d[k] / (x * (1.0 - x));
      }
      return std::pair{v, curv};
    };
    if (slope(gmax).first <= 0.0) return gmax;
    double lo = 0.0, hi = gmax, s = 0.5 * gmax;
    for (int it = 0; it < 200; ++it) {
      const auto [v, c] = slope(s);
      if (v > 0.0) {
        hi = s;
      } else {
        lo = s;
      }
      double next = c > 0.0 && c < 1e299 ? s - v / c : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) <= 1e-17 * std::max(1.0, s)) return next;
      s = next;
    }
    return s;
  };
  std::vector<double> p(vertices.size(), 1.0 / static_cast<double>(vertices.size()));
  const auto fw = frank_wolfe(vertices, std::move(p), gradient, line_search, 0.01 * opt.tolerance,
                              100 * opt.max_sweeps);
  ProjectionResult r;
  r.u = fw.u;
  for (std::size_t k = 0; k < K; ++k) {
    if (fixed[k]) r.u[k] = vertices.front()[k];
  }
  r.residual = fw.gap;
  r.iterations = fw.iterations;
  return r;
}

}  // namespace

ProjectionResult project_detailed(const ConceptClass& cls, std::span<const double> u_tilde,
                                  const ProjectionOptions& options) {
  if (u_tilde.size() != cls.dimension()) throw std::invalid_argument("project: dimension mismatch");
  const auto ut = clamp_interior(u_tilde);
  ProjectionResult r;
  if (const auto* ks = std::get_if<KSubsets>(&cls.kind())) {
    r = project_k_subsets(ks->m, ut, options);
  } else if (const auto* dp = std::get_if<DagPaths>(&cls.kind())) {
    r = project_dag(dp->dag, cls.hull_constraints(), ut, options);
  } else if (cls.is_full_cube()) {
    r.u = ut;
  } else {
    r = project_explicit(std::get<ExplicitVertices>(cls.kind()).vertices, ut, options);
  }
  if (!(r.residual <= options.max_residual)) {
    throw ProjectionError("project: no convergence, residual " + std::to_string(r.residual), r);
  }
  return r;
}

std::vector<double> project(const ConceptClass& cls, std::span<const double> u_tilde,
                            const ProjectionOptions& options) {
  return project_detailed(cls, u_tilde, options).u;
}

// ---------------------------------------------------------------------------
// Decomposition

std::vector<double> Decomposition::reconstruct(std::size_t K) const {
  std::vector<double> u(K, 0.0);
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) u[k] += weights[i] * concepts[i][k];
  }
  return u;
}

namespace {

Decomposition decompose_k_subsets(std::size_t m, std::span<const double> u) {
  const std::size_t K = u.size();
  Decomposition d;
  if (m == 0 || m == K) {
    d.concepts.push_back(Concept(K, m == 0 ? 0 : 1));
    d.weights.push_back(1.0);
    return d;
  }
  std::vector<double> r(u.begin(), u.end());
  for (double& x : r) x = std::clamp(x, 0.0, 1.0);
  double mass = 1.0;
  std::vector<std::size_t> order(K);
  for (std::size_t step = 0; step < 2 * K && mass > 1e-15; ++step) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
    Concept c(K, 0);
    double weight = mass;
    for (std::size_t i = 0; i < m; ++i) {
      c[order[i]] = 1;
      weight = std::min(weight, r[order[i]]);
    }
    if (m < K) weight = std::min(weight, mass - r[order[m]]);
    if (!(weight > 0.0)) break;
    for (std::size_t i = 0; i < m; ++i) r[order[i]] = std::max(0.0, r[order[i]] - weight);
    mass -= weight;
    d.concepts.push_back(std::move(c));
    d.weights.push_back(weight);
  }
  return d;
}

Decomposition decompose_dag(const Dag& dag, std::span<const double> u) {
  const std::size_t K = u.size();
  const auto order = topological_order(dag);
  std::vector<double> flow(u.begin(), u.end());
  for (double& x : flow) x = std::max(x, 0.0);
  Decomposition d;
  constexpr double kNegligible = 1e-14;
  for (std::size_t step = 0; step < 2 * K; ++step) {
    // Widest source-sink path on positive-flow edges.
    std::vector<double> width(dag.nodes, -1.0);
    std::vector<std::size_t> via(dag.nodes, K);
    width[dag.source] = std::numeric_limits<double>::infinity();
    for (std::size_t v : order) {
      if (width[v] < 0.0) continue;
      for (std::size_t e = 0; e < K; ++e) {
        if (dag.edges[e].from != v || flow[e] <= kNegligible) continue;
        const double w = std::min(width[v], flow[e]);
        if (w > width[dag.edges[e].to]) {
          width[dag.edges[e].to] = w;
          via[dag.edges[e].to] = e;
        }
      }
    }
    const double bottleneck = width[dag.sink];
    if (!(bottleneck > kNegligible) || !std::isfinite(bottleneck)) break;
    Concept c(K, 0);
    for (std::size_t v = dag.sink; v != dag.source; v = dag.edges[via[v]].from) {
      c[via[v]] = 1;
      flow[via[v]] -= bottleneck;
    }
    d.concepts.push_back(std::move(c));
    d.weights.push_back(bottleneck);
  }
  return d;
}

Decomposition decompose_cube(std::span<const double> u) {
  // Threshold decomposition: concept j is {k : u^k >= t_j} over the distinct levels.
  const std::size_t K = u.size();
  std::vector<double> levels(u.begin(), u.end());
  for (double& x : levels) x = std::clamp(x, 0.0, 1.0);
  std::vector<double> cuts = levels;
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Decomposition d;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j], hi = cuts[j + 1];
    Concept c(K, 0);
    for (std::size_t k = 0; k < K; ++k) c[k] = levels[k] >= hi ? 1 : 0;
    d.concepts.push_back(std::move(c));
    d.weights.push_back(hi - lo);
  }
  return d;
}

Decomposition decompose_explicit(const std::vector<Concept>& concepts, std::span<const double> u) {
  const auto vertices = as_doubles(concepts);
  const auto fit = least_squares_fit(vertices, u);
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (fit.p[i] > 0.0) {
      points.push_back(vertices[i]);
      weights.push_back(fit.p[i]);
    }
  }
  caratheodory_reduce(points, weights);
  Decomposition d;
  for (std::size_t i = 0; i < points.size(); ++i) {
    d.concepts.push_back(to_concept(points[i]));
    d.weights.push_back(weights[i]);
  }
  return d;
}

}  // namespace

Decomposition decompose(const ConceptClass& cls, std::span<const double> u, double feasibility_tol) {
  const std::size_t K = cls.dimension();
  if (u.size() != K) throw std::invalid_argument("decompose: dimension mismatch");
  const double residual = cls.hull_residual(u);
  if (!(residual <= feasibility_tol)) {
    throw InfeasiblePoint("decompose: point outside the hull, residual " + std::to_string(residual));
  }
  Decomposition d;
  if (const auto* ks = std::get_if<KSubsets>(&cls.kind())) {
    d = decompose_k_subsets(ks->m, u);
  } else if (const auto* dp = std::get_if<DagPaths>(&cls.kind())) {
    d = decompose_dag(dp->dag, u);
  } else if (cls.is_full_cube()) {
    d = decompose_cube(u);
  } else {
    d = decompose_explicit(std::get<ExplicitVertices>(cls.kind()).vertices, u);
  }
  if (d.concepts.empty()) throw InfeasiblePoint("decompose: no concept carries positive weight");
  normalize_decomposition(d);
  const auto back = d.reconstruct(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (std::abs(back[k] - u[k]) > feasibility_tol) {
      throw InfeasiblePoint("decompose: reconstruction residual exceeds tolerance");
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Enumeration

std::vector<Concept> enumerate_vertices(const ConceptClass& cls, std::size_t cap) {
  const std::size_t K = cls.dimension();
  std::vector<Concept> out;
  if (const auto* ks = std::get_if<KSubsets>(&cls.kind())) {
    if (binomial_capped(K, ks->m, cap) > cap) throw EnumerationLimit("enumerate: vertex count exceeds cap");
    // Lexicographic order of the 0/1 vectors, largest first.
    std::vector<std::uint8_t> mask(K, 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(ks->m), 1);
    do {
      out.push_back(mask);
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return out;
  }
  if (const auto* dp = std::get_if<DagPaths>(&cls.kind())) {
    const Dag& dag = dp->dag;
    const auto order = topological_order(dag);
    std::vector<long double> count(dag.nodes, 0.0L);
    count[dag.sink] = 1.0L;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      for (const auto& e : dag.edges) {
        if (e.from == *it) count[*it] += count[e.to];
      }
    }
    if (count[dag.source] > static_cast<long double>(cap)) {
      throw EnumerationLimit("enumerate: vertex count exceeds cap");
    }
    Concept path(K, 0);
    auto walk = [&](auto&& self, std::size_t v) -> void {
      if (v == dag.sink) {
        out.push_back(path);
        return;
      }
      for (std::size_t e = 0; e < K; ++e) {
        if (dag.edges[e].from != v) continue;
        path[e] = 1;
        self(self, dag.edges[e].to);
        path[e] = 0;
      }
    };
    walk(walk, dag.source);
    return out;
  }
  const auto& verts = std::get<ExplicitVertices>(cls.kind()).vertices;
  if (verts.size() > cap) throw EnumerationLimit("enumerate: vertex count exceeds cap");
  return verts;
}

std::vector<double> unconstrained_update(std::span<const double> u, std::span<const double> x1,
                                         std::span<const double> x0) {
  if (u.size() != x1.size() || u.size() != x0.size()) {
    throw std::invalid_argument("unconstrained_update: dimension mismatch");
  }
  std::vector<double> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] > 0.0 && u[k] < 1.0)) throw std::invalid_argument("unconstrained_update: u must lie in (0, 1)");
    if (!std::isfinite(x1[k]) || !std::isfinite(x0[k])) {
      throw std::invalid_argument("unconstrained_update: losses must be finite");
    }
    // Evaluated in the log domain so that neither exponential can underflow.
    const double a = std::log(u[k]) - x1[k];
    const double b = std::log1p(-u[k]) - x0[k];
    out[k] = sigmoid(a - b);
    if (std::isnan(out[k])) throw std::domain_error("unconstrained_update: undefined posterior");
  }
  return out;
}

std::vector<double> to_vector(const Concept& c) { return std::vector<double>(c.begin(), c.end()); }

}  // namespace squint::polytopes
