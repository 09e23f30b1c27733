#include "squint/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "squint/bounds.hpp"
#include "squint/component_iprod.hpp"

namespace squint::harness {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kSchema = "squint-experiment/1";
// Slack for round-off in the accumulated R and V columns.
constexpr double kBoundSlack = 1e-9;
constexpr double kPotentialSlack = 1e-9;

void require_keys(const json& doc, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!doc.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  return doc.contains(key) ? doc.at(key).get<T>() : fallback;
}

Algorithm parse_algorithm(const json& doc, Mode mode) {
  const std::string name = doc.at("name").get<std::string>();
  if (name == "squint") {
    require_keys(doc, {"name", "prior", "a", "b", "points"}, "algorithm");
    const std::string prior = doc.at("prior").get<std::string>();
    SquintAlgorithm algo;
    algo.prior_name = prior;
    if (prior == "conjugate") {
      algo.prior = ConjugatePrior{get_or(doc, "a", 0.0), get_or(doc, "b", 0.0)};
    } else if (prior == "cv") {
      algo.prior = CVPrior{};
    } else if (prior == "improper") {
      algo.prior = ImproperPrior{};
    } else if (prior == "grid") {
      algo.prior = DiscreteGridPrior::exponential(get_or<std::size_t>(doc, "points", 32));
    } else {
      throw std::invalid_argument("algorithm: unknown prior '" + prior + "'");
    }
    if (prior != "conjugate" && (doc.contains("a") || doc.contains("b"))) {
      throw std::invalid_argument("algorithm: a and b apply to the conjugate prior only");
    }
    if (prior != "grid" && doc.contains("points")) {
      throw std::invalid_argument("algorithm: points applies to the grid prior only");
    }
    if (mode != Mode::Experts) throw std::invalid_argument("algorithm: squint needs mode 'experts'");
    return algo;
  }
  if (name == "iprod") {
    require_keys(doc, {"name", "points"}, "algorithm");
    if (mode != Mode::Experts) throw std::invalid_argument("algorithm: iprod needs mode 'experts'");
    return IProdAlgorithm{get_or<std::size_t>(doc, "points", 32)};
  }
  if (name == "hedge") {
    require_keys(doc, {"name", "eta"}, "algorithm");
    if (mode != Mode::Experts) throw std::invalid_argument("algorithm: hedge needs mode 'experts'");
    const double eta = doc.at("eta").get<double>();
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("algorithm: hedge eta must be > 0");
    return HedgeAlgorithm{eta};
  }
  if (name == "component_iprod") {
    require_keys(doc, {"name", "T_max"}, "algorithm");
    if (mode != Mode::Combinatorial) {
      throw std::invalid_argument("algorithm: component_iprod needs mode 'combinatorial'");
    }
    return ComponentIProdAlgorithm{get_or<std::uint64_t>(doc, "T_max", 0)};
  }
  throw std::invalid_argument("algorithm: unknown name '" + name + "'");
}

Environment parse_environment(const json& doc, std::size_t K) {
  require_keys(doc, {"generator", "seed", "means", "segment_length", "noise", "low", "high"}, "environment");
  Environment env;
  env.generator = doc.at("generator").get<std::string>();
  env.seed = get_or<std::uint64_t>(doc, "seed", 0);
  if (env.generator == "stochastic") {
    env.means = doc.at("means").get<std::vector<double>>();
    if (env.means.size() != K) throw std::invalid_argument("environment: means must have K entries");
  } else if (env.generator == "adversarial_shift") {
    env.segment_length = doc.at("segment_length").get<std::uint64_t>();
    env.noise = get_or(doc, "noise", 0.0);
  } else if (env.generator == "uniform") {
    env.low = get_or(doc, "low", 0.0);
    env.high = get_or(doc, "high", 1.0);
  } else {
    throw std::invalid_argument("environment: unknown generator '" + env.generator + "'");
  }
  return env;
}

Report parse_report(const json& doc, Mode mode) {
  require_keys(doc, {"singletons", "near_best_fraction", "subsets", "comparators", "potential_every"}, "report");
  Report r;
  r.singletons = get_or(doc, "singletons", mode == Mode::Experts);
  if (doc.contains("near_best_fraction")) r.near_best_fraction = doc.at("near_best_fraction").get<double>();
  if (doc.contains("subsets")) r.subsets = doc.at("subsets").get<std::vector<std::vector<std::size_t>>>();
  if (doc.contains("comparators")) {
    const auto& c = doc.at("comparators");
    if (c.is_string()) {
      if (c.get<std::string>() != "vertices") throw std::invalid_argument("report: comparators must be 'vertices' or a list");
      r.all_vertices = true;
    } else {
      r.comparators = c.get<std::vector<std::vector<double>>>();
    }
  } else {
    r.all_vertices = mode == Mode::Combinatorial;
  }
  r.potential_every = get_or<std::uint64_t>(doc, "potential_every", 10);
  if (mode == Mode::Experts && (r.all_vertices || !r.comparators.empty())) {
    throw std::invalid_argument("report: comparators apply to mode 'combinatorial'");
  }
  if (mode == Mode::Combinatorial && (r.singletons || r.near_best_fraction || !r.subsets.empty())) {
    throw std::invalid_argument("report: subsets apply to mode 'experts'");
  }
  if (r.near_best_fraction && !(*r.near_best_fraction >= 0.0)) {
    throw std::invalid_argument("report: near_best_fraction must be >= 0");
  }
  return r;
}

void validate_environment(const ExperimentConfig& c) {
  const auto& env = c.environment;
  if (env.generator == "stochastic") {
    for (double m : env.means) {
      if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("environment: means must lie in [0, 1]");
    }
  } else if (env.generator == "adversarial_shift") {
    if (env.segment_length < 1) throw std::invalid_argument("environment: segment_length must be >= 1");
    if (!(env.noise >= 0.0 && env.noise <= 1.0)) throw std::invalid_argument("environment: noise must lie in [0, 1]");
  } else {
    if (!(env.low <= env.high)) throw std::invalid_argument("environment: need low <= high");
  }
  const double lo = c.mode == Mode::Experts ? 0.0 : -1.0;
  if (env.generator == "uniform" && (env.low < lo || env.high > 1.0)) {
    throw std::invalid_argument("environment: uniform range exceeds the loss range of the mode");
  }
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string subset_name(const std::vector<std::size_t>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "+" : "") + std::to_string(s[i]);
  return out;
}

std::vector<AuditTarget> expert_targets(const ExperimentConfig& c, const LossStream& losses,
                                        const std::vector<double>& prior) {
  std::vector<AuditTarget> out;
  auto add = [&](std::vector<std::size_t> subset, std::string name, bool near_best) {
    std::sort(subset.begin(), subset.end());
    AuditTarget t;
    t.subset = subset;
    for (std::size_t k : subset) {
      if (k >= c.K) throw std::invalid_argument("report: subset index out of range");
      t.pi_mass += prior[k];
    }
    if (std::adjacent_find(subset.begin(), subset.end()) != subset.end() || subset.empty()) {
      throw std::invalid_argument("report: subsets must be nonempty without repeats");
    }
    t.pi_mass = std::min(t.pi_mass, 1.0);
    t.name = std::move(name);
    t.near_best = near_best;
    out.push_back(std::move(t));
  };
  if (c.report.singletons) {
    for (std::size_t k = 0; k < c.K; ++k) add({k}, "e" + std::to_string(k), false);
  }
  for (const auto& s : c.report.subsets) add(s, "s" + subset_name(s), false);
  if (c.report.near_best_fraction && c.T > 0) {
    std::vector<double> total(c.K, 0.0);
    for (const auto& l : losses) {
      for (std::size_t k = 0; k < c.K; ++k) total[k] += l[k];
    }
    const double best = *std::min_element(total.begin(), total.end());
    const double slack = *c.report.near_best_fraction * static_cast<double>(c.T);
    std::vector<std::size_t> near;
    for (std::size_t k = 0; k < c.K; ++k) {
      if (total[k] <= best + slack) near.push_back(k);
    }
    add(near, "nb" + subset_name(near), true);
  }
  return out;
}

std::vector<AuditTarget> comparator_targets(const ExperimentConfig& c, const std::vector<double>& prior) {
  std::vector<std::vector<double>> vs = c.report.comparators;
  if (c.report.all_vertices) {
    for (const auto& v : polytopes::enumerate_vertices(*c.concept_class)) vs.push_back(polytopes::to_vector(v));
  }
  std::vector<AuditTarget> out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].size() != c.K) throw std::invalid_argument("report: comparator dimension mismatch");
    if (c.concept_class->hull_residual(vs[i]) > 1e-8) throw std::invalid_argument("report: comparator outside the hull");
    AuditTarget t;
    t.name = "v" + std::to_string(i);
    t.v = vs[i];
    t.entropy = bounds::binary_relative_entropy(t.v, prior);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> effective_prior(const ExperimentConfig& c) {
  if (c.mode == Mode::Experts) {
    if (c.prior.empty()) return ExpertGameState::uniform(c.K).prior;
    return ExpertGameState(c.prior).prior;
  }
  if (c.prior.empty()) return std::vector<double>(c.K, 0.5);
  return polytopes::clamp_interior(c.prior);
}

std::uint64_t horizon_for_grid(const ExperimentConfig& c) {
  const auto& a = std::get<ComponentIProdAlgorithm>(c.algorithm);
  return std::max<std::uint64_t>(a.T_max == 0 ? c.T : a.T_max, 1);
}

// Regret and variance of an expert subset as prior-weighted averages.
std::pair<double, double> subset_rv(const AuditTarget& t, const ExpertGameState& s) {
  const auto agg = bounds::aggregate_subset(s, t.subset);
  return {agg.R, agg.V};
}

}  // namespace

// ---------------------------------------------------------------------------
// Generators

LossStream gen_stochastic(std::size_t K, const std::vector<double>& means, std::uint64_t seed, std::uint64_t T) {
  if (means.size() != K) throw std::invalid_argument("gen_stochastic: means must have K entries");
  for (double m : means) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("gen_stochastic: means must lie in [0, 1]");
  }
  Rng rng(seed);
  LossStream out(T, std::vector<double>(K));
  for (auto& row : out) {
    for (std::size_t k = 0; k < K; ++k) row[k] = rng.bernoulli(means[k]) ? 1.0 : 0.0;
  }
  return out;
}

LossStream gen_adversarial_shift(std::size_t K, std::uint64_t segment_length, std::uint64_t seed, std::uint64_t T,
                                 double noise) {
  if (K == 0) throw std::invalid_argument("gen_adversarial_shift: K must be >= 1");
  if (segment_length < 1) throw std::invalid_argument("gen_adversarial_shift: segment_length must be >= 1");
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("gen_adversarial_shift: noise must lie in [0, 1]");
  Rng rng(seed);
  LossStream out(T, std::vector<double>(K));
  for (std::uint64_t t = 0; t < T; ++t) {
    const std::size_t best = static_cast<std::size_t>((t / segment_length) % K);
    for (std::size_t k = 0; k < K; ++k) {
      double l = k == best ? 0.0 : 1.0;
      if (noise > 0.0 && rng.bernoulli(noise)) l = 1.0 - l;
      out[t][k] = l;
    }
  }
  return out;
}

LossStream gen_uniform(std::size_t K, double low, double high, std::uint64_t seed, std::uint64_t T) {
  if (!(low <= high) || !std::isfinite(low) || !std::isfinite(high)) {
    throw std::invalid_argument("gen_uniform: need finite low <= high");
  }
  Rng rng(seed);
  LossStream out(T, std::vector<double>(K));
  for (auto& row : out) {
    for (double& x : row) x = std::min(high, low + (high - low) * rng.uniform());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  require_keys(doc, {"schema", "mode", "K", "T", "prior", "algorithm", "environment", "class", "report", "output"},
               "config");
  if (doc.at("schema").get<std::string>() != kSchema) {
    throw std::invalid_argument(std::string("config: schema must be '") + kSchema + "'");
  }
  ExperimentConfig c;
  const std::string mode = doc.at("mode").get<std::string>();
  if (mode == "experts") {
    c.mode = Mode::Experts;
    c.K = doc.at("K").get<std::size_t>();
    if (c.K == 0) throw std::invalid_argument("config: K must be >= 1");
    if (doc.contains("class")) throw std::invalid_argument("config: 'class' applies to mode 'combinatorial'");
  } else if (mode == "combinatorial") {
    c.mode = Mode::Combinatorial;
    c.concept_class = polytopes::ConceptClass::from_json(doc.at("class"));
    c.K = c.concept_class->dimension();
    if (doc.contains("K") && doc.at("K").get<std::size_t>() != c.K) {
      throw std::invalid_argument("config: K disagrees with the concept class");
    }
  } else {
    throw std::invalid_argument("config: unknown mode '" + mode + "'");
  }
  c.T = doc.at("T").get<std::uint64_t>();
  if (doc.contains("prior")) {
    c.prior = doc.at("prior").get<std::vector<double>>();
    if (c.prior.size() != c.K) throw std::invalid_argument("config: prior must have K entries");
  }
  c.algorithm = parse_algorithm(doc.at("algorithm"), c.mode);
  c.environment = parse_environment(doc.at("environment"), c.K);
  c.report = parse_report(doc.contains("report") ? doc.at("report") : json::object(), c.mode);
  if (doc.contains("output")) {
    require_keys(doc.at("output"), {"csv", "summary"}, "output");
    c.csv_path = get_or<std::string>(doc.at("output"), "csv", "");
    c.summary_path = get_or<std::string>(doc.at("output"), "summary", "");
  }
  validate_environment(c);
  (void)effective_prior(c);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return from_json(json::parse(in));
}

std::string ExperimentConfig::algorithm_name() const {
  if (const auto* s = std::get_if<SquintAlgorithm>(&algorithm)) return "squint-" + s->prior_name;
  if (std::holds_alternative<IProdAlgorithm>(algorithm)) return "iprod";
  if (std::holds_alternative<HedgeAlgorithm>(algorithm)) return "hedge";
  return "component_iprod";
}

LossStream generate_losses(const ExperimentConfig& c) {
  const auto& env = c.environment;
  if (env.generator == "stochastic") return gen_stochastic(c.K, env.means, env.seed, c.T);
  if (env.generator == "adversarial_shift") {
    return gen_adversarial_shift(c.K, env.segment_length, env.seed, c.T, env.noise);
  }
  return gen_uniform(c.K, env.low, env.high, env.seed, c.T);
}

double bound_for(const ExperimentConfig& c, const AuditTarget& target, double V, std::uint64_t t) {
  if (c.mode == Mode::Combinatorial) {
    return bounds::bound_component(V, target.entropy, c.K, horizon_for_grid(c));
  }
  const auto* s = std::get_if<SquintAlgorithm>(&c.algorithm);
  if (s == nullptr) return kNaN;
  if (const auto* p = std::get_if<ConjugatePrior>(&s->prior)) return bounds::bound_conjugate(V, target.pi_mass, p->a, p->b);
  if (std::holds_alternative<CVPrior>(s->prior)) return bounds::bound_cv(V, target.pi_mass);
  if (std::holds_alternative<ImproperPrior>(s->prior)) return bounds::bound_improper(V, target.pi_mass, t);
  return kNaN;
}

// ---------------------------------------------------------------------------
// Runner

ExperimentResult run_experiment(const ExperimentConfig& c) {
  const LossStream losses = generate_losses(c);
  const auto prior = effective_prior(c);
  ExperimentResult result;
  result.targets = c.mode == Mode::Experts ? expert_targets(c, losses, prior) : comparator_targets(c, prior);

  result.header.push_back("t");
  for (std::size_t k = 0; k < c.K; ++k) result.header.push_back("loss_" + std::to_string(k + 1));
  const char* action = c.mode == Mode::Experts ? "w_" : "u_";
  for (std::size_t k = 0; k < c.K; ++k) result.header.push_back(action + std::to_string(k + 1));
  for (const auto& t : result.targets) {
    result.header.push_back("R_" + t.name);
    result.header.push_back("V_" + t.name);
    result.header.push_back("bound_" + t.name);
  }
  result.header.push_back("potential");

  const std::uint64_t every = c.report.potential_every;
  double max_potential = 0.0;
  std::size_t potential_failures = 0;
  std::size_t bound_violations = 0;
  std::vector<double> final_R(result.targets.size(), 0.0), final_V(result.targets.size(), 0.0),
      final_bound(result.targets.size(), kNaN);

  auto emit = [&](std::uint64_t t, const std::vector<double>& l, const std::vector<double>& action_vec,
                  const std::vector<std::pair<double, double>>& rv, double phi) {
    std::vector<double> row;
    row.reserve(result.header.size());
    row.push_back(static_cast<double>(t));
    row.insert(row.end(), l.begin(), l.end());
    row.insert(row.end(), action_vec.begin(), action_vec.end());
    for (std::size_t i = 0; i < rv.size(); ++i) {
      const double b = bound_for(c, result.targets[i], rv[i].second, t);
      if (!std::isnan(b) && rv[i].first > b + kBoundSlack) ++bound_violations;
      row.push_back(rv[i].first);
      row.push_back(rv[i].second);
      row.push_back(b);
      final_R[i] = rv[i].first;
      final_V[i] = rv[i].second;
      final_bound[i] = b;
    }
    if (!std::isnan(phi)) {
      max_potential = std::max(max_potential, phi);
      if (phi > kPotentialSlack) ++potential_failures;
    }
    row.push_back(phi);
    result.rows.push_back(std::move(row));
  };
  auto sample = [&](std::uint64_t t) { return every > 0 && t % every == 0; };

  if (c.mode == Mode::Experts) {
    ExpertGameState state(prior);
    std::optional<IProdAccumulator> iprod;
    std::vector<double> cumulative(c.K, 0.0);
    if (const auto* a = std::get_if<IProdAlgorithm>(&c.algorithm)) {
      iprod.emplace(prior, DiscreteGridPrior::exponential(a->points));
    }
    for (std::uint64_t t = 1; t <= c.T; ++t) {
      const auto& l = losses[t - 1];
      std::vector<double> w;
      if (const auto* s = std::get_if<SquintAlgorithm>(&c.algorithm)) {
        w = squint_weights(state, s->prior);
      } else if (iprod) {
        w = iprod->weights();
      } else {
        w = hedge_weights(cumulative, prior, std::get<HedgeAlgorithm>(c.algorithm).eta);
      }
      const auto r = state.apply(w, l);
      if (iprod) iprod->add(r);
      for (std::size_t k = 0; k < c.K; ++k) cumulative[k] += l[k];
      std::vector<std::pair<double, double>> rv;
      for (const auto& target : result.targets) rv.push_back(subset_rv(target, state));
      double phi = kNaN;
      if (sample(t)) {
        if (const auto* s = std::get_if<SquintAlgorithm>(&c.algorithm)) {
          phi = potential(state, s->prior);
        } else if (iprod) {
          phi = iprod->potential();
        }
      }
      emit(t, l, w, rv, phi);
    }
  } else {
    auto game = combinatorial::ComponentIProd::make_game(*c.concept_class, prior, horizon_for_grid(c));
    for (const auto& target : result.targets) game.register_comparator(target.v);
    for (std::uint64_t t = 1; t <= c.T; ++t) {
      const auto& l = losses[t - 1];
      const auto u = game.play();
      game.observe(l);
      std::vector<std::pair<double, double>> rv;
      for (const auto& s : game.comparators()) rv.emplace_back(s.R, s.V);
      emit(t, l, u, rv, sample(t) ? game.potential() : kNaN);
    }
  }

  result.violations = bound_violations + potential_failures;
  json audits = json::array();
  for (std::size_t i = 0; i < result.targets.size(); ++i) {
    const auto& t = result.targets[i];
    json a = {{"name", t.name}, {"R", final_R[i]}, {"V", final_V[i]}};
    a["bound"] = std::isnan(final_bound[i]) ? json(nullptr) : json(final_bound[i]);
    if (c.mode == Mode::Experts) {
      a["subset"] = t.subset;
      a["pi_mass"] = t.pi_mass;
      if (t.near_best) a["near_best"] = true;
    } else {
      a["v"] = t.v;
      a["entropy"] = t.entropy;
    }
    audits.push_back(std::move(a));
  }
  result.summary = {{"schema", kSchema},
                    {"algorithm", c.algorithm_name()},
                    {"mode", c.mode == Mode::Experts ? "experts" : "combinatorial"},
                    {"K", c.K},
                    {"T", c.T},
                    {"audits", std::move(audits)},
                    {"max_potential", max_potential},
                    {"bound_violations", bound_violations},
                    {"potential_failures", potential_failures},
                    {"violation", result.violations > 0}};
  return result;
}

std::string format_csv(const ExperimentResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.header.size(); ++i) out += (i ? "," : "") + result.header[i];
  out += '\n';
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += i == 0 ? std::to_string(static_cast<std::uint64_t>(row[i])) : format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// Audit

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("audit: bad number '" + s + "'");
  return x;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }

}  // namespace

AuditReport audit_csv(const std::string& csv_text, const ExperimentConfig* config) {
  AuditReport report;
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("audit: empty CSV");
  const auto header = split(line);
  struct Triple {
    std::string name;
    std::size_t r, v, b;
  };
  std::vector<Triple> triples;
  std::size_t K = 0;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("loss_", 0) == 0) ++K;
    if (header[i].rfind("R_", 0) == 0) {
      const std::string name = header[i].substr(2);
      if (i + 2 >= header.size() || header[i + 1] != "V_" + name || header[i + 2] != "bound_" + name) {
        throw std::invalid_argument("audit: malformed column group for '" + name + "'");
      }
      triples.push_back({name, i, i + 1, i + 2});
    }
  }
  const std::size_t potential_col = header.size() - 1;
  if (header.empty() || header.front() != "t" || header.back() != "potential") {
    throw std::invalid_argument("audit: unexpected header");
  }

  std::optional<ExpertGameState> state;
  std::vector<std::pair<double, double>> comb_rv;
  std::vector<AuditTarget> targets;
  if (config != nullptr) {
    if (config->K != K) throw std::invalid_argument("audit: config K disagrees with the CSV");
    const auto prior = effective_prior(*config);
    targets = config->mode == Mode::Experts ? expert_targets(*config, generate_losses(*config), prior)
                                            : comparator_targets(*config, prior);
    if (targets.size() != triples.size()) throw std::invalid_argument("audit: config audits disagree with the CSV");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i].name != triples[i].name) throw std::invalid_argument("audit: audit names disagree");
    }
    if (config->mode == Mode::Experts) state.emplace(prior);
    comb_rv.assign(targets.size(), {0.0, 0.0});
  }

  auto fail = [&](std::uint64_t t, const std::string& msg) {
    report.failures.push_back("t=" + std::to_string(t) + ": " + msg);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::invalid_argument("audit: row width differs from header");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_number(cells[i]);
    const auto t = static_cast<std::uint64_t>(row[0]);
    ++report.rows;
    for (const auto& tr : triples) {
      const double R = row[tr.r], B = row[tr.b];
      if (std::isnan(B)) continue;
      ++report.checks;
      if (R > B + kBoundSlack) fail(t, "R_" + tr.name + " = " + format_number(R) + " exceeds bound " + format_number(B));
    }
    if (!std::isnan(row[potential_col]) && row[potential_col] > kPotentialSlack) {
      fail(t, "potential " + format_number(row[potential_col]) + " is positive");
    }
    if (config == nullptr) continue;

    const std::vector<double> l(row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(K));
    const std::vector<double> a(row.begin() + 1 + static_cast<std::ptrdiff_t>(K),
                                row.begin() + 1 + 2 * static_cast<std::ptrdiff_t>(K));
    std::vector<std::pair<double, double>> rv;
    if (state) {
      state->apply(a, l);
      for (const auto& target : targets) rv.push_back(subset_rv(target, *state));
    } else {
      std::vector<double> r1(K), r0(K);
      for (std::size_t k = 0; k < K; ++k) {
        r1[k] = a[k] * l[k] - l[k];
        r0[k] = a[k] * l[k];
      }
      for (std::size_t i = 0; i < targets.size(); ++i) {
        double r = 0.0, v = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          r += targets[i].v[k] * r1[k] + (1.0 - targets[i].v[k]) * r0[k];
          v += targets[i].v[k] * r1[k] * r1[k] + (1.0 - targets[i].v[k]) * r0[k] * r0[k];
        }
        comb_rv[i].first += r;
        comb_rv[i].second += v;
      }
      rv = comb_rv;
    }
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const auto& tr = triples[i];
      if (!close(rv[i].first, row[tr.r]) || !close(rv[i].second, row[tr.v])) {
        fail(t, "R/V columns for '" + tr.name + "' do not follow the update recurrence");
      }
      const double b = bound_for(*config, targets[i], row[tr.v], t);
      if (!(std::isnan(b) && std::isnan(row[tr.b])) && !close(b, row[tr.b])) {
        fail(t, "bound column for '" + tr.name + "' differs from the recomputed bound");
      }
      if (!std::isnan(b) && rv[i].first > b + kBoundSlack) fail(t, "recomputed regret exceeds bound for '" + tr.name + "'");
    }
  }
  return report;
}

}  // namespace squint::harness
