#pragma once

#include <json.hpp>

#include "squint/polytopes.hpp"

namespace fixtures {

using squint::polytopes::ConceptClass;
using squint::polytopes::Dag;

// s -> a -> t and s -> b -> t
inline Dag diamond() {
  return Dag::from_json(nlohmann::json::parse(R"({
    "nodes": ["s", "a", "b", "t"],
    "edges": [{"source": "s", "target": "a", "index": 1}, {"source": "s", "target": "b", "index": 2},
              {"source": "a", "target": "t", "index": 3}, {"source": "b", "target": "t", "index": 4}],
    "source": "s", "sink": "t"})"));
}

// Six nodes, nine edges, eight source-sink paths.
inline Dag six_node() {
  return Dag::from_json(nlohmann::json::parse(R"({
    "nodes": ["s", "a", "b", "c", "d", "t"],
    "edges": [{"source": "s", "target": "a", "index": 1}, {"source": "s", "target": "b", "index": 2},
              {"source": "a", "target": "b", "index": 3}, {"source": "a", "target": "c", "index": 4},
              {"source": "b", "target": "c", "index": 5}, {"source": "b", "target": "d", "index": 6},
              {"source": "c", "target": "d", "index": 7}, {"source": "c", "target": "t", "index": 8},
              {"source": "d", "target": "t", "index": 9}],
    "source": "s", "sink": "t"})"));
}

// A class with no simple hull description: the 0/1 vectors of weight 1 or 3 in dimension 4.
inline ConceptClass odd_weight_explicit() {
  std::vector<squint::polytopes::Concept> v;
  for (int mask = 0; mask < 16; ++mask) {
    if (__builtin_popcount(mask) % 2 == 1) {
      squint::polytopes::Concept c(4);
      for (int k = 0; k < 4; ++k) c[k] = (mask >> k) & 1;
      v.push_back(c);
    }
  }
  return ConceptClass::explicit_vertices(v);
}

inline std::vector<ConceptClass> standard_classes() {
  return {ConceptClass::k_subsets(6, 3), ConceptClass::k_subsets(8, 2), ConceptClass::dag_paths(diamond()),
          ConceptClass::dag_paths(six_node())};
}

}  // namespace fixtures
