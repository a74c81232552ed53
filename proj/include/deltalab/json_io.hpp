#pragma once

// JSON readers and writers for grid sets, tube families, graphs, generator
// and experiment specs, witnesses and pipeline traces.

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "deltalab/expander.hpp"
#include "deltalab/frostman.hpp"
#include "deltalab/grid.hpp"
#include "deltalab/harness.hpp"
#include "deltalab/incidence.hpp"
#include "deltalab/refinement.hpp"

namespace deltalab {

using Json = nlohmann::json;

// Malformed or inconsistent input: the CLI maps it to exit code 2.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json rational_to_json(const Rational& r);  // [num, den]
Rational rational_from_json(const Json& j);

// {"m": int, "cells": [int]} or {"m": int, "cells": [[int, int]]}, sorted.
Json gridset_to_json(const GridSet1D& set);
Json gridset_to_json(const GridSet2D& set);
bool gridset_is_2d(const Json& j);
GridSet1D gridset1d_from_json(const Json& j);
GridSet2D gridset2d_from_json(const Json& j);

// {"m": int, "tubes": [{"slope": [n, d], "intercept": [n, d], "mult": int}]}
Json tubes_to_json(const TubeFamily& family);
TubeFamily tubes_from_json(const Json& j);

// {"tubes": [[square indices]], "squares": [[tube indices]]}
Json shading_to_json(const Shading& shading);

// {"left": [...], "right": [...], "edges": [[a, b], ...]}
Json graph_to_json(const BipartiteGraph& g);
BipartiteGraph graph_from_json(const Json& j);

// {"type": "cantor" | "random" | "full" | "point", "m": int,
//  "s": real | "keep": int, "of": int, "seed": int}
struct GenSpec {
  SetSpec set;
  int m = 8;
};
GenSpec genspec_from_json(const Json& j);
GridSet1D generate_set(const GenSpec& spec);

// {"A": genspec, "B": genspec, "P": "full" | "random-dense" | "diagonal",
//  "density": real, "m_range": [lo, hi], "epsilon": real, "seed": int}
ExperimentSpec experiment_from_json(const Json& j);

Json witness_to_json(const KTWitness& w);
Json trace_to_json(const TraceRecord& r);
Json pipeline_summary_to_json(const PipelineState& st);

Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);

}  // namespace deltalab
