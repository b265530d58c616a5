#pragma once

#include "lmpa/ast.hpp"
#include "lmpa/param_spec.hpp"
#include "lmpa/points_to.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <utility>

namespace lmpa {

using FactSet = std::set<std::pair<std::string, std::string>>;

/// Per-function reference solution without summaries: every call is
/// replaced by a copy of the callee body (one copy per call site, nested
/// copies for nested calls), so objects created in callees carry labels of
/// the form `<site>/<caller>:<index>...` just as summary-minted ones do.
/// Each function's entry is seeded from its spec (roots only when absent).
/// Throws RecursiveProgram when the call graph has a cycle.
std::map<std::string, PointsToGraph> oracle_inline_analyze(const Program &program,
                                                           const std::map<std::string, ParamSpec> &specs);

/// Facts at escaping locations: `ret` and every field of an object
/// reachable from `ret`, a virtual object or a global's storage.
FactSet escaping_facts(const PointsToGraph &graph);

struct FactDiff {
    /// In the reference but not in the summary-based result.
    FactSet missing;
    /// In the summary-based result but not in the reference.
    FactSet extra;
};

FactDiff compare_facts(const PointsToGraph &summary_based, const PointsToGraph &reference);

} // namespace lmpa
