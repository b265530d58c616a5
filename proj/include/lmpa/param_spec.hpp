#pragma once

#include "lmpa/access_path.hpp"
#include "lmpa/diagnostics.hpp"
#include "lmpa/llm.hpp"
#include "lmpa/points_to.hpp"
#include "lmpa/solver.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace lmpa {

struct MaterializedPath {
    AccessPath path;
    std::string label;

    friend bool operator==(const MaterializedPath &, const MaterializedPath &) = default;
};

struct ParamSpecEntry {
    int index = 0;
    std::string root_label;
    std::vector<MaterializedPath> materialized;

    friend bool operator==(const ParamSpecEntry &, const ParamSpecEntry &) = default;
};

/// Entry object of a pointer global read by the function.
struct GlobalSpecEntry {
    std::string name;
    std::string root_label;
    std::vector<MaterializedPath> materialized;

    friend bool operator==(const GlobalSpecEntry &, const GlobalSpecEntry &) = default;
};

/// Virtual objects seeding a function's entry environment. Labels are `o1`,
/// `o2`, ... : parameter roots first, then parameter paths, then global
/// roots and global paths, each group in path order.
struct ParamSpec {
    std::string function;
    std::vector<ParamSpecEntry> entries;
    std::vector<GlobalSpecEntry> globals;

    /// Every materialized path, parameter and global.
    std::set<AccessPath> paths() const;
    nlohmann::json to_json() const;

    friend bool operator==(const ParamSpec &, const ParamSpec &) = default;
};

/// Paths of parameter and global memory the function dereferences, found by
/// solving it once with on-demand materialization. Call statements count
/// through the callee summaries in `summaries`.
std::set<AccessPath> dereferenced_paths(const FunctionDecl &fn, const Program &program,
                                        const std::map<std::string, FunctionSummary> &summaries,
                                        const SummaryDecoder &decode = {});

/// Adds every proper prefix with at least one selector (parameter paths) or
/// the bare root (global paths).
std::set<AccessPath> prefix_close(const std::set<AccessPath> &paths);

/// Labels roots and the given paths. Paths must be prefix-closed.
ParamSpec build_param_spec(const FunctionDecl &fn, const std::set<AccessPath> &paths);

/// With the gateway off, the spec of `fallback`. Otherwise the model's
/// proposal intersected with `fallback`, then prefix-closed; globals always
/// follow the fallback. Proposed paths naming undeclared fields are dropped
/// with an `invalid_path` diagnostic.
ParamSpec infer_param_spec(const FunctionDecl &fn, const Program &program, Gateway &gateway,
                           const std::set<AccessPath> &fallback, std::vector<Diagnostic> *diagnostics = nullptr);

/// Entry graph: each root in its variable, each materialized object in its
/// parent's field.
PointsToGraph init_points_to_env(const ParamSpec &spec, const FunctionDecl &fn, const Program &program,
                                 ObjectFactory &factory);

} // namespace lmpa
