#pragma once

#include "lmpa/constraints.hpp"
#include "lmpa/diagnostics.hpp"
#include "lmpa/summary_ir.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmpa {

struct ApiSignature {
    std::string name;
    /// Formal bound to each positional argument at a direct call.
    std::vector<std::string> positional;
    /// Formals an ApiCall's arg_map must cover.
    std::vector<std::string> required;
    bool allocates = false;
};

/// The seven modeled system APIs, in catalog order.
const std::vector<ApiSignature> &api_catalog();
const ApiSignature *find_api(std::string_view name);
bool is_modeled_api(std::string_view name);

/// `[{"name":"malloc","formals":["ret","size"],"required":["ret"]}, ...]`
nlohmann::json api_catalog_json();

/// Empty when `call` names a modeled API and covers its required formals;
/// otherwise a description of the problem.
std::string check_api_call(const ApiCall &call);

/// Constraints modeling one API invocation. `formals` binds each formal to
/// a term in the caller; `fresh` is the heap object minted for allocating
/// APIs.
std::vector<Constraint> api_constraints(const std::string &api, const std::map<std::string, Term> &formals,
                                        std::optional<ObjectId> fresh, const std::string &guard, int index);

/// Applies an API model to a graph and returns the added facts. arg_map
/// values are MiniC access expressions in the graph's scope (`p`, `p->f`,
/// `*p`). Throws UnresolvedArg for names the graph does not declare.
/// Freed events are appended to `events` when given.
PointsToGraph apply_api_model(const ApiCall &call, const PointsToGraph &graph, ObjectFactory &fresh,
                              const std::string &site_label = "heap@api",
                              std::vector<Diagnostic> *events = nullptr);

/// Paths an API may write through, given its arg_map resolved to
/// callee-relative access paths: `ret` for allocating APIs, `<dst>->*` for
/// memcpy/memset/snprintf, `ret->*` for strdup.
std::vector<AccessPath> api_mod_paths(const ApiCall &call, const std::map<std::string, AccessPath> &resolved);

} // namespace lmpa
