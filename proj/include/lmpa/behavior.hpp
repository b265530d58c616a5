#pragma once

#include "lmpa/access_path.hpp"
#include "lmpa/diagnostics.hpp"
#include "lmpa/llm.hpp"
#include "lmpa/summary_ir.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

namespace lmpa {

struct BehaviorVerdict {
    bool abstractable = false;
    std::vector<ApiCall> api_list;
    std::string reason;

    static BehaviorVerdict no(std::string why) { return {false, {}, std::move(why)}; }

    /// `{"function":..,"verdict":"abstractable"|"not_abstractable","api_list":[..],"reason":..}`
    nlohmann::json to_json(const std::string &function) const;
};

struct ModSet {
    std::set<AccessPath> paths;
};

/// Paths rooted at a parameter, a global or `ret` that the function may
/// write through, traced syntactically through copies and loads. Bases that
/// cannot be traced (call results) widen to `param:<i>->*`.
ModSet compute_mod_set(const FunctionDecl &fn, const Program &program);

/// Resolves an ApiCall arg_map value (`ret`, an access path, or a
/// parameter name with `->`/`*` selectors) against a signature.
std::optional<AccessPath> resolve_arg(const FunctionDecl &fn, const std::string &text);

/// Paths of the ModSet not covered by the proposed API models, excluding
/// scalar globals. Empty means the abstraction is safe.
std::vector<AccessPath> verify_side_effects(const FunctionDecl &fn, const Program &program,
                                            const std::vector<ApiCall> &proposed);

/// Asks the model whether `fn` is an API list, then gates the answer with
/// verify_side_effects. Never abstractable when the gateway is off.
BehaviorVerdict classify_behavior(const FunctionDecl &fn, const Program &program, Gateway &gateway,
                                  std::vector<Diagnostic> *diagnostics = nullptr);

} // namespace lmpa
