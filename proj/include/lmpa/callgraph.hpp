#pragma once

#include "lmpa/ast.hpp"

#include <set>
#include <string>
#include <vector>

namespace lmpa {

struct CallEdge {
    std::string caller;
    std::string callee;
    /// Statement index of the call inside the caller.
    int site = -1;

    friend auto operator<=>(const CallEdge &, const CallEdge &) = default;
};

struct CallGraph {
    std::set<std::string> nodes;
    /// Sorted by caller, callee, site.
    std::vector<CallEdge> edges;

    std::set<std::string> callees(const std::string &caller) const;
    /// `digraph cg { "f" -> "g"; }`, one edge per caller/callee pair.
    std::string to_dot() const;
};

/// Edges to declared functions only; modeled APIs are not nodes. Throws
/// UnknownCallee.
CallGraph build_call_graph(const Program &program);

struct AnalysisOrder {
    /// Strongly connected components, callees before callers; members
    /// sorted by name.
    std::vector<std::vector<std::string>> groups;
};

/// Condensation in bottom-up order. Among groups whose callees are done,
/// the one with the smallest member name comes first.
AnalysisOrder analysis_order(const CallGraph &cg);

/// True when the group is a cycle (several members or a self call).
bool is_recursive(const std::vector<std::string> &group, const CallGraph &cg);

} // namespace lmpa
