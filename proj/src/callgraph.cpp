#include "lmpa/callgraph.hpp"

#include "lmpa/error.hpp"
#include "lmpa/sysapi.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace lmpa {

std::set<std::string> CallGraph::callees(const std::string &caller) const {
    std::set<std::string> out;
    for (const auto &e : edges) {
        if (e.caller == caller) {
            out.insert(e.callee);
        }
    }
    return out;
}

std::string CallGraph::to_dot() const {
    std::set<std::pair<std::string, std::string>> pairs;
    std::set<std::string> linked;
    for (const auto &e : edges) {
        pairs.emplace(e.caller, e.callee);
        linked.insert(e.caller);
        linked.insert(e.callee);
    }
    std::ostringstream out;
    out << "digraph cg {";
    for (const auto &n : nodes) {
        if (!linked.count(n)) {
            out << " \"" << n << "\";";
        }
    }
    for (const auto &[a, b] : pairs) {
        out << " \"" << a << "\" -> \"" << b << "\";";
    }
    out << " }\n";
    return out.str();
}

CallGraph build_call_graph(const Program &program) {
    CallGraph cg;
    for (const auto &fn : program.functions) {
        cg.nodes.insert(fn.name);
    }
    for (const auto &fn : program.functions) {
        int counter = 0;
        auto visit = [&](const CallExpr &call, int index) {
            int site = index >= 0 ? index : counter;
            ++counter;
            if (program.find_function(call.callee)) {
                cg.edges.push_back({fn.name, call.callee, site});
            } else if (!is_modeled_api(call.callee)) {
                throw UnknownCallee(fn.name + " calls '" + call.callee + "', which is neither declared nor a modeled API");
            }
        };
        for_each_stmt(fn.body, [&](const Stmt &stmt) {
            if (const auto *assign = std::get_if<Assign>(&stmt.node)) {
                if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
                    visit(*call, stmt.index);
                }
            } else if (const auto *call = std::get_if<CallStmt>(&stmt.node)) {
                visit(call->call, stmt.index);
            }
        });
    }
    std::sort(cg.edges.begin(), cg.edges.end());
    return cg;
}

AnalysisOrder analysis_order(const CallGraph &cg) {
    std::map<std::string, std::set<std::string>> succ;
    for (const auto &n : cg.nodes) {
        succ[n];
    }
    for (const auto &e : cg.edges) {
        succ[e.caller].insert(e.callee);
    }

    // Tarjan's algorithm.
    std::map<std::string, int> index, low;
    std::map<std::string, bool> on_stack;
    std::vector<std::string> stack;
    std::vector<std::vector<std::string>> sccs;
    int counter = 0;
    std::function<void(const std::string &)> connect = [&](const std::string &v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (const auto &w : succ[v]) {
            if (!index.count(w)) {
                connect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> scc;
            std::string w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                scc.push_back(w);
            } while (w != v);
            std::sort(scc.begin(), scc.end());
            sccs.push_back(std::move(scc));
        }
    };
    for (const auto &n : cg.nodes) {
        if (!index.count(n)) {
            connect(n);
        }
    }

    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < sccs.size(); ++i) {
        for (const auto &f : sccs[i]) {
            group_of[f] = i;
        }
    }
    // pending[i]: callee groups of i not yet emitted.
    std::vector<std::set<std::size_t>> pending(sccs.size());
    std::vector<std::set<std::size_t>> callers(sccs.size());
    for (const auto &e : cg.edges) {
        std::size_t a = group_of[e.caller], b = group_of[e.callee];
        if (a != b) {
            pending[a].insert(b);
            callers[b].insert(a);
        }
    }
    auto by_name = [&](std::size_t a, std::size_t b) { return sccs[a].front() > sccs[b].front(); };
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < sccs.size(); ++i) {
        if (pending[i].empty()) {
            ready.push_back(i);
        }
    }
    AnalysisOrder order;
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end(), by_name);
        std::size_t g = ready.back();
        ready.pop_back();
        order.groups.push_back(sccs[g]);
        for (std::size_t c : callers[g]) {
            pending[c].erase(g);
            if (pending[c].empty()) {
                ready.push_back(c);
            }
        }
    }
    return order;
}

bool is_recursive(const std::vector<std::string> &group, const CallGraph &cg) {
    if (group.size() > 1) {
        return true;
    }
    for (const auto &e : cg.edges) {
        if (e.caller == group.front() && e.callee == group.front()) {
            return true;
        }
    }
    return false;
}

} // namespace lmpa
