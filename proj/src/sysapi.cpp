#include "lmpa/sysapi.hpp"

#include "lmpa/error.hpp"
#include "lmpa/solver.hpp"

#include <algorithm>
#include <cctype>

namespace lmpa {

const std::vector<ApiSignature> &api_catalog() {
    static const std::vector<ApiSignature> catalog = {
        {"malloc", {"size"}, {"ret"}, true},
        {"calloc", {"count", "size"}, {"ret"}, true},
        {"strdup", {"src"}, {"ret", "src"}, true},
        {"free", {"dst"}, {"dst"}, false},
        {"memcpy", {"dst", "src", "size"}, {"dst", "src"}, false},
        {"memset", {"dst", "value", "size"}, {"dst"}, false},
        {"snprintf", {"dst", "size"}, {"dst"}, false},
    };
    return catalog;
}

const ApiSignature *find_api(std::string_view name) {
    for (const auto &sig : api_catalog()) {
        if (sig.name == name) {
            return &sig;
        }
    }
    return nullptr;
}

bool is_modeled_api(std::string_view name) { return find_api(name) != nullptr; }

nlohmann::json api_catalog_json() {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &sig : api_catalog()) {
        std::vector<std::string> formals;
        if (sig.allocates) {
            formals.push_back("ret");
        }
        formals.insert(formals.end(), sig.positional.begin(), sig.positional.end());
        out.push_back({{"name", sig.name}, {"formals", formals}, {"required", sig.required}});
    }
    return out;
}

std::string check_api_call(const ApiCall &call) {
    const ApiSignature *sig = find_api(call.api);
    if (!sig) {
        return "'" + call.api + "' is not a modeled API";
    }
    std::string missing;
    for (const auto &formal : sig->required) {
        auto it = call.arg_map.find(formal);
        if (it == call.arg_map.end() || it->second.empty()) {
            missing += missing.empty() ? formal : ", " + formal;
        }
    }
    return missing.empty() ? std::string() : call.api + " is missing formals: " + missing;
}

std::vector<Constraint> api_constraints(const std::string &api, const std::map<std::string, Term> &formals,
                                        std::optional<ObjectId> fresh, const std::string &guard, int index) {
    auto formal = [&](const char *name) -> std::optional<Term> {
        auto it = formals.find(name);
        if (it == formals.end() || it->second.empty()) {
            return std::nullopt;
        }
        return it->second;
    };
    auto make = [&](Constraint::Kind kind, Term lhs, Term rhs) {
        Constraint c;
        c.kind = kind;
        c.lhs = std::move(lhs);
        c.rhs = std::move(rhs);
        c.guard = guard;
        c.index = index;
        return c;
    };
    std::vector<Constraint> out;
    if ((api == "malloc" || api == "calloc" || api == "strdup") && fresh) {
        if (auto ret = formal("ret")) {
            out.push_back(make(Constraint::Kind::Include, *ret, Term::of_object(*fresh)));
        }
        if (api == "strdup") {
            if (auto src = formal("src")) {
                out.push_back(make(Constraint::Kind::FieldCopy, Term::of_object(*fresh), *src));
            }
        }
    } else if (api == "memcpy") {
        auto dst = formal("dst");
        auto src = formal("src");
        if (dst && src) {
            out.push_back(make(Constraint::Kind::FieldCopy, *dst, *src));
        }
    } else if (api == "free") {
        if (auto dst = formal("dst")) {
            out.push_back(make(Constraint::Kind::Free, *dst, Term::none()));
        }
    }
    return out;
}

namespace {

bool is_number(const std::string &text) {
    return !text.empty() && std::all_of(text.begin() + (text[0] == '-' ? 1 : 0), text.end(),
                                        [](unsigned char c) { return std::isdigit(c); });
}

/// `p`, `p->f->g` or `*p` in the scope of `graph`.
Term scope_term(const std::string &text, const PointsToGraph &graph) {
    std::size_t stars = 0;
    while (stars < text.size() && text[stars] == '*') {
        ++stars;
    }
    std::string rest = text.substr(stars);
    std::vector<std::string> fields(stars, kDerefField);
    std::size_t arrow = rest.find("->");
    std::string root = rest.substr(0, arrow);
    while (arrow != std::string::npos) {
        std::size_t next = rest.find("->", arrow + 2);
        fields.push_back(rest.substr(arrow + 2, next == std::string::npos ? next : next - arrow - 2));
        arrow = next;
    }
    bool known = graph.declared.count(root) || graph.var_pts.count(root) || graph.cells.count(root);
    if (root.empty() || !known) {
        throw UnresolvedArg("'" + text + "' does not resolve in the scope of " +
                            (graph.function.empty() ? std::string("the graph") : graph.function));
    }
    return Term::of_var(root, std::move(fields));
}

} // namespace

PointsToGraph apply_api_model(const ApiCall &call, const PointsToGraph &graph, ObjectFactory &fresh,
                              const std::string &site_label, std::vector<Diagnostic> *events) {
    static const Program no_program;
    const ApiSignature *sig = find_api(call.api);
    if (!sig) {
        throw UnresolvedArg("'" + call.api + "' is not a modeled API");
    }
    PointsToGraph work = graph;
    std::map<std::string, Term> formals;
    for (const auto &[formal, text] : call.arg_map) {
        if (is_number(text) || text == "null") {
            continue;
        }
        formals[formal] = scope_term(text, work);
    }
    std::optional<ObjectId> object;
    if (sig->allocates) {
        AbstractObject obj = fresh.make(ObjectKind::HeapSite, site_label);
        obj.function = graph.function;
        work.add_object(obj);
        object = obj.id;
    }
    ConstraintSolver solver(work, no_program, fresh, SolveOptions{});
    solver.add(api_constraints(call.api, formals, object, "", -1));
    solver.solve();
    if (events) {
        for (const auto &c : solver.constraints()) {
            if (c.kind == Constraint::Kind::Free) {
                for (ObjectId o : solver.eval(c.lhs)) {
                    events->push_back({"freed", graph.function, work.object(o).label + " freed"});
                }
            }
        }
    }
    return graph_delta(graph, work);
}

std::vector<AccessPath> api_mod_paths(const ApiCall &call, const std::map<std::string, AccessPath> &resolved) {
    std::vector<AccessPath> out;
    const ApiSignature *sig = find_api(call.api);
    if (!sig) {
        return out;
    }
    if (sig->allocates) {
        out.push_back(AccessPath(PathBase::ret()));
    }
    if (call.api == "strdup") {
        out.push_back(AccessPath(PathBase::ret(), {PathSelector::wildcard()}));
    }
    if (call.api == "memcpy" || call.api == "memset" || call.api == "snprintf") {
        auto it = resolved.find("dst");
        if (it != resolved.end()) {
            out.push_back(it->second.with(PathSelector::wildcard()));
        }
    }
    return out;
}

} // namespace lmpa
