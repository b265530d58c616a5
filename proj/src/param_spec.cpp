#include "lmpa/param_spec.hpp"

#include "lmpa/error.hpp"
#include "lmpa/parser.hpp"

namespace lmpa {

using nlohmann::json;

std::set<AccessPath> ParamSpec::paths() const {
    std::set<AccessPath> out;
    for (const auto &e : entries) {
        for (const auto &m : e.materialized) {
            out.insert(m.path);
        }
    }
    for (const auto &g : globals) {
        out.insert(AccessPath(PathBase::global(g.name)));
        for (const auto &m : g.materialized) {
            out.insert(m.path);
        }
    }
    return out;
}

json ParamSpec::to_json() const {
    auto list = [](const std::vector<MaterializedPath> &ms) {
        json out = json::array();
        for (const auto &m : ms) {
            out.push_back({{"path", m.path.str()}, {"label", m.label}});
        }
        return out;
    };
    json params = json::array();
    for (const auto &e : entries) {
        params.push_back({{"index", e.index}, {"root", e.root_label}, {"materialized", list(e.materialized)}});
    }
    json globs = json::array();
    for (const auto &g : globals) {
        globs.push_back({{"name", g.name}, {"root", g.root_label}, {"materialized", list(g.materialized)}});
    }
    return {{"function", function}, {"params", params}, {"globals", globs}};
}

std::set<AccessPath> dereferenced_paths(const FunctionDecl &fn, const Program &program,
                                        const std::map<std::string, FunctionSummary> &summaries,
                                        const SummaryDecoder &decode) {
    ObjectFactory factory;
    ParamSpec roots = build_param_spec(fn, {});
    PointsToGraph init = init_points_to_env(roots, fn, program, factory);
    SolveOptions options;
    options.materialize = true;
    options.decode = decode;
    SolveResult solved = solve_function_detailed(fn, program, init, summaries, factory, options);
    std::set<AccessPath> out;
    for (const auto &text : solved.materialized) {
        AccessPath p = AccessPath::parse(text);
        if (p.base.kind == PathBase::Kind::Param || p.base.kind == PathBase::Kind::Global) {
            out.insert(p);
        }
    }
    return prefix_close(out);
}

std::set<AccessPath> prefix_close(const std::set<AccessPath> &paths) {
    std::set<AccessPath> out;
    for (const auto &p : paths) {
        std::size_t keep = p.base.kind == PathBase::Kind::Param ? 1 : 0;
        for (std::size_t n = p.selectors.size(); n >= keep && n > 0; --n) {
            out.insert(AccessPath(p.base, {p.selectors.begin(), p.selectors.begin() + n}));
        }
        if (keep == 0) {
            out.insert(AccessPath(p.base));
        }
    }
    return out;
}

ParamSpec build_param_spec(const FunctionDecl &fn, const std::set<AccessPath> &paths) {
    ParamSpec spec;
    spec.function = fn.name;
    int next = 1;
    auto label = [&] { return "o" + std::to_string(next++); };
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
        if (fn.params[i].type.is_pointer()) {
            spec.entries.push_back({static_cast<int>(i), label(), {}});
        }
    }
    for (auto &e : spec.entries) {
        for (const auto &p : paths) {
            if (p.base.kind == PathBase::Kind::Param && p.base.index == e.index && !p.selectors.empty()) {
                e.materialized.push_back({p, ""});
            }
        }
    }
    for (auto &e : spec.entries) {
        for (auto &m : e.materialized) {
            m.label = label();
        }
    }
    for (const auto &p : paths) {
        if (p.base.kind == PathBase::Kind::Global && p.selectors.empty()) {
            spec.globals.push_back({p.base.name, label(), {}});
        }
    }
    for (auto &g : spec.globals) {
        for (const auto &p : paths) {
            if (p.base.kind == PathBase::Kind::Global && p.base.name == g.name && !p.selectors.empty()) {
                g.materialized.push_back({p, label()});
            }
        }
    }
    return spec;
}

ParamSpec infer_param_spec(const FunctionDecl &fn, const Program &program, Gateway &gateway,
                           const std::set<AccessPath> &fallback, std::vector<Diagnostic> *diagnostics) {
    auto note = [&](const std::string &kind, const std::string &message) {
        if (diagnostics) {
            diagnostics->push_back({kind, fn.name, message});
        }
    };
    bool has_pointer_param = std::any_of(fn.params.begin(), fn.params.end(),
                                         [](const Param &p) { return p.type.is_pointer(); });
    if (!gateway.enabled() || !has_pointer_param) {
        return build_param_spec(fn, fallback);
    }
    json layouts = json::object();
    for (const auto &r : program.records) {
        json fields = json::object();
        for (const auto &f : r.fields) {
            fields[f.name] = to_string(f.type);
        }
        layouts[r.name] = fields;
    }
    std::vector<std::string> usage;
    for (const auto &p : fallback) {
        usage.push_back(p.str());
    }
    LLMQuery q{QueryKind::ParamSpec, fn.name,
               {{"signature", print_signature(fn)}, {"record_layouts", layouts}, {"usage_sites", usage}}};
    LLMResponse r;
    try {
        r = gateway.query(q);
    } catch (const Error &e) {
        note("llm_fallback", std::string("param_spec failed: ") + e.what());
        return build_param_spec(fn, fallback);
    }
    std::set<AccessPath> chosen;
    for (const auto &p : fallback) {
        if (p.base.kind == PathBase::Kind::Global) {
            chosen.insert(p);
        }
    }
    for (const auto &entry : r.document["params"]) {
        for (const auto &item : entry["materialize"]) {
            std::string text = item.get<std::string>();
            try {
                AccessPath p = AccessPath::parse(text);
                std::string problem = check_path(program, fn, p);
                if (!problem.empty()) {
                    throw InvalidPath(problem);
                }
                if (fallback.count(p)) {
                    chosen.insert(p);
                }
            } catch (const InvalidPath &e) {
                note("invalid_path", "dropped proposed path " + text + ": " + e.what());
            }
        }
    }
    return build_param_spec(fn, prefix_close(chosen));
}

namespace {

std::optional<Type> object_type(const Program &program, const FunctionDecl &fn, const AccessPath &path) {
    std::optional<Type> t = path_type(program, fn, path);
    if (!t || !t->is_pointer() || t->pointee().kind == Type::Kind::Void) {
        return std::nullopt;
    }
    return t->pointee();
}

} // namespace

PointsToGraph init_points_to_env(const ParamSpec &spec, const FunctionDecl &fn, const Program &program,
                                 ObjectFactory &factory) {
    PointsToGraph graph;
    graph.function = fn.name;
    std::map<AccessPath, ObjectId> by_path;
    auto make = [&](ObjectKind kind, const std::string &label, const AccessPath &path) {
        AbstractObject obj = factory.make(kind, label);
        obj.function = fn.name;
        obj.path = path.str();
        obj.type = object_type(program, fn, path);
        if (kind == ObjectKind::VirtualField) {
            obj.parent = by_path.at(path.parent());
            obj.field = path.selectors.back().slot();
        }
        graph.add_object(obj);
        by_path[path] = obj.id;
        if (kind == ObjectKind::VirtualField) {
            graph.insert(Node::field(obj.parent, obj.field), obj.id);
        }
        return obj.id;
    };
    for (const auto &e : spec.entries) {
        AccessPath root(PathBase::param(e.index));
        graph.insert(Node::var(fn.params.at(e.index).name), make(ObjectKind::VirtualParam, e.root_label, root));
    }
    for (const auto &e : spec.entries) {
        for (const auto &m : e.materialized) {
            make(ObjectKind::VirtualField, m.label, m.path);
        }
    }
    for (const auto &g : spec.globals) {
        AccessPath root(PathBase::global(g.name));
        graph.insert(Node::var(g.name), make(ObjectKind::VirtualParam, g.root_label, root));
    }
    for (const auto &g : spec.globals) {
        for (const auto &m : g.materialized) {
            make(ObjectKind::VirtualField, m.label, m.path);
        }
    }
    return graph;
}

} // namespace lmpa
