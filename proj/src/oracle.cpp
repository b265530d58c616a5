#include "lmpa/oracle.hpp"

#include "lmpa/callgraph.hpp"
#include "lmpa/error.hpp"
#include "lmpa/lower.hpp"
#include "lmpa/solver.hpp"
#include "lmpa/sysapi.hpp"

#include <algorithm>
#include <iterator>

namespace lmpa {

namespace {

/// One inlined copy of a function body.
struct Frame {
    const FunctionDecl *fn = nullptr;
    std::string suffix;

    std::string name(const std::string &var, const Program &program) const {
        if (var == kRetNode) {
            return kRetNode + suffix;
        }
        return program.find_global(var) ? var : var + suffix;
    }
};

class Inliner {
public:
    Inliner(const Program &program, PointsToGraph &graph, ObjectFactory &factory)
        : program_(program), graph_(graph), factory_(factory) {}

    void root(const FunctionDecl &fn) { body(Frame{&fn, ""}, fn.body); }

    std::vector<Constraint> take() { return std::move(out_); }

private:
    Term var_term(const Frame &frame, const std::string &var, std::vector<std::string> fields = {}) {
        return Term::of_var(frame.name(var, program_), std::move(fields));
    }

    Term access(const Frame &frame, const Access &a) {
        std::vector<std::string> fields;
        for (const auto &sel : a.path) {
            fields.push_back(sel.slot());
        }
        return var_term(frame, a.root, std::move(fields));
    }

    Term operand(const Frame &frame, const Operand &op) {
        if (const auto *a = std::get_if<Access>(&op)) {
            return access(frame, *a);
        }
        if (const auto *addr = std::get_if<AddressOf>(&op)) {
            auto it = graph_.cells.find(frame.name(addr->name, program_));
            if (it != graph_.cells.end()) {
                return Term::of_object(it->second);
            }
        }
        return Term::none();
    }

    void include(Term lhs, Term rhs, int index) {
        if (rhs.empty()) {
            return;
        }
        Constraint c;
        c.lhs = std::move(lhs);
        c.rhs = std::move(rhs);
        c.index = index;
        out_.push_back(std::move(c));
    }

    /// Declares the copy's variables and its address-taken storage.
    void declare(const Frame &frame) {
        const FunctionDecl &fn = *frame.fn;
        TypeEnv env(program_, fn);
        graph_.declared.insert(frame.name(kRetNode, program_));
        for (const auto &p : fn.params) {
            graph_.declared.insert(frame.name(p.name, program_));
        }
        for (const auto &t : fn.temps) {
            graph_.declared.insert(frame.name(t.name, program_));
        }
        auto take_address = [&](const Operand &op) {
            const auto *addr = std::get_if<AddressOf>(&op);
            if (!addr || program_.find_global(addr->name)) {
                return;
            }
            std::string var = frame.name(addr->name, program_);
            if (graph_.cells.count(var)) {
                return;
            }
            AbstractObject obj = factory_.make(ObjectKind::StackSite, "stack@" + fn.name + ":" + addr->name + frame.suffix);
            obj.function = fn.name;
            obj.type = env.lookup(addr->name);
            graph_.add_object(obj);
            graph_.cells[var] = obj.id;
        };
        for_each_stmt(fn.body, [&](const Stmt &stmt) {
            if (const auto *decl = std::get_if<Decl>(&stmt.node)) {
                graph_.declared.insert(frame.name(decl->name, program_));
            } else if (const auto *assign = std::get_if<Assign>(&stmt.node)) {
                if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
                    for (const auto &a : call->args) {
                        take_address(a);
                    }
                } else if (const auto *addr = std::get_if<AddressOf>(&assign->src)) {
                    take_address(*addr);
                }
            } else if (const auto *call = std::get_if<CallStmt>(&stmt.node)) {
                for (const auto &a : call->call.args) {
                    take_address(a);
                }
            } else if (const auto *ret = std::get_if<Return>(&stmt.node); ret && ret->value) {
                take_address(*ret->value);
            }
        });
    }

    void body(const Frame &frame, const std::vector<Stmt> &stmts) {
        for (const auto &stmt : stmts) {
            if (const auto *assign = std::get_if<Assign>(&stmt.node)) {
                Term dst = access(frame, assign->dst);
                if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
                    this->call(frame, *call, &dst, stmt.index);
                } else if (const auto *a = std::get_if<Access>(&assign->src)) {
                    include(dst, access(frame, *a), stmt.index);
                } else if (const auto *addr = std::get_if<AddressOf>(&assign->src)) {
                    include(dst, operand(frame, *addr), stmt.index);
                }
            } else if (const auto *call = std::get_if<CallStmt>(&stmt.node)) {
                this->call(frame, call->call, nullptr, stmt.index);
            } else if (const auto *ret = std::get_if<Return>(&stmt.node)) {
                if (ret->value) {
                    include(var_term(frame, kRetNode), operand(frame, *ret->value), stmt.index);
                }
            } else if (const auto *branch = std::get_if<If>(&stmt.node)) {
                body(frame, branch->then_body);
                body(frame, branch->else_body);
            }
        }
    }

    void call(const Frame &frame, const CallExpr &call, const Term *dst, int index) {
        if (const ApiSignature *sig = find_api(call.callee)) {
            std::map<std::string, Term> formals;
            for (std::size_t i = 0; i < call.args.size() && i < sig->positional.size(); ++i) {
                formals[sig->positional[i]] = operand(frame, call.args[i]);
            }
            if (dst) {
                formals["ret"] = *dst;
            }
            std::optional<ObjectId> fresh;
            if (sig->allocates) {
                std::string label = "heap@" + frame.fn->name + ":" + std::to_string(index) + frame.suffix;
                if (auto existing = graph_.find_label(label)) {
                    fresh = *existing;
                } else {
                    AbstractObject obj = factory_.make(ObjectKind::HeapSite, label);
                    obj.function = frame.fn->name;
                    obj.index = index;
                    graph_.add_object(obj);
                    fresh = obj.id;
                }
            }
            for (auto &c : api_constraints(sig->name, formals, fresh, "", index)) {
                if (c.kind != Constraint::Kind::Free) {
                    out_.push_back(std::move(c));
                }
            }
            return;
        }
        const FunctionDecl *callee = program_.find_function(call.callee);
        if (!callee) {
            throw UnknownCallee(frame.fn->name + " calls undeclared function '" + call.callee + "'");
        }
        Frame inner{callee, "/" + frame.fn->name + ":" + std::to_string(index) + frame.suffix};
        declare(inner);
        for (std::size_t i = 0; i < callee->params.size() && i < call.args.size(); ++i) {
            include(var_term(inner, callee->params[i].name), operand(frame, call.args[i]), index);
        }
        body(inner, callee->body);
        if (dst) {
            include(*dst, var_term(inner, kRetNode), index);
        }
    }

    const Program &program_;
    PointsToGraph &graph_;
    ObjectFactory &factory_;
    std::vector<Constraint> out_;
};

} // namespace

std::map<std::string, PointsToGraph> oracle_inline_analyze(const Program &program,
                                                           const std::map<std::string, ParamSpec> &specs) {
    CallGraph cg = build_call_graph(program);
    for (const auto &group : analysis_order(cg).groups) {
        if (is_recursive(group, cg)) {
            throw RecursiveProgram("call cycle through '" + group.front() + "'");
        }
    }
    std::map<std::string, PointsToGraph> out;
    for (const auto &fn : program.functions) {
        ObjectFactory factory;
        auto it = specs.find(fn.name);
        ParamSpec spec = it != specs.end() ? it->second : build_param_spec(fn, {});
        PointsToGraph graph = init_points_to_env(spec, fn, program, factory);
        prepare_graph(graph, fn, program, factory);
        Inliner inliner(program, graph, factory);
        inliner.root(fn);
        ConstraintSolver solver(graph, program, factory, {});
        solver.add(inliner.take());
        solver.solve();
        out.emplace(fn.name, std::move(graph));
    }
    return out;
}

FactSet escaping_facts(const PointsToGraph &graph) {
    std::set<ObjectId> seen;
    std::vector<ObjectId> work;
    auto visit = [&](ObjectId o) {
        if (seen.insert(o).second) {
            work.push_back(o);
        }
    };
    if (auto it = graph.var_pts.find(kRetNode); it != graph.var_pts.end()) {
        for (ObjectId o : it->second) {
            visit(o);
        }
    }
    for (const auto &[id, obj] : graph.objects) {
        if (obj.is_virtual() || obj.kind == ObjectKind::GlobalSite) {
            visit(id);
        }
    }
    while (!work.empty()) {
        ObjectId o = work.back();
        work.pop_back();
        for (auto it = graph.field_pts.lower_bound({o, std::string()}); it != graph.field_pts.end() && it->first.first == o;
             ++it) {
            for (ObjectId t : it->second) {
                visit(t);
            }
        }
    }
    FactSet facts;
    if (auto it = graph.var_pts.find(kRetNode); it != graph.var_pts.end()) {
        for (ObjectId o : it->second) {
            facts.emplace(kRetNode, graph.object(o).label);
        }
    }
    for (ObjectId o : seen) {
        for (auto it = graph.field_pts.lower_bound({o, std::string()}); it != graph.field_pts.end() && it->first.first == o;
             ++it) {
            std::string node = graph.node_label(Node::field(o, it->first.second));
            for (ObjectId t : it->second) {
                facts.emplace(node, graph.object(t).label);
            }
        }
    }
    return facts;
}

FactDiff compare_facts(const PointsToGraph &summary_based, const PointsToGraph &reference) {
    FactSet mine = escaping_facts(summary_based);
    FactSet ref = escaping_facts(reference);
    FactDiff diff;
    std::set_difference(ref.begin(), ref.end(), mine.begin(), mine.end(), std::inserter(diff.missing, diff.missing.end()));
    std::set_difference(mine.begin(), mine.end(), ref.begin(), ref.end(), std::inserter(diff.extra, diff.extra.end()));
    return diff;
}

} // namespace lmpa
