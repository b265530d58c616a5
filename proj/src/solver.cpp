#include "lmpa/solver.hpp"

#include "lmpa/access_path.hpp"
#include "lmpa/error.hpp"
#include "lmpa/lower.hpp"
#include "lmpa/parser.hpp"
#include "lmpa/sysapi.hpp"

#include <algorithm>

namespace lmpa {

ConstraintSolver::ConstraintSolver(PointsToGraph &graph, const Program &program, ObjectFactory &factory,
                                   SolveOptions options)
    : graph_(graph), program_(program), factory_(factory), options_(std::move(options)) {
    if (options_.shuffle_seed) {
        rng_.seed(*options_.shuffle_seed);
    }
}

void ConstraintSolver::add(Constraint constraint) {
    constraints_.push_back(std::move(constraint));
    queued_.push_back(false);
    push(static_cast<int>(constraints_.size()) - 1);
}

void ConstraintSolver::add(const std::vector<Constraint> &constraints) {
    for (const auto &c : constraints) {
        add(c);
    }
}

void ConstraintSolver::push(int index) {
    if (!queued_[index]) {
        queued_[index] = true;
        worklist_.push_back(index);
    }
}

void ConstraintSolver::solve() {
    if (initial_.empty()) {
        for (const auto &[name, set] : graph_.var_pts) {
            initial_[Node::var(name)] = set;
        }
        for (const auto &[key, set] : graph_.field_pts) {
            initial_[Node::field(key.first, key.second)] = set;
        }
    }
    while (!worklist_.empty()) {
        int index;
        if (options_.shuffle_seed) {
            std::uniform_int_distribution<std::size_t> pick(0, worklist_.size() - 1);
            std::swap(worklist_[pick(rng_)], worklist_.back());
            index = worklist_.back();
            worklist_.pop_back();
        } else {
            index = worklist_.front();
            worklist_.pop_front();
        }
        queued_[index] = false;
        evaluate(index);
        if (options_.on_step) {
            options_.on_step(graph_);
        }
    }
}

void ConstraintSolver::evaluate(int index) {
    const Constraint c = constraints_[index];
    switch (c.kind) {
    case Constraint::Kind::Include: {
        ObjSet values = rvalue(c.rhs, index);
        for (const Node &node : lvalue(c.lhs, index)) {
            for (ObjectId o : values) {
                store(node, o);
            }
        }
        break;
    }
    case Constraint::Kind::FieldCopy: {
        ObjSet dsts = rvalue(c.lhs, index);
        ObjSet srcs = rvalue(c.rhs, index);
        for (ObjectId src : srcs) {
            watch_fields(src, index);
            const AbstractObject &obj = graph_.object(src);
            if (options_.materialize && obj.type) {
                std::vector<std::string> fields = declared_fields(program_, *obj.type);
                if (obj.type->is_pointer()) {
                    fields.push_back(kDerefField);
                }
                for (const auto &f : fields) {
                    touch(src, f);
                }
            }
            std::vector<std::string> slots;
            for (auto it = graph_.field_pts.lower_bound({src, std::string()});
                 it != graph_.field_pts.end() && it->first.first == src; ++it) {
                slots.push_back(it->first.second);
            }
            for (const auto &f : slots) {
                ObjSet payload = read(Node::field(src, f), index);
                for (ObjectId dst : dsts) {
                    touch(dst, f);
                    for (ObjectId o : payload) {
                        store(Node::field(dst, f), o);
                    }
                }
            }
        }
        break;
    }
    case Constraint::Kind::Free:
        break;
    }
}

void ConstraintSolver::store(const Node &node, ObjectId object) {
    bool new_slot = !node.is_var() && !graph_.has_node(node);
    if (!graph_.insert(node, object)) {
        return;
    }
    if (auto it = watchers_.find(node); it != watchers_.end()) {
        for (int w : it->second) {
            push(w);
        }
    }
    if (new_slot) {
        if (auto it = field_watchers_.find(node.object); it != field_watchers_.end()) {
            for (int w : it->second) {
                push(w);
            }
        }
    }
}

void ConstraintSolver::watch(const Node &node, int reader) {
    auto &list = watchers_[node];
    if (std::find(list.begin(), list.end(), reader) == list.end()) {
        list.push_back(reader);
    }
}

void ConstraintSolver::watch_fields(ObjectId object, int reader) {
    auto &list = field_watchers_[object];
    if (std::find(list.begin(), list.end(), reader) == list.end()) {
        list.push_back(reader);
    }
}

const ObjSet &ConstraintSolver::read(const Node &node, int reader) {
    if (reader >= 0) {
        if (!node.is_var()) {
            touch(node.object, node.name);
        }
        watch(node, reader);
    }
    return graph_.pts(node);
}

ObjSet ConstraintSolver::rvalue(const Term &term, int reader) {
    ObjSet current;
    switch (term.base) {
    case Term::Base::None:
        return {};
    case Term::Base::Var:
        current = read(graph_.value_node(term.var), reader);
        break;
    case Term::Base::Object:
        current = {term.object};
        break;
    }
    for (const auto &field : term.fields) {
        ObjSet next;
        for (ObjectId o : current) {
            const ObjSet &s = read(Node::field(o, field), reader);
            next.insert(s.begin(), s.end());
        }
        current = std::move(next);
    }
    return current;
}

std::vector<Node> ConstraintSolver::lvalue(const Term &term, int reader) {
    if (term.fields.empty()) {
        if (term.base == Term::Base::Var) {
            return {graph_.value_node(term.var)};
        }
        return {};
    }
    Term base = term;
    base.fields.pop_back();
    std::vector<Node> nodes;
    for (ObjectId o : rvalue(base, reader)) {
        if (reader >= 0) {
            touch(o, term.fields.back());
        }
        nodes.push_back(Node::field(o, term.fields.back()));
    }
    return nodes;
}

ObjSet ConstraintSolver::eval(const Term &term) { return rvalue(term, -1); }

void ConstraintSolver::touch(ObjectId object, const std::string &field) {
    if (!options_.materialize || !touched_.insert({object, field}).second) {
        return;
    }
    const AbstractObject &obj = graph_.object(object);
    if (!obj.is_virtual() && obj.kind != ObjectKind::GlobalSite) {
        return;
    }
    AccessPath parent = AccessPath::parse(obj.path);
    if (parent.selectors.size() >= options_.max_depth) {
        return;
    }
    std::optional<Type> child_type;
    if (obj.type && obj.type->kind != Type::Kind::Void) {
        std::optional<Type> slot_type;
        if (field == kDerefField) {
            slot_type = obj.type;
        } else {
            slot_type = field_type(program_, *obj.type, field);
        }
        if (!slot_type || !slot_type->is_pointer()) {
            return;
        }
        if (slot_type->pointee().kind != Type::Kind::Void) {
            child_type = slot_type->pointee();
        }
    }
    AccessPath path = parent.child(field);
    std::string text = path.str();
    AbstractObject child = factory_.make(ObjectKind::VirtualField, "v:" + text);
    child.function = graph_.function;
    child.parent = object;
    child.field = field;
    child.path = text;
    child.type = child_type;
    graph_.add_object(child);
    materialized_.insert(text);
    store(Node::field(object, field), child.id);
}

namespace {

struct GuardState {
    bool unguarded = false;
    std::set<std::string> guards;

    void add(const std::string &guard) {
        if (guard.empty()) {
            unguarded = true;
        } else {
            guards.insert(guard);
        }
    }
};

} // namespace

FactGuards ConstraintSolver::guards() {
    std::map<Node, std::map<ObjectId, GuardState>> states;
    for (const auto &[node, set] : initial_) {
        for (ObjectId o : set) {
            states[node][o].unguarded = true;
        }
    }
    for (const auto &obj : graph_.objects) {
        if (obj.second.kind == ObjectKind::VirtualField && obj.second.parent != 0) {
            states[Node::field(obj.second.parent, obj.second.field)][obj.first].unguarded = true;
        }
    }
    for (const auto &c : constraints_) {
        if (c.kind == Constraint::Kind::Include) {
            ObjSet values = rvalue(c.rhs, -1);
            for (const Node &node : lvalue(c.lhs, -1)) {
                for (ObjectId o : values) {
                    states[node][o].add(c.guard);
                }
            }
        } else if (c.kind == Constraint::Kind::FieldCopy) {
            ObjSet dsts = rvalue(c.lhs, -1);
            for (ObjectId src : rvalue(c.rhs, -1)) {
                for (auto it = graph_.field_pts.lower_bound({src, std::string()});
                     it != graph_.field_pts.end() && it->first.first == src; ++it) {
                    for (ObjectId dst : dsts) {
                        for (ObjectId o : it->second) {
                            states[Node::field(dst, it->first.second)][o].add(c.guard);
                        }
                    }
                }
            }
        }
    }
    FactGuards out;
    for (const auto &[node, per_object] : states) {
        for (const auto &[o, st] : per_object) {
            if (!graph_.pts(node).count(o)) {
                continue;
            }
            out[node][o] = (st.unguarded || st.guards.size() != 1) ? std::string() : *st.guards.begin();
        }
    }
    return out;
}

std::string join_guards(const std::string &a, const std::string &b) {
    if (a.empty()) {
        return b;
    }
    if (b.empty()) {
        return a;
    }
    return a + " && " + b;
}

std::vector<SummaryOp> surviving_ops(const std::vector<SummaryOp> &ops) {
    std::vector<SummaryOp> kills;
    for (const auto &op : ops) {
        if (op.op == OpKind::Kill) {
            kills.push_back(op);
        }
    }
    std::vector<SummaryOp> out;
    for (const auto &op : ops) {
        if (op.op == OpKind::Kill) {
            continue;
        }
        bool killed = std::any_of(kills.begin(), kills.end(), [&](const SummaryOp &k) {
            return k.dst == op.dst && (!k.src || k.src == op.src);
        });
        if (!killed) {
            out.push_back(op);
        }
    }
    return out;
}

namespace {

Term operand_term(const Operand &operand, const PointsToGraph &graph) {
    if (const auto *access = std::get_if<Access>(&operand)) {
        std::vector<std::string> fields;
        for (const auto &sel : access->path) {
            fields.push_back(sel.slot());
        }
        return Term::of_var(access->root, std::move(fields));
    }
    if (const auto *addr = std::get_if<AddressOf>(&operand)) {
        auto it = graph.cells.find(addr->name);
        if (it != graph.cells.end()) {
            return Term::of_object(it->second);
        }
    }
    return Term::none();
}

Term access_term(const Access &access) {
    std::vector<std::string> fields;
    for (const auto &sel : access.path) {
        fields.push_back(sel.slot());
    }
    return Term::of_var(access.root, std::move(fields));
}

ObjectId global_object(const std::string &name, PointsToGraph &graph, ObjectFactory &factory,
                        const Program &program) {
    const GlobalDecl *decl = program.find_global(name);
    if (!decl) {
        throw InvalidPath("unknown global '" + name + "'");
    }
    AbstractObject obj = factory.global_site(name, decl->type);
    graph.add_object(obj);
    return obj.id;
}

/// Instantiates summary paths in the caller's scope.
class Binder {
public:
    Binder(const CallSite &site, PointsToGraph &graph, ObjectFactory &factory, const Program &program)
        : site_(site), graph_(graph), factory_(factory), program_(program) {}

    std::optional<Term> term(const AccessPath &path) {
        Term t;
        switch (path.base.kind) {
        case PathBase::Kind::Param:
            if (path.base.index < 0 || static_cast<std::size_t>(path.base.index) >= site_.args.size()) {
                throw UnboundParam("call to summary at " + site_.caller + ":" + std::to_string(site_.index) +
                                   " has no argument for param:" + std::to_string(path.base.index));
            }
            t = operand_term(site_.args[path.base.index], graph_);
            break;
        case PathBase::Kind::Ret:
            t = site_.dst ? Term::of_var(*site_.dst) : Term::none();
            break;
        case PathBase::Kind::Global:
            t = Term::of_object(global_object(path.base.name, graph_, factory_, program_), {kDerefField});
            break;
        case PathBase::Kind::GlobalAddr:
            t = Term::of_object(global_object(path.base.name, graph_, factory_, program_));
            break;
        case PathBase::Kind::Fresh:
            t = Term::of_object(fresh(path.base.name));
            break;
        }
        for (const auto &sel : path.selectors) {
            if (sel.kind == PathSelector::Kind::Wildcard) {
                return std::nullopt;
            }
            t.fields.push_back(sel.slot());
        }
        return t;
    }

    ObjectId fresh(const std::string &tag) {
        auto it = minted_.find(tag);
        if (it != minted_.end()) {
            return it->second;
        }
        std::string label = tag + "/" + site_.caller + ":" + std::to_string(site_.index);
        ObjectId id;
        if (auto existing = graph_.find_label(label)) {
            id = *existing;
        } else {
            bool stack = tag.rfind("stack@", 0) == 0;
            AbstractObject obj = factory_.make(stack ? ObjectKind::StackSite : ObjectKind::HeapSite, label);
            obj.function = site_.caller;
            obj.index = site_.index;
            graph_.add_object(obj);
            id = obj.id;
        }
        minted_.emplace(tag, id);
        return id;
    }

    /// Resolves an ApiCall arg_map entry: an access path, a callee
    /// parameter name with MiniC selectors, or a literal.
    std::optional<Term> expr(const FunctionDecl &callee, const std::string &text) {
        try {
            return term(AccessPath::parse(text));
        } catch (const InvalidPath &) {
        }
        std::string rest = text;
        std::size_t stars = 0;
        while (stars < rest.size() && rest[stars] == '*') {
            ++stars;
        }
        rest = rest.substr(stars);
        std::vector<PathSelector> sels(stars, PathSelector::deref());
        std::string root = rest.substr(0, rest.find("->"));
        for (std::size_t pos = rest.find("->"); pos != std::string::npos;) {
            std::size_t next = rest.find("->", pos + 2);
            sels.push_back(PathSelector::field_of(rest.substr(pos + 2, next == std::string::npos ? next : next - pos - 2)));
            pos = next;
        }
        auto index = callee.param_index(root);
        if (!index) {
            return std::nullopt;
        }
        return term(AccessPath(PathBase::param(static_cast<int>(*index)), std::move(sels)));
    }

private:
    const CallSite &site_;
    PointsToGraph &graph_;
    ObjectFactory &factory_;
    const Program &program_;
    std::map<std::string, ObjectId> minted_;
};

bool assignable(const SummaryOp &op, const Term &dst) {
    if (!dst.fields.empty()) {
        return true;
    }
    return dst.base == Term::Base::Var && op.dst.base.kind == PathBase::Kind::Ret;
}

} // namespace

std::vector<Constraint> summary_constraints(const FunctionDecl &callee, const FunctionSummary &summary,
                                            const CallSite &site, PointsToGraph &graph, ObjectFactory &factory,
                                            const Program &program, const SummaryDecoder &decode) {
    Binder binder(site, graph, factory, program);
    std::vector<Constraint> out;
    if (const auto *list = std::get_if<ApiListSummary>(&summary)) {
        for (std::size_t k = 0; k < list->calls.size(); ++k) {
            const ApiCall &call = list->calls[k];
            const ApiSignature *sig = find_api(call.api);
            if (!sig) {
                continue;
            }
            std::map<std::string, Term> formals;
            for (const auto &[formal, text] : call.arg_map) {
                if (auto t = binder.expr(callee, text)) {
                    formals[formal] = *t;
                }
            }
            std::optional<ObjectId> fresh;
            if (sig->allocates) {
                fresh = binder.fresh("heap@" + callee.name + ":api" + std::to_string(k));
            }
            auto cs = api_constraints(call.api, formals, fresh, site.guard, site.index);
            out.insert(out.end(), cs.begin(), cs.end());
        }
        return out;
    }
    std::vector<SummaryOp> ops;
    if (const auto *nl = std::get_if<NLSummary>(&summary)) {
        ops = decode ? decode(callee, *nl, site.index) : nl->raw.ops;
    } else {
        ops = std::get<ConservativeSummary>(summary).ops;
    }
    for (const auto &op : surviving_ops(ops)) {
        if (!op.src) {
            continue;
        }
        auto dst = binder.term(op.dst);
        auto src = binder.term(*op.src);
        if (!dst || !src || !assignable(op, *dst)) {
            continue;
        }
        Constraint c;
        c.lhs = *dst;
        c.rhs = *src;
        c.guard = join_guards(site.guard, op.cond.value_or(""));
        c.index = site.index;
        out.push_back(std::move(c));
    }
    return out;
}

void prepare_graph(PointsToGraph &graph, const FunctionDecl &fn, const Program &program, ObjectFactory &factory) {
    graph.function = fn.name;
    TypeEnv env(program, fn);
    graph.declared.insert(kRetNode);
    for (const auto &p : fn.params) {
        graph.declared.insert(p.name);
    }
    for (const auto &t : fn.temps) {
        graph.declared.insert(t.name);
    }
    for (const auto &g : program.globals) {
        graph.declared.insert(g.name);
        AbstractObject obj = factory.global_site(g.name, g.type);
        graph.add_object(obj);
        graph.cells[g.name] = obj.id;
    }
    auto take_address = [&](const std::string &name) {
        if (graph.cells.count(name)) {
            return;
        }
        std::string label = "stack@" + fn.name + ":" + name;
        ObjectId id;
        if (auto existing = graph.find_label(label)) {
            id = *existing;
        } else {
            AbstractObject obj = factory.make(ObjectKind::StackSite, label);
            obj.function = fn.name;
            obj.type = env.lookup(name);
            graph.add_object(obj);
            id = obj.id;
        }
        graph.cells[name] = id;
    };
    auto visit_operand = [&](const auto &operand) {
        if (const auto *addr = std::get_if<AddressOf>(&operand)) {
            take_address(addr->name);
        }
    };
    for_each_stmt(fn.body, [&](const Stmt &stmt) {
        if (const auto *decl = std::get_if<Decl>(&stmt.node)) {
            graph.declared.insert(decl->name);
        } else if (const auto *assign = std::get_if<Assign>(&stmt.node)) {
            visit_operand(assign->src);
            if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
                for (const auto &a : call->args) {
                    visit_operand(a);
                }
            }
        } else if (const auto *call = std::get_if<CallStmt>(&stmt.node)) {
            for (const auto &a : call->call.args) {
                visit_operand(a);
            }
        } else if (const auto *ret = std::get_if<Return>(&stmt.node)) {
            if (ret->value) {
                visit_operand(*ret->value);
            }
        }
    });
    for (const auto &[name, cell] : graph.cells) {
        auto it = graph.var_pts.find(name);
        if (it == graph.var_pts.end()) {
            continue;
        }
        for (ObjectId o : it->second) {
            graph.insert(Node::field(cell, kDerefField), o);
        }
        graph.var_pts.erase(it);
    }
}

namespace {

class ConstraintBuilder {
public:
    ConstraintBuilder(const FunctionDecl &fn, const Program &program, PointsToGraph &graph,
                      const std::map<std::string, FunctionSummary> &summaries, ObjectFactory &factory,
                      const SummaryDecoder &decode)
        : fn_(fn), program_(program), env_(program, fn), graph_(graph), summaries_(summaries),
          factory_(factory), decode_(decode) {}

    std::vector<Constraint> build() {
        walk(fn_.body, "");
        return std::move(out_);
    }

private:
    void walk(const std::vector<Stmt> &body, const std::string &guard) {
        for (const auto &stmt : body) {
            if (const auto *assign = std::get_if<Assign>(&stmt.node)) {
                check(assign->dst);
                Term dst = access_term(assign->dst);
                if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
                    this->call(*call, &assign->dst, stmt.index, guard);
                    continue;
                }
                Term src;
                if (const auto *access = std::get_if<Access>(&assign->src)) {
                    check(*access);
                    src = access_term(*access);
                } else if (const auto *addr = std::get_if<AddressOf>(&assign->src)) {
                    src = operand_term(*addr, graph_);
                }
                include(dst, src, guard, stmt.index);
            } else if (const auto *call = std::get_if<CallStmt>(&stmt.node)) {
                this->call(call->call, nullptr, stmt.index, guard);
            } else if (const auto *ret = std::get_if<Return>(&stmt.node)) {
                if (ret->value) {
                    if (const auto *access = std::get_if<Access>(&*ret->value)) {
                        check(*access);
                    }
                    include(Term::of_var(kRetNode), operand_term(*ret->value, graph_), guard, stmt.index);
                }
            } else if (const auto *branch = std::get_if<If>(&stmt.node)) {
                std::string text = print_condition(branch->cond);
                walk(branch->then_body, join_guards(guard, text));
                walk(branch->else_body, join_guards(guard, "!(" + text + ")"));
            }
        }
    }

    void include(Term lhs, Term rhs, const std::string &guard, int index) {
        if (rhs.empty()) {
            return;
        }
        Constraint c;
        c.lhs = std::move(lhs);
        c.rhs = std::move(rhs);
        c.guard = guard;
        c.index = index;
        out_.push_back(std::move(c));
    }

    void check(const Access &access) {
        try {
            env_.type_of(access);
        } catch (const TypeError &e) {
            throw UndeclaredField(fn_.name + ": " + e.what());
        }
    }

    void call(const CallExpr &call, const Access *dst, int index, const std::string &guard) {
        for (const auto &a : call.args) {
            if (const auto *access = std::get_if<Access>(&a)) {
                check(*access);
            }
        }
        if (const ApiSignature *sig = find_api(call.callee)) {
            std::map<std::string, Term> formals;
            for (std::size_t i = 0; i < call.args.size() && i < sig->positional.size(); ++i) {
                formals[sig->positional[i]] = operand_term(call.args[i], graph_);
            }
            if (dst) {
                formals["ret"] = access_term(*dst);
            }
            std::optional<ObjectId> fresh;
            if (sig->allocates) {
                std::string label = "heap@" + fn_.name + ":" + std::to_string(index);
                if (auto existing = graph_.find_label(label)) {
                    fresh = *existing;
                } else {
                    AbstractObject obj = factory_.make(ObjectKind::HeapSite, label);
                    obj.function = fn_.name;
                    obj.index = index;
                    graph_.add_object(obj);
                    fresh = obj.id;
                }
            }
            auto cs = api_constraints(sig->name, formals, fresh, guard, index);
            out_.insert(out_.end(), cs.begin(), cs.end());
            return;
        }
        const FunctionDecl *callee = program_.find_function(call.callee);
        if (!callee) {
            throw UnknownCallee(fn_.name + " calls undeclared function '" + call.callee + "'");
        }
        auto it = summaries_.find(call.callee);
        if (it == summaries_.end()) {
            throw MissingSummary(fn_.name + " calls '" + call.callee + "' which has no summary");
        }
        CallSite site;
        site.caller = fn_.name;
        site.index = index;
        site.args = call.args;
        site.guard = guard;
        if (dst) {
            site.dst = dst->root;
        }
        auto cs = summary_constraints(*callee, it->second, site, graph_, factory_, program_, decode_);
        out_.insert(out_.end(), cs.begin(), cs.end());
    }

    const FunctionDecl &fn_;
    const Program &program_;
    TypeEnv env_;
    PointsToGraph &graph_;
    const std::map<std::string, FunctionSummary> &summaries_;
    ObjectFactory &factory_;
    const SummaryDecoder &decode_;
    std::vector<Constraint> out_;
};

} // namespace

SolveResult solve_function_detailed(const FunctionDecl &fn, const Program &program, const PointsToGraph &init,
                                    const std::map<std::string, FunctionSummary> &summaries,
                                    ObjectFactory &factory, const SolveOptions &options) {
    SolveResult result;
    result.graph = init;
    prepare_graph(result.graph, fn, program, factory);
    result.initial = result.graph;
    ConstraintBuilder builder(fn, program, result.graph, summaries, factory, options.decode);
    auto constraints = builder.build();
    ConstraintSolver solver(result.graph, program, factory, options);
    solver.add(constraints);
    solver.solve();
    std::set<Diagnostic> freed;
    for (const auto &c : solver.constraints()) {
        if (c.kind != Constraint::Kind::Free) {
            continue;
        }
        for (ObjectId o : solver.eval(c.lhs)) {
            freed.insert({"freed", fn.name,
                          result.graph.object(o).label + " freed at " + fn.name + ":" + std::to_string(c.index)});
        }
    }
    result.diagnostics.assign(freed.begin(), freed.end());
    result.guards = solver.guards();
    result.materialized = solver.materialized();
    return result;
}

PointsToGraph solve_function(const FunctionDecl &fn, const Program &program, const PointsToGraph &init,
                             const std::map<std::string, FunctionSummary> &summaries, ObjectFactory &factory,
                             const SolveOptions &options) {
    return solve_function_detailed(fn, program, init, summaries, factory, options).graph;
}

} // namespace lmpa
