#include "lmpa/summary.hpp"

#include "lmpa/error.hpp"
#include "lmpa/parser.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

namespace lmpa {

using nlohmann::json;

namespace {

AccessPath object_path(const AbstractObject &obj) {
    if (obj.is_virtual() || obj.kind == ObjectKind::GlobalSite) {
        return AccessPath::parse(obj.path);
    }
    return AccessPath(PathBase::fresh(obj.label));
}

bool is_ret(const AccessPath &path) { return path.base.kind == PathBase::Kind::Ret && path.selectors.empty(); }

struct Effect {
    AccessPath dst;
    AccessPath src;
    std::string cond;

    auto key() const { return std::make_tuple(!is_ret(dst), dst, src, cond); }
    bool operator<(const Effect &other) const { return key() < other.key(); }
};

/// Orders effects with `ret` first and assigns op kinds: the first effect
/// of each fresh tag allocates it.
std::vector<SummaryOp> to_ops(std::vector<Effect> effects) {
    std::sort(effects.begin(), effects.end());
    effects.erase(std::unique(effects.begin(), effects.end(),
                              [](const Effect &a, const Effect &b) { return a.key() == b.key(); }),
                  effects.end());
    std::set<std::string> allocated;
    std::vector<SummaryOp> ops;
    for (auto &e : effects) {
        SummaryOp op;
        if (e.src.is_fresh() && e.src.selectors.empty() && allocated.insert(e.src.base.name).second) {
            op.op = OpKind::Alloc;
        } else if (is_ret(e.dst)) {
            op.op = OpKind::Return;
        } else if (e.dst.selectors.empty()) {
            op.op = OpKind::Copy;
        } else {
            op.op = OpKind::Store;
        }
        op.dst = std::move(e.dst);
        op.src = std::move(e.src);
        if (!e.cond.empty()) {
            op.cond = e.cond;
        }
        ops.push_back(std::move(op));
    }
    return ops;
}

} // namespace

RawSummary extract_raw_summary(const FunctionDecl &fn, const SolveResult &solved) {
    (void)fn;
    const PointsToGraph &g = solved.graph;
    auto guard_of = [&](const Node &node, ObjectId o) -> std::string {
        auto it = solved.guards.find(node);
        if (it == solved.guards.end()) {
            return {};
        }
        auto jt = it->second.find(o);
        return jt == it->second.end() ? std::string() : jt->second;
    };

    std::set<ObjectId> reachable;
    std::deque<ObjectId> queue;
    auto reach = [&](ObjectId o) {
        if (reachable.insert(o).second) {
            queue.push_back(o);
        }
    };
    for (ObjectId o : g.pts(Node::var(kRetNode))) {
        reach(o);
    }
    for (const auto &[id, obj] : g.objects) {
        if (obj.is_virtual() || obj.kind == ObjectKind::GlobalSite) {
            reach(id);
        }
    }
    while (!queue.empty()) {
        ObjectId o = queue.front();
        queue.pop_front();
        for (auto it = g.field_pts.lower_bound({o, std::string()}); it != g.field_pts.end() && it->first.first == o;
             ++it) {
            for (ObjectId t : it->second) {
                reach(t);
            }
        }
    }

    std::vector<Effect> effects;
    Node ret = Node::var(kRetNode);
    for (ObjectId o : g.pts(ret)) {
        effects.push_back({AccessPath(PathBase::ret()), object_path(g.object(o)), guard_of(ret, o)});
    }
    for (ObjectId base : reachable) {
        AccessPath base_path = object_path(g.object(base));
        for (auto it = g.field_pts.lower_bound({base, std::string()});
             it != g.field_pts.end() && it->first.first == base; ++it) {
            Node node = Node::field(base, it->first.second);
            const ObjSet &before = solved.initial.pts(node);
            for (ObjectId o : it->second) {
                const AbstractObject &target = g.object(o);
                bool seeded = target.kind == ObjectKind::VirtualField && target.parent == base &&
                              target.field == it->first.second;
                if (before.count(o) || seeded) {
                    continue;
                }
                effects.push_back({base_path.child(it->first.second), object_path(target), guard_of(node, o)});
            }
        }
    }
    RawSummary raw;
    raw.ops = to_ops(std::move(effects));
    std::set<std::string> conditions;
    for (const auto &op : raw.ops) {
        if (op.cond) {
            conditions.insert(*op.cond);
        }
    }
    raw.conditions.assign(conditions.begin(), conditions.end());
    return raw;
}

namespace {

void pointer_slots(const Program &program, const AccessPath &path, const Type &pointer, std::set<std::string> seen,
                   std::size_t depth, std::vector<AccessPath> &out) {
    if (depth == 0 || !pointer.is_pointer()) {
        return;
    }
    const Type &object = pointer.pointee();
    if (object.kind == Type::Kind::Record) {
        if (!seen.insert(object.record).second) {
            return;
        }
    }
    std::vector<std::pair<std::string, Type>> slots;
    if (object.is_pointer()) {
        slots.emplace_back(kDerefField, object);
    }
    for (const auto &f : declared_fields(program, object)) {
        if (auto t = field_type(program, object, f); t && t->is_pointer()) {
            slots.emplace_back(f, *t);
        }
    }
    for (const auto &[slot, type] : slots) {
        AccessPath child = path.child(slot);
        out.push_back(child);
        pointer_slots(program, child, type, seen, depth - 1, out);
    }
}

} // namespace

ConservativeSummary conservative_summary(const FunctionDecl &fn, const Program &program) {
    std::vector<AccessPath> sources;
    std::vector<AccessPath> dsts;
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
        if (fn.params[i].type.is_pointer()) {
            AccessPath p(PathBase::param(static_cast<int>(i)));
            sources.push_back(p);
            pointer_slots(program, p, fn.params[i].type, {}, 3, dsts);
        }
    }
    for (const auto &g : program.globals) {
        if (g.type.is_pointer()) {
            sources.push_back(AccessPath(PathBase::global(g.name)));
            dsts.push_back(AccessPath(PathBase::global(g.name)));
        }
    }
    sources.push_back(AccessPath(PathBase::fresh("heap@" + fn.name + ":conservative")));
    if (fn.return_type.is_pointer()) {
        dsts.push_back(AccessPath(PathBase::ret()));
    }
    std::vector<Effect> effects;
    for (const auto &dst : dsts) {
        for (const auto &src : sources) {
            if (dst != src) {
                effects.push_back({dst, src, {}});
            }
        }
    }
    return {to_ops(std::move(effects))};
}

namespace {

void note(std::vector<Diagnostic> *diagnostics, std::string kind, const std::string &function, std::string message) {
    if (diagnostics) {
        diagnostics->push_back({std::move(kind), function, std::move(message)});
    }
}

} // namespace

NLSummary encode_summary(const RawSummary &raw, const FunctionDecl &fn, const Program &program, Gateway &gateway,
                         std::vector<Diagnostic> *diagnostics) {
    (void)program;
    NLSummary nl{render_ops_text(raw.ops), raw.conditions, raw};
    if (!gateway.enabled()) {
        return nl;
    }
    LLMQuery q{QueryKind::SummaryEncode, fn.name,
               {{"source", print_function(fn)}, {"raw_ops", ops_to_json(raw.ops)}, {"conditions", raw.conditions}}};
    auto check = [&](const json &doc) -> std::string {
        std::set<std::string> got;
        for (const auto &c : doc["conditions"]) {
            got.insert(c.get<std::string>());
        }
        for (const auto &c : raw.conditions) {
            if (!got.count(c)) {
                return "conditions must include \"" + c + "\"";
            }
        }
        return {};
    };
    try {
        LLMResponse r = gateway.self_validate(q, gateway.query(q), check);
        if (r.rejected) {
            note(diagnostics, "llm_fallback", fn.name, "summary_encode answer rejected; using template text");
            return nl;
        }
        nl.text = r.document["text"].get<std::string>();
        nl.conditions = r.document["conditions"].get<std::vector<std::string>>();
    } catch (const Error &e) {
        note(diagnostics, "llm_fallback", fn.name, std::string("summary_encode failed: ") + e.what());
    }
    return nl;
}

namespace {

/// Injective renaming of decoded fresh tags onto superset tags.
struct Renaming {
    std::map<std::string, std::string> forward;
    std::set<std::string> taken;

    bool unify(const AccessPath &decoded, const AccessPath &superset) {
        if (decoded.base.kind != superset.base.kind || decoded.selectors != superset.selectors) {
            return false;
        }
        if (!decoded.is_fresh()) {
            return decoded.base == superset.base;
        }
        auto it = forward.find(decoded.base.name);
        if (it != forward.end()) {
            return it->second == superset.base.name;
        }
        if (taken.count(superset.base.name)) {
            return false;
        }
        forward[decoded.base.name] = superset.base.name;
        taken.insert(superset.base.name);
        return true;
    }

    bool unify(const SummaryOp &decoded, const SummaryOp &superset) {
        if (decoded.op != superset.op || !unify(decoded.dst, superset.dst)) {
            return false;
        }
        if (!decoded.src || !superset.src) {
            return !decoded.src && !superset.src;
        }
        return unify(*decoded.src, *superset.src);
    }
};

std::string op_text(const SummaryOp &op) { return render_ops_text({op}); }

} // namespace

ClampResult validate_decoded(const std::vector<SummaryOp> &ops, const RawSummary &superset,
                             const FunctionDecl &signature, const Program &program) {
    ClampResult result;
    const std::vector<SummaryOp> allowed = superset.superset();
    std::vector<bool> matched(allowed.size(), false);
    Renaming renaming;
    std::vector<SummaryOp> kills;
    auto drop = [&](const SummaryOp &op, const std::string &why) {
        result.diagnostics.push_back({"clamp_drop", signature.name, "dropped \"" + op_text(op) + "\": " + why});
    };

    for (const auto &op : ops) {
        std::string bad = check_path(program, signature, op.dst);
        if (bad.empty() && op.src) {
            bad = check_path(program, signature, *op.src);
        }
        if (!bad.empty()) {
            drop(op, bad);
            continue;
        }
        if (op.op == OpKind::Kill) {
            kills.push_back(op);
            continue;
        }
        std::optional<std::size_t> hit;
        for (int pass = 0; pass < 2 && !hit; ++pass) {
            for (std::size_t j = 0; j < allowed.size(); ++j) {
                if (pass == 0 && matched[j]) {
                    continue;
                }
                Renaming trial = renaming;
                if (trial.unify(op, allowed[j])) {
                    renaming = std::move(trial);
                    hit = j;
                    break;
                }
            }
        }
        if (!hit) {
            drop(op, "not subsumed by the superset");
            continue;
        }
        matched[*hit] = true;
        SummaryOp kept = allowed[*hit];
        kept.cond = op.cond;
        result.ops.push_back(std::move(kept));
    }

    std::vector<SummaryOp> kept_kills;
    for (const auto &kill : kills) {
        bool ok = false;
        for (const auto &candidate : allowed) {
            Renaming trial = renaming;
            if (trial.unify(kill.dst, candidate.dst) &&
                (!kill.src || trial.unify(*kill.src, *candidate.src))) {
                SummaryOp kept = kill;
                kept.dst = candidate.dst;
                if (kill.src) {
                    kept.src = candidate.src;
                }
                renaming = std::move(trial);
                kept_kills.push_back(std::move(kept));
                ok = true;
                break;
            }
        }
        if (!ok) {
            drop(kill, "kill target is not a superset destination");
        }
    }
    result.ops.insert(result.ops.end(), kept_kills.begin(), kept_kills.end());

    for (std::size_t j = 0; j < allowed.size(); ++j) {
        if (matched[j]) {
            continue;
        }
        bool killed = std::any_of(kept_kills.begin(), kept_kills.end(), [&](const SummaryOp &k) {
            return k.dst == allowed[j].dst && (!k.src || k.src == allowed[j].src);
        });
        if (!killed) {
            result.diagnostics.push_back(
                {"missing_fact", signature.name, "possible missing fact: " + op_text(allowed[j])});
        }
    }
    return result;
}

std::vector<SummaryOp> decode_summary(const NLSummary &nl, const FunctionDecl &callee, const Program &program,
                                      Gateway &gateway, std::vector<Diagnostic> *diagnostics) {
    if (!gateway.enabled()) {
        return nl.raw.ops;
    }
    LLMQuery q{QueryKind::SummaryDecode, callee.name,
               {{"text", nl.text}, {"conditions", nl.conditions}, {"callee_signature", print_signature(callee)}}};
    auto check = [](const json &doc) -> std::string {
        try {
            ops_from_json(doc["ops"]);
        } catch (const Error &e) {
            return e.what();
        }
        return {};
    };
    std::vector<SummaryOp> decoded;
    try {
        LLMResponse r = gateway.self_validate(q, gateway.query(q), check);
        if (r.rejected) {
            note(diagnostics, "llm_fallback", callee.name, "summary_decode answer rejected; using raw ops");
            return nl.raw.ops;
        }
        decoded = ops_from_json(r.document["ops"]);
    } catch (const Error &e) {
        note(diagnostics, "llm_fallback", callee.name, std::string("summary_decode failed: ") + e.what());
        return nl.raw.ops;
    }
    ClampResult clamped = validate_decoded(decoded, nl.raw, callee, program);
    if (diagnostics) {
        diagnostics->insert(diagnostics->end(), clamped.diagnostics.begin(), clamped.diagnostics.end());
    }
    for (const auto &kill : nl.raw.kills()) {
        if (std::find(clamped.ops.begin(), clamped.ops.end(), kill) == clamped.ops.end()) {
            clamped.ops.push_back(kill);
        }
    }
    return clamped.ops;
}

RawSummary refine_with_kill(const RawSummary &raw, const FunctionDecl &fn, const Program &program, Gateway &gateway,
                            std::vector<Diagnostic> *diagnostics) {
    (void)program;
    if (!gateway.enabled()) {
        return raw;
    }
    LLMQuery q{QueryKind::SummaryRefine, fn.name, {{"source", print_function(fn)}, {"raw_ops", ops_to_json(raw.ops)}}};
    auto check = [](const json &doc) -> std::string {
        try {
            ops_from_json(doc["kills"]);
        } catch (const Error &e) {
            return e.what();
        }
        return {};
    };
    std::vector<SummaryOp> kills;
    try {
        LLMResponse r = gateway.self_validate(q, gateway.query(q), check);
        if (r.rejected) {
            note(diagnostics, "llm_fallback", fn.name, "summary_refine answer rejected; no kills added");
            return raw;
        }
        kills = ops_from_json(r.document["kills"]);
    } catch (const Error &e) {
        note(diagnostics, "llm_fallback", fn.name, std::string("summary_refine failed: ") + e.what());
        return raw;
    }
    RawSummary refined = raw;
    for (const auto &kill : kills) {
        bool known = std::any_of(raw.ops.begin(), raw.ops.end(),
                                 [&](const SummaryOp &op) { return op.op != OpKind::Kill && op.dst == kill.dst; });
        if (!known) {
            note(diagnostics, "kill_dropped", fn.name,
                 "kill of " + kill.dst.str() + " dropped: no summary op writes that destination");
            continue;
        }
        if (std::find(refined.ops.begin(), refined.ops.end(), kill) == refined.ops.end()) {
            refined.ops.push_back(kill);
        }
    }
    return refined;
}

PointsToGraph apply_summary_at_callsite(const FunctionDecl &callee, const FunctionSummary &summary,
                                        const CallSite &site, const PointsToGraph &graph, ObjectFactory &factory,
                                        const Program &program) {
    PointsToGraph work = graph;
    auto constraints = summary_constraints(callee, summary, site, work, factory, program);
    ConstraintSolver solver(work, program, factory, SolveOptions{});
    solver.add(constraints);
    solver.solve();
    return graph_delta(graph, work);
}

} // namespace lmpa
