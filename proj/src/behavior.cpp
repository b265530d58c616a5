#include "lmpa/behavior.hpp"

#include "lmpa/error.hpp"
#include "lmpa/parser.hpp"
#include "lmpa/sysapi.hpp"

#include <algorithm>
#include <map>

namespace lmpa {

using nlohmann::json;

json BehaviorVerdict::to_json(const std::string &function) const {
    json calls = json::array();
    for (const auto &c : api_list) {
        calls.push_back(c.to_json());
    }
    json out = {{"function", function},
                {"verdict", abstractable ? "abstractable" : "not_abstractable"},
                {"api_list", calls}};
    if (!abstractable) {
        out["reason"] = reason;
    }
    return out;
}

namespace {

constexpr std::size_t kMaxModDepth = 4;

const AccessPath &unknown_base() {
    static const AccessPath top(PathBase::fresh("?"));
    return top;
}

AccessPath extend(const AccessPath &path, const PathSelector &sel) {
    if (path.has_wildcard()) {
        return path;
    }
    if (path.selectors.size() >= kMaxModDepth) {
        return path.with(PathSelector::wildcard());
    }
    return path.with(sel);
}

PathSelector selector_of(const Selector &sel) {
    return sel.kind == Selector::Kind::Deref ? PathSelector::deref() : PathSelector::field_of(sel.field);
}

class ModCollector {
public:
    ModCollector(const FunctionDecl &fn, const Program &program) : fn_(fn), program_(program) {
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            values_[fn.params[i].name].insert(AccessPath(PathBase::param(static_cast<int>(i))));
        }
        for (const auto &g : program.globals) {
            values_[g.name].insert(AccessPath(PathBase::global(g.name)));
        }
    }

    ModSet run() {
        bool changed = true;
        while (changed) {
            changed = false;
            for_each_stmt(fn_.body, [&](const Stmt &stmt) { changed |= flow(stmt); });
        }
        for_each_stmt(fn_.body, [&](const Stmt &stmt) { writes(stmt); });
        for (const auto &path : raw_) {
            for (const auto &external : resolve(path, 0)) {
                record(external);
            }
        }
        return std::move(mod_);
    }

private:
    std::set<AccessPath> value(const Access &access) {
        std::set<AccessPath> current = values_[access.root];
        for (const auto &sel : access.path) {
            std::set<AccessPath> next;
            for (const auto &p : current) {
                next.insert(p == unknown_base() ? p : extend(p, selector_of(sel)));
            }
            current = std::move(next);
        }
        return current;
    }

    bool merge(const std::string &var, const std::set<AccessPath> &more) {
        auto &slot = values_[var];
        std::size_t before = slot.size();
        slot.insert(more.begin(), more.end());
        return slot.size() != before;
    }

    bool flow(const Stmt &stmt) {
        const auto *assign = std::get_if<Assign>(&stmt.node);
        if (!assign || !assign->dst.path.empty()) {
            return false;
        }
        const std::string &dst = assign->dst.root;
        if (program_.find_global(dst)) {
            return false;
        }
        if (const auto *src = std::get_if<Access>(&assign->src)) {
            return merge(dst, value(*src));
        }
        if (const auto *addr = std::get_if<AddressOf>(&assign->src)) {
            if (program_.find_global(addr->name)) {
                return merge(dst, {AccessPath(PathBase::global_addr(addr->name))});
            }
            return false;
        }
        if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
            const ApiSignature *sig = find_api(call->callee);
            if (sig && sig->allocates) {
                return merge(dst, {fresh_of(stmt.index)});
            }
            if (sig) {
                return false;
            }
            return merge(dst, {unknown_base()});
        }
        return false;
    }

    static AccessPath fresh_of(int index) { return AccessPath(PathBase::fresh("alloc" + std::to_string(index))); }

    static bool is_local(const AccessPath &path) { return path.is_fresh() && path.base.name != "?"; }

    /// Caller-visible paths a write may reach. Writes into allocated memory
    /// count where that memory escapes to; memory that never escapes is
    /// private.
    std::set<AccessPath> resolve(const AccessPath &path, int depth) {
        if (!is_local(path)) {
            return {path};
        }
        AccessPath root(path.base);
        auto it = escapes_.find(root);
        if (it == escapes_.end()) {
            return {};
        }
        if (depth > static_cast<int>(kMaxModDepth)) {
            return {unknown_base()};
        }
        std::set<AccessPath> out;
        for (const auto &target : it->second) {
            AccessPath p = target;
            for (const auto &sel : path.selectors) {
                p = p == unknown_base() ? p : extend(p, sel);
            }
            auto more = resolve(p, depth + 1);
            out.insert(more.begin(), more.end());
        }
        return out;
    }

    /// `target` may receive the values of `src`.
    void escape(const std::set<AccessPath> &values, const AccessPath &target) {
        for (const auto &v : values) {
            if (is_local(v) && v.selectors.empty()) {
                escapes_[v].insert(target);
            }
        }
    }

    std::set<AccessPath> operand_values(const Operand &op) {
        if (const auto *access = std::get_if<Access>(&op)) {
            return value(*access);
        }
        return {};
    }

    void write(const AccessPath &path) { raw_.push_back(path); }

    void record(const AccessPath &path) {
        if (path == unknown_base() || (path.is_fresh() && path.base.name == "?")) {
            for (std::size_t i = 0; i < fn_.params.size(); ++i) {
                if (fn_.params[i].type.is_pointer()) {
                    mod_.paths.insert(AccessPath(PathBase::param(static_cast<int>(i)), {PathSelector::wildcard()}));
                }
            }
            return;
        }
        mod_.paths.insert(path);
    }

    void write_through(const Access &access, const std::set<AccessPath> *src) {
        Access base{access.root, {access.path.begin(), access.path.end() - 1}, access.pos};
        for (const auto &p : value(base)) {
            AccessPath target = p == unknown_base() ? p : extend(p, selector_of(access.path.back()));
            write(target);
            if (src) {
                escape(*src, target);
            }
        }
    }

    void write_anywhere(const Operand &arg) {
        if (const auto *access = std::get_if<Access>(&arg)) {
            for (const auto &p : value(*access)) {
                write(p == unknown_base() || p.has_wildcard() ? p : p.with(PathSelector::wildcard()));
            }
        } else if (const auto *addr = std::get_if<AddressOf>(&arg)) {
            if (program_.find_global(addr->name)) {
                write(AccessPath(PathBase::global(addr->name)));
                write(AccessPath(PathBase::global(addr->name), {PathSelector::wildcard()}));
            }
        }
    }

    void call_writes(const CallExpr &call) {
        if (const ApiSignature *sig = find_api(call.callee)) {
            bool writes_dst = call.callee == "memcpy" || call.callee == "memset" || call.callee == "snprintf";
            (void)sig;
            if (writes_dst && !call.args.empty()) {
                write_anywhere(call.args.front());
            }
            return;
        }
        for (const auto &a : call.args) {
            write_anywhere(a);
            escape(operand_values(a), unknown_base());
        }
    }

    void writes(const Stmt &stmt) {
        if (const auto *assign = std::get_if<Assign>(&stmt.node)) {
            std::set<AccessPath> src;
            if (const auto *access = std::get_if<Access>(&assign->src)) {
                src = value(*access);
            } else if (!assign->dst.path.empty() || program_.find_global(assign->dst.root)) {
                src = values_of_rhs(assign->dst, stmt.index, assign->src);
            }
            if (!assign->dst.path.empty()) {
                write_through(assign->dst, &src);
            } else if (program_.find_global(assign->dst.root)) {
                AccessPath g(PathBase::global(assign->dst.root));
                write(g);
                escape(src, g);
            }
            if (const auto *call = std::get_if<CallExpr>(&assign->src)) {
                call_writes(*call);
            }
        } else if (const auto *call = std::get_if<CallStmt>(&stmt.node)) {
            call_writes(call->call);
        } else if (const auto *ret = std::get_if<Return>(&stmt.node)) {
            if (ret->value && !std::holds_alternative<NullLit>(*ret->value) &&
                !std::holds_alternative<IntLit>(*ret->value)) {
                AccessPath r(PathBase::ret());
                write(r);
                escape(operand_values(*ret->value), r);
            }
        }
    }

    /// Values of a non-copy right-hand side stored directly to memory.
    std::set<AccessPath> values_of_rhs(const Access &, int index, const Expr &rhs) {
        if (const auto *call = std::get_if<CallExpr>(&rhs)) {
            const ApiSignature *sig = find_api(call->callee);
            if (sig && sig->allocates) {
                return {fresh_of(index)};
            }
            return sig ? std::set<AccessPath>{} : std::set<AccessPath>{unknown_base()};
        }
        return {};
    }

    const FunctionDecl &fn_;
    const Program &program_;
    std::map<std::string, std::set<AccessPath>> values_;
    std::map<AccessPath, std::set<AccessPath>> escapes_;
    std::vector<AccessPath> raw_;
    ModSet mod_;
};

} // namespace

ModSet compute_mod_set(const FunctionDecl &fn, const Program &program) { return ModCollector(fn, program).run(); }

std::optional<AccessPath> resolve_arg(const FunctionDecl &fn, const std::string &text) {
    try {
        return AccessPath::parse(text);
    } catch (const InvalidPath &) {
    }
    std::size_t stars = 0;
    while (stars < text.size() && text[stars] == '*') {
        ++stars;
    }
    std::string rest = text.substr(stars);
    std::vector<PathSelector> sels(stars, PathSelector::deref());
    std::string root = rest.substr(0, rest.find("->"));
    for (std::size_t pos = rest.find("->"); pos != std::string::npos;) {
        std::size_t next = rest.find("->", pos + 2);
        sels.push_back(PathSelector::field_of(rest.substr(pos + 2, next == std::string::npos ? next : next - pos - 2)));
        pos = next;
    }
    auto index = fn.param_index(root);
    if (!index) {
        return std::nullopt;
    }
    return AccessPath(PathBase::param(static_cast<int>(*index)), std::move(sels));
}

std::vector<AccessPath> verify_side_effects(const FunctionDecl &fn, const Program &program,
                                            const std::vector<ApiCall> &proposed) {
    std::vector<AccessPath> covering;
    for (const auto &call : proposed) {
        std::map<std::string, AccessPath> resolved;
        for (const auto &[formal, text] : call.arg_map) {
            if (auto p = resolve_arg(fn, text)) {
                resolved.emplace(formal, *p);
            }
        }
        auto paths = api_mod_paths(call, resolved);
        covering.insert(covering.end(), paths.begin(), paths.end());
    }
    std::vector<AccessPath> offending;
    for (const auto &m : compute_mod_set(fn, program).paths) {
        if (m.base.kind == PathBase::Kind::Global && m.selectors.empty()) {
            const GlobalDecl *g = program.find_global(m.base.name);
            if (g && !g->type.is_pointer()) {
                continue;
            }
        }
        bool covered = std::any_of(covering.begin(), covering.end(),
                                   [&](const AccessPath &c) { return c == m || c.covers(m); });
        if (!covered) {
            offending.push_back(m);
        }
    }
    return offending;
}

BehaviorVerdict classify_behavior(const FunctionDecl &fn, const Program &program, Gateway &gateway,
                                  std::vector<Diagnostic> *diagnostics) {
    if (!gateway.enabled()) {
        return BehaviorVerdict::no("llm disabled");
    }
    auto note = [&](const std::string &message) {
        if (diagnostics) {
            diagnostics->push_back({"llm_fallback", fn.name, message});
        }
    };
    std::vector<std::string> names;
    for (const auto &sig : api_catalog()) {
        names.push_back(sig.name);
    }
    LLMQuery q{QueryKind::BehaviorClassify, fn.name,
               {{"source", print_function(fn)}, {"signature", print_signature(fn)}, {"api_catalog", names}}};
    auto check = [&](const json &doc) -> std::string {
        if (!doc["abstractable"].get<bool>()) {
            return {};
        }
        if (doc["api_list"].empty()) {
            return "api_list must not be empty when abstractable is true";
        }
        for (const auto &entry : doc["api_list"]) {
            std::string problem = check_api_call(ApiCall::from_json(entry));
            if (!problem.empty()) {
                return problem;
            }
        }
        return {};
    };
    LLMResponse r;
    try {
        r = gateway.self_validate(q, gateway.query(q), check);
    } catch (const Error &e) {
        note(std::string("behavior_classify failed: ") + e.what());
        return BehaviorVerdict::no("llm unavailable");
    }
    if (r.rejected) {
        note("behavior_classify answer rejected after " + std::to_string(r.attempts) + " attempts");
        return BehaviorVerdict::no("llm answer rejected");
    }
    if (!r.document["abstractable"].get<bool>()) {
        return BehaviorVerdict::no("model judged not abstractable");
    }
    std::vector<ApiCall> calls;
    for (const auto &entry : r.document["api_list"]) {
        calls.push_back(ApiCall::from_json(entry));
    }
    auto offending = verify_side_effects(fn, program, calls);
    if (!offending.empty()) {
        std::string why = "unmodeled side effect";
        for (const auto &p : offending) {
            why += " " + p.str();
        }
        return BehaviorVerdict::no(why);
    }
    return {true, std::move(calls), {}};
}

} // namespace lmpa
