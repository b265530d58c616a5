#pragma once

#include "lmpa/ast.hpp"
#include "lmpa/generator.hpp"
#include "lmpa/lower.hpp"
#include "lmpa/parser.hpp"
#include "lmpa/points_to.hpp"
#include "lmpa/solver.hpp"
#include "lmpa/summary_ir.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>

namespace lmpa::test {

using Facts = std::set<std::pair<std::string, std::string>>;

inline std::string source_dir() { return LMPA_SOURCE_DIR; }
inline std::string corpus(const std::string &rel) { return source_dir() + "/corpus/" + rel; }

inline std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Program lowered(const std::string &source) { return lower_to_ir(parse_module(source)); }

inline std::size_t statement_count(const FunctionDecl &fn) {
    std::size_t n = 0;
    for_each_stmt(fn.body, [&](const Stmt &) { ++n; });
    return n;
}

/// Naive saturation of one intra-procedural function: every statement is
/// re-applied until nothing changes. Calls other than malloc are not
/// supported. Objects are named by label, with the same conventions as the
/// solver: `heap@F:i`, `stack@F:x` and the global's own name for its
/// storage. `seed` maps variable names to initial targets; `seed_fields`
/// maps "label.field" to initial targets.
class BruteForce {
public:
    BruteForce(const FunctionDecl &fn, const Program &program) : fn_(fn) {
        for (const auto &g : program.globals) {
            cells_[g.name] = g.name;
        }
        auto visit = [&](const auto &operand) {
            if (const auto *addr = std::get_if<AddressOf>(&operand)) {
                if (!cells_.count(addr->name)) {
                    cells_[addr->name] = "stack@" + fn.name + ":" + addr->name;
                }
            }
        };
        for_each_stmt(fn.body, [&](const Stmt &stmt) {
            if (const auto *a = std::get_if<Assign>(&stmt.node)) {
                visit(a->src);
            } else if (const auto *r = std::get_if<Return>(&stmt.node)) {
                if (r->value) {
                    visit(*r->value);
                }
            }
        });
    }

    void seed(const std::string &var, const std::string &label) { pts_[value_key(var)].insert(label); }
    void seed_field(const std::string &key, const std::string &label) { pts_[key].insert(label); }

    Facts run() {
        bool changed = true;
        while (changed) {
            changed = false;
            for_each_stmt(fn_.body, [&](const Stmt &stmt) { changed |= apply(stmt); });
        }
        Facts out;
        for (const auto &[key, set] : pts_) {
            for (const auto &label : set) {
                out.emplace(key, label);
            }
        }
        return out;
    }

private:
    std::string value_key(const std::string &var) const {
        auto it = cells_.find(var);
        return it == cells_.end() ? var : it->second + "." + kDerefField;
    }

    std::set<std::string> lookup(const std::string &key) const {
        auto it = pts_.find(key);
        return it == pts_.end() ? std::set<std::string>{} : it->second;
    }

    std::set<std::string> follow(const std::set<std::string> &objs, const Selector &sel) const {
        std::set<std::string> out;
        for (const auto &o : objs) {
            auto s = lookup(o + "." + sel.slot());
            out.insert(s.begin(), s.end());
        }
        return out;
    }

    std::set<std::string> rvalue(const Access &a) const {
        auto s = lookup(value_key(a.root));
        for (const auto &sel : a.path) {
            s = follow(s, sel);
        }
        return s;
    }

    std::set<std::string> lvalues(const Access &a) const {
        if (a.path.empty()) {
            return {value_key(a.root)};
        }
        auto s = lookup(value_key(a.root));
        for (std::size_t i = 0; i + 1 < a.path.size(); ++i) {
            s = follow(s, a.path[i]);
        }
        std::set<std::string> out;
        for (const auto &o : s) {
            out.insert(o + "." + a.path.back().slot());
        }
        return out;
    }

    std::set<std::string> operand(const Operand &op) const {
        if (const auto *a = std::get_if<Access>(&op)) {
            return rvalue(*a);
        }
        if (const auto *addr = std::get_if<AddressOf>(&op)) {
            return {cells_.at(addr->name)};
        }
        return {};
    }

    bool add(const std::set<std::string> &dsts, const std::set<std::string> &srcs) {
        bool changed = false;
        for (const auto &d : dsts) {
            for (const auto &s : srcs) {
                changed |= pts_[d].insert(s).second;
            }
        }
        return changed;
    }

    bool apply(const Stmt &stmt) {
        if (const auto *a = std::get_if<Assign>(&stmt.node)) {
            std::set<std::string> src;
            if (const auto *call = std::get_if<CallExpr>(&a->src)) {
                if (call->callee == "malloc") {
                    src = {"heap@" + fn_.name + ":" + std::to_string(stmt.index)};
                }
            } else if (const auto *acc = std::get_if<Access>(&a->src)) {
                src = rvalue(*acc);
            } else if (const auto *addr = std::get_if<AddressOf>(&a->src)) {
                src = {cells_.at(addr->name)};
            }
            return add(lvalues(a->dst), src);
        }
        if (const auto *r = std::get_if<Return>(&stmt.node)) {
            return r->value && add({kRetNode}, operand(*r->value));
        }
        return false;
    }

    const FunctionDecl &fn_;
    std::map<std::string, std::string> cells_;
    std::map<std::string, std::set<std::string>> pts_;
};

namespace detail {

inline void collect_tags(const std::vector<SummaryOp> &ops, std::vector<std::string> &out) {
    auto add = [&](const AccessPath &p) {
        if (p.base.kind == PathBase::Kind::Fresh && std::find(out.begin(), out.end(), p.base.name) == out.end()) {
            out.push_back(p.base.name);
        }
    };
    for (const auto &op : ops) {
        add(op.dst);
        if (op.src) {
            add(*op.src);
        }
    }
}

/// The op with fresh tags renamed; nullopt while some tag is unmapped.
inline std::optional<SummaryOp> renamed(SummaryOp op, const std::map<std::string, std::string> &m) {
    auto fix = [&](AccessPath &p) {
        if (p.base.kind != PathBase::Kind::Fresh) {
            return true;
        }
        auto it = m.find(p.base.name);
        if (it == m.end()) {
            return false;
        }
        p.base.name = it->second;
        return true;
    };
    if (!fix(op.dst) || (op.src && !fix(*op.src))) {
        return std::nullopt;
    }
    return op;
}

inline bool search(const std::vector<SummaryOp> &a, const std::set<SummaryOp> &b, const std::vector<std::string> &from,
                   const std::vector<std::string> &to, std::size_t k, std::map<std::string, std::string> &m,
                   std::set<std::string> &used) {
    for (const auto &op : a) {
        auto r = renamed(op, m);
        if (r && !b.count(*r)) {
            return false;
        }
    }
    if (k == from.size()) {
        return true;
    }
    for (const auto &t : to) {
        if (used.count(t)) {
            continue;
        }
        m[from[k]] = t;
        used.insert(t);
        if (search(a, b, from, to, k + 1, m, used)) {
            return true;
        }
        used.erase(t);
        m.erase(from[k]);
    }
    return false;
}

} // namespace detail

/// True when some injective renaming of the fresh tags of `a` maps every op
/// of `a` onto an op of `b`.
inline bool subsumed_modulo_fresh(const std::vector<SummaryOp> &a, const std::vector<SummaryOp> &b) {
    std::vector<std::string> from, to;
    detail::collect_tags(a, from);
    detail::collect_tags(b, to);
    std::map<std::string, std::string> m;
    std::set<std::string> used;
    return detail::search(a, std::set<SummaryOp>(b.begin(), b.end()), from, to, 0, m, used);
}

/// Equality of op sets up to op order and a bijective renaming of fresh tags.
inline bool equal_modulo_fresh(const std::vector<SummaryOp> &a, const std::vector<SummaryOp> &b) {
    std::set<SummaryOp> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa.size() != sb.size()) {
        return false;
    }
    std::vector<std::string> ta, tb;
    detail::collect_tags(a, ta);
    detail::collect_tags(b, tb);
    return ta.size() == tb.size() && subsumed_modulo_fresh(a, b);
}

/// Each parameter points to `in:<p>`, whose `f` field points to `in:<p>.f`.
inline PointsToGraph seeded(const FunctionDecl &fn, ObjectFactory &factory) {
    PointsToGraph init;
    init.function = fn.name;
    for (const auto &p : fn.params) {
        AbstractObject root = factory.make(ObjectKind::HeapSite, "in:" + p.name);
        AbstractObject inner = factory.make(ObjectKind::HeapSite, "in:" + p.name + ".f");
        init.add_object(root);
        init.add_object(inner);
        init.var_pts[p.name].insert(root.id);
        init.field_pts[{root.id, "f"}].insert(inner.id);
    }
    return init;
}

inline Facts brute_force(const FunctionDecl &fn, const Program &program) {
    BruteForce bf(fn, program);
    for (const auto &p : fn.params) {
        bf.seed(p.name, "in:" + p.name);
        bf.seed_field("in:" + p.name + ".f", "in:" + p.name + ".f");
    }
    return bf.run();
}

inline Facts solve(const FunctionDecl &fn, const Program &program, SolveOptions options = {}) {
    ObjectFactory factory;
    auto init = seeded(fn, factory);
    return solve_function(fn, program, init, {}, factory, options).facts();
}

/// First function of each generated program; it never calls anything.
inline std::vector<Program> intra_programs(int count) {
    std::vector<Program> out;
    for (const auto &g : generate_corpus(count, 7)) {
        Program p = lowered(g.source);
        p.functions.resize(1);
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace lmpa::test
