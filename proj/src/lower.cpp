#include "lmpa/lower.hpp"

#include "lmpa/error.hpp"
#include "lmpa/sysapi.hpp"

namespace lmpa {

TypeEnv::TypeEnv(const Program &program, const FunctionDecl &fn) : program_(&program) {
    for (const auto &p : fn.params) {
        locals_.emplace(p.name, p.type);
    }
    for (const auto &t : fn.temps) {
        locals_.emplace(t.name, t.type);
    }
    for_each_stmt(fn.body, [&](const Stmt &s) {
        if (const auto *d = std::get_if<Decl>(&s.node)) {
            locals_.emplace(d->name, d->type);
        }
    });
}

std::optional<Type> TypeEnv::lookup(const std::string &name) const {
    if (auto it = locals_.find(name); it != locals_.end()) {
        return it->second;
    }
    if (const auto *g = program_->find_global(name)) {
        return g->type;
    }
    return std::nullopt;
}

bool TypeEnv::is_global(const std::string &name) const {
    return !locals_.count(name) && program_->find_global(name);
}

Type TypeEnv::type_of(const Access &access) const {
    auto root = lookup(access.root);
    if (!root) {
        throw TypeError("unknown variable '" + access.root + "'");
    }
    Type t = *root;
    for (const auto &sel : access.path) {
        if (!t.is_pointer()) {
            throw TypeError("cannot dereference '" + access.root + "' of non-pointer type " + to_string(t));
        }
        if (sel.kind == Selector::Kind::Deref) {
            t = t.pointee();
            continue;
        }
        auto ft = field_type(*program_, t.pointee(), sel.field);
        if (!ft) {
            throw TypeError("unknown field '" + sel.field + "' of " + to_string(t.pointee()));
        }
        t = *ft;
    }
    return t;
}

Type call_result_type(const Program &program, const std::string &callee) {
    if (const auto *fn = program.find_function(callee)) {
        return fn->return_type;
    }
    if (is_modeled_api(callee)) {
        return Type::ptr(Type::void_type());
    }
    return Type::int_type();
}

namespace {

class Lowerer {
public:
    Lowerer(const Program &program, FunctionDecl &fn) : prog_(program), fn_(fn), env_(program, fn) {
        for (const auto &t : fn.temps) {
            if (t.name.size() > 2 && t.name.rfind("%t", 0) == 0) {
                next_ = std::max(next_, std::stoi(t.name.substr(2)) + 1);
            }
        }
    }

    std::vector<Stmt> body(const std::vector<Stmt> &in) {
        std::vector<Stmt> out;
        for (const auto &s : in) {
            stmt(s, out);
        }
        return out;
    }

private:
    std::string fresh(const Type &type, const Pos &) {
        std::string name = "%t" + std::to_string(next_++);
        fn_.temps.push_back(Decl{name, type});
        temp_types_.emplace(name, type);
        return name;
    }

    Type type_of(const Access &a) const {
        auto it = temp_types_.find(a.root);
        if (it == temp_types_.end()) {
            return env_.type_of(a);
        }
        Type t = it->second;
        for (const auto &sel : a.path) {
            t = sel.kind == Selector::Kind::Deref ? t.pointee() : *field_type(prog_, t.pointee(), sel.field);
        }
        return t;
    }

    // Reduces an access chain to at most `keep` selectors by loading the
    // prefix through temporaries.
    Access shorten(Access a, std::size_t keep, const Pos &pos, std::vector<Stmt> &out) {
        while (a.path.size() > keep) {
            Access prefix{a.root, {a.path.front()}, a.pos};
            std::string t = fresh(type_of(prefix), pos);
            emit(Assign{Access{t, {}, a.pos}, prefix}, pos, out);
            a.root = t;
            a.path.erase(a.path.begin());
        }
        return a;
    }

    Operand flat_operand(const Operand &op, const Pos &pos, std::vector<Stmt> &out) {
        if (const auto *a = std::get_if<Access>(&op); a && a->depth() > 0) {
            Access reduced = shorten(*a, 1, pos, out);
            std::string t = fresh(type_of(reduced), pos);
            emit(Assign{Access{t, {}, a->pos}, reduced}, pos, out);
            return Access{t, {}, a->pos};
        }
        return op;
    }

    CallExpr flat_call(const CallExpr &call, const Pos &pos, std::vector<Stmt> &out) {
        CallExpr c = call;
        for (auto &arg : c.args) {
            arg = flat_operand(arg, pos, out);
        }
        return c;
    }

    void emit(Stmt::Node node, const Pos &pos, std::vector<Stmt> &out) {
        Stmt s;
        s.node = std::move(node);
        s.pos = pos;
        out.push_back(std::move(s));
    }

    void stmt(const Stmt &s, std::vector<Stmt> &out) {
        const Pos &pos = s.pos;
        if (classify(s) != StmtKind::Compound) {
            if (const auto *branch = std::get_if<If>(&s.node)) {
                If copy = *branch;
                copy.then_body = body(branch->then_body);
                copy.else_body = body(branch->else_body);
                emit(std::move(copy), pos, out);
            } else {
                out.push_back(s);
            }
            return;
        }
        if (const auto *call = std::get_if<CallStmt>(&s.node)) {
            emit(CallStmt{flat_call(call->call, pos, out)}, pos, out);
            return;
        }
        if (const auto *ret = std::get_if<Return>(&s.node)) {
            emit(Return{flat_operand(*ret->value, pos, out)}, pos, out);
            return;
        }
        const auto &assign = std::get<Assign>(s.node);
        if (const auto *call = std::get_if<CallExpr>(&assign.src)) {
            CallExpr c = flat_call(*call, pos, out);
            if (assign.dst.depth() == 0) {
                emit(Assign{assign.dst, c}, pos, out);
                return;
            }
            std::string t = fresh(call_result_type(prog_, c.callee), pos);
            emit(Assign{Access{t, {}, assign.dst.pos}, c}, pos, out);
            Access dst = shorten(assign.dst, 1, pos, out);
            emit(Assign{dst, Access{t, {}, assign.dst.pos}}, pos, out);
            return;
        }
        // Source first, then destination.
        Expr src = assign.src;
        if (const auto *a = std::get_if<Access>(&assign.src)) {
            Access reduced = shorten(*a, 1, pos, out);
            if (assign.dst.depth() > 0 && reduced.depth() > 0) {
                std::string t = fresh(type_of(reduced), pos);
                emit(Assign{Access{t, {}, a->pos}, reduced}, pos, out);
                reduced = Access{t, {}, a->pos};
            }
            src = reduced;
        } else if (const auto *addr = std::get_if<AddressOf>(&assign.src); addr && assign.dst.depth() > 0) {
            auto target = env_.lookup(addr->name);
            std::string t = fresh(Type::ptr(target ? *target : Type::void_type()), pos);
            emit(Assign{Access{t, {}, addr->pos}, *addr}, pos, out);
            src = Access{t, {}, addr->pos};
        }
        Access dst = shorten(assign.dst, 1, pos, out);
        emit(Assign{dst, src}, pos, out);
    }

    const Program &prog_;
    FunctionDecl &fn_;
    TypeEnv env_;
    std::map<std::string, Type> temp_types_;
    int next_ = 0;
};

void number(std::vector<Stmt> &body, int &counter) {
    for (auto &s : body) {
        s.index = counter++;
        if (auto *branch = std::get_if<If>(&s.node)) {
            number(branch->then_body, counter);
            number(branch->else_body, counter);
        }
    }
}

} // namespace

Program lower_to_ir(const Program &program) {
    Program out = program;
    for (auto &fn : out.functions) {
        Lowerer lowerer(program, fn);
        fn.body = lowerer.body(fn.body);
        int counter = 0;
        number(fn.body, counter);
    }
    return out;
}

bool is_lowered(const Program &program) {
    for (const auto &fn : program.functions) {
        bool ok = true;
        for_each_stmt(fn.body, [&](const Stmt &s) { ok = ok && classify(s) != StmtKind::Compound; });
        if (!ok) {
            return false;
        }
    }
    return true;
}

} // namespace lmpa
