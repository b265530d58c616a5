#include "lmpa/parser.hpp"

#include "lmpa/error.hpp"
#include "lmpa/lower.hpp"
#include "lmpa/sysapi.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace lmpa {

namespace {

struct Token {
    enum class Kind { Ident, Int, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    Pos pos;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            Pos pos{line_, col_};
            if (at_end()) {
                out.push_back({Token::Kind::End, "", pos});
                return out;
            }
            char c = peek();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '%') {
                std::string text(1, advance());
                while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
                    text += advance();
                }
                if (text == "%") {
                    throw SyntaxError(pos.line, pos.column, "stray '%'");
                }
                out.push_back({Token::Kind::Ident, text, pos});
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                std::string text(1, advance());
                while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                    text += advance();
                }
                out.push_back({Token::Kind::Int, text, pos});
            } else {
                static const char *two[] = {"->", "<=", ">=", "==", "!="};
                std::string text;
                for (const char *t : two) {
                    if (c == t[0] && peek(1) == t[1]) {
                        text = t;
                        break;
                    }
                }
                if (text.empty()) {
                    if (std::string_view("{}();:,<>=&*").find(c) == std::string_view::npos) {
                        throw SyntaxError(pos.line, pos.column, std::string("unexpected character '") + c + "'");
                    }
                    text = std::string(1, c);
                }
                for (std::size_t i = 0; i < text.size(); ++i) {
                    advance();
                }
                out.push_back({Token::Kind::Punct, text, pos});
            }
        }
    }

private:
    bool at_end() const { return i_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const { return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0'; }
    char advance() {
        char c = src_[i_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void skip_space() {
        while (!at_end()) {
            if (std::isspace(static_cast<unsigned char>(peek()))) {
                advance();
            } else if (peek() == '/' && peek(1) == '/') {
                while (!at_end() && peek() != '\n') {
                    advance();
                }
            } else {
                return;
            }
        }
    }

    std::string_view src_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

const std::set<std::string> kKeywords = {"struct", "global", "fn",  "let",  "return", "if",   "else",
                                         "int",    "char",   "void", "ptr", "array",  "null", "ret"};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Program program() {
        Program prog;
        while (!at_end()) {
            if (accept_word("struct")) {
                prog.records.push_back(record());
            } else if (accept_word("global")) {
                GlobalDecl g;
                g.pos = cur().pos;
                g.name = ident("global name");
                expect(":");
                g.type = type();
                expect(";");
                prog.globals.push_back(std::move(g));
            } else if (accept_word("fn")) {
                prog.functions.push_back(function());
            } else {
                fail("expected 'struct', 'global' or 'fn'");
            }
        }
        return prog;
    }

private:
    const Token &cur() const { return toks_[i_]; }
    const Token &next() const { return toks_[std::min(i_ + 1, toks_.size() - 1)]; }
    bool at_end() const { return cur().kind == Token::Kind::End; }

    [[noreturn]] void fail(const std::string &msg) const {
        const auto &t = cur();
        std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
        throw SyntaxError(t.pos.line, t.pos.column, msg + ", found " + found);
    }

    bool is_punct(const char *p) const { return cur().kind == Token::Kind::Punct && cur().text == p; }
    bool is_word(const char *w) const { return cur().kind == Token::Kind::Ident && cur().text == w; }

    bool accept(const char *p) {
        if (is_punct(p)) {
            ++i_;
            return true;
        }
        return false;
    }
    bool accept_word(const char *w) {
        if (is_word(w)) {
            ++i_;
            return true;
        }
        return false;
    }
    void expect(const char *p) {
        if (!accept(p)) {
            fail(std::string("expected '") + p + "'");
        }
    }

    std::string ident(const char *what) {
        if (cur().kind != Token::Kind::Ident || kKeywords.count(cur().text)) {
            fail(std::string("expected ") + what);
        }
        return toks_[i_++].text;
    }

    RecordDecl record() {
        RecordDecl rec;
        rec.pos = cur().pos;
        rec.name = ident("record name");
        expect("{");
        while (!accept("}")) {
            FieldDecl f;
            f.name = ident("field name");
            expect(":");
            f.type = type();
            expect(";");
            rec.fields.push_back(std::move(f));
        }
        return rec;
    }

    Type type() {
        if (accept_word("int")) {
            return Type::int_type();
        }
        if (accept_word("char")) {
            return Type::char_type();
        }
        if (accept_word("void")) {
            return Type::void_type();
        }
        if (accept_word("ptr")) {
            expect("<");
            Type inner = type();
            expect(">");
            return Type::ptr(std::move(inner));
        }
        if (accept_word("array")) {
            expect("<");
            Type inner = type();
            expect(">");
            return Type::array(std::move(inner));
        }
        return Type::named(ident("type"));
    }

    FunctionDecl function() {
        FunctionDecl fn;
        fn.pos = cur().pos;
        fn.name = ident("function name");
        expect("(");
        if (!accept(")")) {
            do {
                Param p;
                p.name = ident("parameter name");
                expect(":");
                p.type = type();
                fn.params.push_back(std::move(p));
            } while (accept(","));
            expect(")");
        }
        expect("->");
        fn.return_type = type();
        fn.body = block();
        return fn;
    }

    std::vector<Stmt> block() {
        expect("{");
        std::vector<Stmt> body;
        while (!accept("}")) {
            if (at_end()) {
                fail("expected '}'");
            }
            body.push_back(statement());
        }
        return body;
    }

    Stmt statement() {
        Stmt stmt;
        stmt.pos = cur().pos;
        if (accept_word("let")) {
            Decl d;
            d.name = ident("variable name");
            expect(":");
            d.type = type();
            expect(";");
            stmt.node = std::move(d);
        } else if (accept_word("return")) {
            Return r;
            if (!accept(";")) {
                r.value = operand();
                expect(";");
            }
            stmt.node = std::move(r);
        } else if (accept_word("if")) {
            If branch;
            expect("(");
            branch.cond = condition();
            expect(")");
            branch.then_body = block();
            if (accept_word("else")) {
                branch.else_body = block();
            }
            stmt.node = std::move(branch);
        } else if (cur().kind == Token::Kind::Ident && next().kind == Token::Kind::Punct && next().text == "(") {
            stmt.node = CallStmt{call()};
            expect(";");
        } else {
            Assign a;
            a.dst = access();
            expect("=");
            a.src = rhs();
            expect(";");
            stmt.node = std::move(a);
        }
        return stmt;
    }

    CallExpr call() {
        CallExpr c;
        c.pos = cur().pos;
        c.callee = ident("callee");
        expect("(");
        if (!accept(")")) {
            do {
                c.args.push_back(operand());
            } while (accept(","));
            expect(")");
        }
        return c;
    }

    Access access() {
        Access a;
        a.pos = cur().pos;
        std::size_t stars = 0;
        while (accept("*")) {
            ++stars;
        }
        a.root = ident("variable");
        if (stars > 0) {
            a.path.assign(stars, Selector::deref());
            return a;
        }
        while (accept("->")) {
            a.path.push_back(Selector::field_of(ident("field name")));
        }
        return a;
    }

    Operand operand() {
        if (is_punct("&")) {
            Pos pos = cur().pos;
            ++i_;
            return AddressOf{ident("variable"), pos};
        }
        if (cur().kind == Token::Kind::Int) {
            return IntLit{std::stoll(toks_[i_++].text)};
        }
        if (accept_word("null")) {
            return NullLit{};
        }
        return access();
    }

    Expr rhs() {
        if (cur().kind == Token::Kind::Ident && next().kind == Token::Kind::Punct && next().text == "(") {
            return call();
        }
        return std::visit([](auto &&v) -> Expr { return std::move(v); }, operand());
    }

    Condition condition() {
        Condition c;
        c.lhs = access();
        static const std::set<std::string> ops = {"<", "<=", ">", ">=", "==", "!="};
        if (cur().kind != Token::Kind::Punct || !ops.count(cur().text)) {
            fail("expected comparison operator");
        }
        c.op = toks_[i_++].text;
        if (cur().kind == Token::Kind::Int) {
            c.rhs = IntLit{std::stoll(toks_[i_++].text)};
        } else if (accept_word("null")) {
            c.rhs = NullLit{};
        } else {
            c.rhs = access();
        }
        return c;
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

// ---------------------------------------------------------------------------
// Semantic checks

class Checker {
public:
    explicit Checker(const Program &program) : prog_(program) {}

    void run() {
        std::set<std::string> names;
        for (const auto &rec : prog_.records) {
            if (!names.insert(rec.name).second) {
                throw DuplicateName("record '" + rec.name + "' redeclared");
            }
        }
        for (const auto &rec : prog_.records) {
            std::set<std::string> fields;
            for (const auto &f : rec.fields) {
                if (!fields.insert(f.name).second) {
                    throw DuplicateName("field '" + f.name + "' redeclared in record '" + rec.name + "'");
                }
                resolve(f.type);
            }
        }
        names.clear();
        for (const auto &g : prog_.globals) {
            if (!names.insert(g.name).second) {
                throw DuplicateName("global '" + g.name + "' redeclared");
            }
            resolve(g.type);
        }
        names.clear();
        for (const auto &fn : prog_.functions) {
            if (!names.insert(fn.name).second) {
                throw DuplicateName("function '" + fn.name + "' redeclared");
            }
            if (is_modeled_api(fn.name)) {
                throw DuplicateName("function '" + fn.name + "' redeclares a modeled system API");
            }
        }
        for (const auto &fn : prog_.functions) {
            check_function(fn);
        }
    }

private:
    void resolve(const Type &t) const {
        if (t.kind == Type::Kind::Record && !prog_.find_record(t.record)) {
            throw TypeError("unknown type '" + t.record + "'");
        }
        if (t.elem) {
            resolve(*t.elem);
        }
    }

    void check_function(const FunctionDecl &fn) {
        std::set<std::string> locals;
        for (const auto &p : fn.params) {
            if (!locals.insert(p.name).second) {
                throw DuplicateName("parameter '" + p.name + "' redeclared in '" + fn.name + "'");
            }
            resolve(p.type);
        }
        resolve(fn.return_type);
        auto declare = [&](const Decl &d) {
            if (!locals.insert(d.name).second) {
                throw DuplicateName("variable '" + d.name + "' redeclared in '" + fn.name + "'");
            }
            resolve(d.type);
        };
        for (const auto &t : fn.temps) {
            declare(t);
        }
        for_each_stmt(fn.body, [&](const Stmt &s) {
            if (const auto *d = std::get_if<Decl>(&s.node)) {
                declare(*d);
            }
        });

        TypeEnv env(prog_, fn);
        fn_ = &fn;
        env_ = &env;
        for_each_stmt(fn.body, [&](const Stmt &s) { check_stmt(s); });
        bool returns = check_block(fn.body);
        if (fn.return_type.kind != Type::Kind::Void && !returns) {
            throw TypeError("function '" + fn.name + "' does not return on every path");
        }
    }

    // Returns whether the block returns on every path; rejects statements
    // following a returning statement.
    bool check_block(const std::vector<Stmt> &body) const {
        bool returned = false;
        for (const auto &s : body) {
            if (returned) {
                throw TypeError("unreachable statement after return at " + std::to_string(s.pos.line) + ":" +
                                std::to_string(s.pos.column));
            }
            if (std::holds_alternative<Return>(s.node)) {
                returned = true;
            } else if (const auto *branch = std::get_if<If>(&s.node)) {
                bool t = check_block(branch->then_body);
                bool e = check_block(branch->else_body);
                returned = t && e;
            }
        }
        return returned;
    }

    void check_access(const Access &a) const {
        if (!env_->lookup(a.root)) {
            throw TypeError("unknown variable '" + a.root + "' in '" + fn_->name + "'");
        }
        env_->type_of(a);
    }

    void check_operand(const Operand &op) const {
        if (const auto *a = std::get_if<Access>(&op)) {
            check_access(*a);
        } else if (const auto *addr = std::get_if<AddressOf>(&op)) {
            if (!env_->lookup(addr->name)) {
                throw TypeError("unknown variable '" + addr->name + "' in '" + fn_->name + "'");
            }
        }
    }

    void check_call(const CallExpr &call) const {
        for (const auto &arg : call.args) {
            check_operand(arg);
        }
        if (const auto *callee = prog_.find_function(call.callee)) {
            if (callee->params.size() != call.args.size()) {
                throw TypeError("call to '" + call.callee + "' in '" + fn_->name + "' passes " +
                                std::to_string(call.args.size()) + " arguments, expected " +
                                std::to_string(callee->params.size()));
            }
        }
    }

    void check_stmt(const Stmt &s) const {
        std::visit(
            [&](const auto &node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Assign>) {
                    check_access(node.dst);
                    if (const auto *call = std::get_if<CallExpr>(&node.src)) {
                        check_call(*call);
                    } else {
                        std::visit(
                            [&](const auto &v) {
                                using V = std::decay_t<decltype(v)>;
                                if constexpr (!std::is_same_v<V, CallExpr>) {
                                    check_operand(Operand{v});
                                }
                            },
                            node.src);
                    }
                } else if constexpr (std::is_same_v<T, CallStmt>) {
                    check_call(node.call);
                } else if constexpr (std::is_same_v<T, Return>) {
                    if (node.value) {
                        if (fn_->return_type.kind == Type::Kind::Void) {
                            throw TypeError("void function '" + fn_->name + "' returns a value");
                        }
                        check_operand(*node.value);
                    } else if (fn_->return_type.kind != Type::Kind::Void) {
                        throw TypeError("function '" + fn_->name + "' returns without a value");
                    }
                } else if constexpr (std::is_same_v<T, If>) {
                    check_access(node.cond.lhs);
                    if (const auto *rhs = std::get_if<Access>(&node.cond.rhs)) {
                        check_access(*rhs);
                    }
                }
            },
            s.node);
    }

    const Program &prog_;
    const FunctionDecl *fn_ = nullptr;
    const TypeEnv *env_ = nullptr;
};

void print_body(std::ostringstream &os, const std::vector<Stmt> &body, int indent) {
    for (const auto &s : body) {
        os << print_stmt(s, indent);
    }
}

} // namespace

Program parse_module(std::string_view source) {
    Program program = Parser(Lexer(source).run()).program();
    Checker(program).run();
    return program;
}

std::string print_access(const Access &access) {
    std::string out;
    bool all_deref = !access.path.empty();
    for (const auto &sel : access.path) {
        all_deref = all_deref && sel.kind == Selector::Kind::Deref;
    }
    if (all_deref) {
        out.assign(access.path.size(), '*');
        return out + access.root;
    }
    out = access.root;
    for (const auto &sel : access.path) {
        out += sel.kind == Selector::Kind::Deref ? std::string("->*") : "->" + sel.field;
    }
    return out;
}

std::string print_operand(const Operand &operand) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Access>) {
                return print_access(v);
            } else if constexpr (std::is_same_v<T, AddressOf>) {
                return "&" + v.name;
            } else if constexpr (std::is_same_v<T, IntLit>) {
                return std::to_string(v.value);
            } else {
                return "null";
            }
        },
        operand);
}

std::string print_condition(const Condition &cond) {
    std::string rhs = std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Access>) {
                return print_access(v);
            } else if constexpr (std::is_same_v<T, IntLit>) {
                return std::to_string(v.value);
            } else {
                return "null";
            }
        },
        cond.rhs);
    return print_access(cond.lhs) + " " + cond.op + " " + rhs;
}

namespace {

std::string print_call(const CallExpr &call) {
    std::string out = call.callee + "(";
    for (std::size_t i = 0; i < call.args.size(); ++i) {
        out += (i ? ", " : "") + print_operand(call.args[i]);
    }
    return out + ")";
}

} // namespace

std::string print_stmt(const Stmt &stmt, int indent) {
    std::ostringstream os;
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    std::visit(
        [&](const auto &node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Decl>) {
                os << pad << "let " << node.name << ": " << to_string(node.type) << ";\n";
            } else if constexpr (std::is_same_v<T, Assign>) {
                os << pad << print_access(node.dst) << " = ";
                if (const auto *call = std::get_if<CallExpr>(&node.src)) {
                    os << print_call(*call);
                } else {
                    std::visit(
                        [&](const auto &v) {
                            using V = std::decay_t<decltype(v)>;
                            if constexpr (!std::is_same_v<V, CallExpr>) {
                                os << print_operand(Operand{v});
                            }
                        },
                        node.src);
                }
                os << ";\n";
            } else if constexpr (std::is_same_v<T, CallStmt>) {
                os << pad << print_call(node.call) << ";\n";
            } else if constexpr (std::is_same_v<T, Return>) {
                os << pad << "return";
                if (node.value) {
                    os << " " << print_operand(*node.value);
                }
                os << ";\n";
            } else {
                os << pad << "if (" << print_condition(node.cond) << ") {\n";
                print_body(os, node.then_body, indent + 1);
                os << pad << "}";
                if (!node.else_body.empty()) {
                    os << " else {\n";
                    print_body(os, node.else_body, indent + 1);
                    os << pad << "}";
                }
                os << "\n";
            }
        },
        stmt.node);
    return os.str();
}

std::string print_signature(const FunctionDecl &fn) {
    std::string out = "fn " + fn.name + "(";
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
        out += (i ? ", " : "") + fn.params[i].name + ": " + to_string(fn.params[i].type);
    }
    return out + ") -> " + to_string(fn.return_type);
}

std::string print_function(const FunctionDecl &fn) {
    std::ostringstream os;
    os << print_signature(fn) << " {\n";
    for (const auto &t : fn.temps) {
        os << "  let " << t.name << ": " << to_string(t.type) << ";\n";
    }
    print_body(os, fn.body, 1);
    os << "}\n";
    return os.str();
}

std::string pretty_print(const Program &program) {
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
        if (!first) {
            os << "\n";
        }
        first = false;
    };
    for (const auto &rec : program.records) {
        sep();
        os << "struct " << rec.name << " {\n";
        for (const auto &f : rec.fields) {
            os << "  " << f.name << ": " << to_string(f.type) << ";\n";
        }
        os << "}\n";
    }
    for (const auto &g : program.globals) {
        sep();
        os << "global " << g.name << ": " << to_string(g.type) << ";\n";
    }
    for (const auto &fn : program.functions) {
        sep();
        os << print_function(fn);
    }
    return os.str();
}

} // namespace lmpa
