#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lmpa {

/// Source position. Positions never take part in AST equality so that a
/// re-parsed pretty-print compares equal to the original.
struct Pos {
    int line = 0;
    int column = 0;

    friend bool operator==(const Pos &, const Pos &) { return true; }
};

struct Type {
    enum class Kind { Int, Char, Void, Ptr, Array, Record };

    Kind kind = Kind::Int;
    std::string record;                // Kind::Record
    std::shared_ptr<const Type> elem;  // Kind::Ptr, Kind::Array

    static Type int_type() { return {}; }
    static Type char_type() { return {Kind::Char, {}, nullptr}; }
    static Type void_type() { return {Kind::Void, {}, nullptr}; }
    static Type named(std::string name) { return {Kind::Record, std::move(name), nullptr}; }
    static Type ptr(Type to) { return {Kind::Ptr, {}, std::make_shared<const Type>(std::move(to))}; }
    static Type array(Type of) { return {Kind::Array, {}, std::make_shared<const Type>(std::move(of))}; }

    bool is_pointer() const { return kind == Kind::Ptr; }
    bool is_scalar() const { return kind == Kind::Int || kind == Kind::Char; }
    const Type &pointee() const { return *elem; }

    friend bool operator==(const Type &a, const Type &b);
};

std::string to_string(const Type &type);

/// One step of an access chain: `->name` or a plain dereference `*`.
struct Selector {
    enum class Kind { Field, Deref };
    Kind kind = Kind::Field;
    std::string field;

    static Selector field_of(std::string name) { return {Kind::Field, std::move(name)}; }
    static Selector deref() { return {Kind::Deref, {}}; }

    /// Name of the points-to field this selector reads (`deref` for `*`).
    const std::string &slot() const;

    friend bool operator==(const Selector &, const Selector &) = default;
};

/// A variable followed by zero or more selectors, e.g. `a->b->c` or `*p`.
struct Access {
    std::string root;
    std::vector<Selector> path;
    Pos pos;

    std::size_t depth() const { return path.size(); }

    friend bool operator==(const Access &, const Access &) = default;
};

struct AddressOf {
    std::string name;
    Pos pos;
    friend bool operator==(const AddressOf &, const AddressOf &) = default;
};

struct IntLit {
    long long value = 0;
    friend bool operator==(const IntLit &, const IntLit &) = default;
};

struct NullLit {
    friend bool operator==(const NullLit &, const NullLit &) = default;
};

/// Call arguments and return operands.
using Operand = std::variant<Access, AddressOf, IntLit, NullLit>;

struct CallExpr {
    std::string callee;
    std::vector<Operand> args;
    Pos pos;
    friend bool operator==(const CallExpr &, const CallExpr &) = default;
};

/// Right-hand side of an assignment.
using Expr = std::variant<Access, AddressOf, CallExpr, IntLit, NullLit>;

struct Condition {
    Access lhs;
    std::string op;  // one of < <= > >= == !=
    std::variant<Access, IntLit, NullLit> rhs;
    friend bool operator==(const Condition &, const Condition &) = default;
};

struct Stmt;

struct Decl {
    std::string name;
    Type type;
    friend bool operator==(const Decl &, const Decl &) = default;
};

struct Assign {
    Access dst;
    Expr src;
    friend bool operator==(const Assign &, const Assign &) = default;
};

struct CallStmt {
    CallExpr call;
    friend bool operator==(const CallStmt &, const CallStmt &) = default;
};

struct Return {
    std::optional<Operand> value;
    friend bool operator==(const Return &, const Return &) = default;
};

struct If {
    Condition cond;
    std::vector<Stmt> then_body;
    std::vector<Stmt> else_body;
    friend bool operator==(const If &a, const If &b);
};

struct Stmt {
    using Node = std::variant<Decl, Assign, CallStmt, Return, If>;

    Node node;
    Pos pos;
    /// Pre-order statement number inside the owning function, assigned by
    /// lowering. Excluded from equality like `pos`.
    int index = -1;

    friend bool operator==(const Stmt &a, const Stmt &b) { return a.node == b.node; }
};

/// Statement classification in the vocabulary of the constraint rules.
enum class StmtKind { Decl, AddrOf, Copy, Load, Store, Call, Return, If, Compound };

/// Classifies a statement. `Compound` is reported for assignments that still
/// carry more than one dereference (i.e. not yet lowered).
StmtKind classify(const Stmt &stmt);

struct Param {
    std::string name;
    Type type;
    friend bool operator==(const Param &, const Param &) = default;
};

struct FunctionDecl {
    std::string name;
    std::vector<Param> params;
    Type return_type;
    std::vector<Stmt> body;
    /// Temporaries introduced by lowering, in creation order.
    std::vector<Decl> temps;
    Pos pos;

    std::optional<std::size_t> param_index(const std::string &name) const;
    friend bool operator==(const FunctionDecl &, const FunctionDecl &) = default;
};

struct FieldDecl {
    std::string name;
    Type type;
    friend bool operator==(const FieldDecl &, const FieldDecl &) = default;
};

struct RecordDecl {
    std::string name;
    std::vector<FieldDecl> fields;
    Pos pos;

    const FieldDecl *find_field(const std::string &name) const;
    friend bool operator==(const RecordDecl &, const RecordDecl &) = default;
};

struct GlobalDecl {
    std::string name;
    Type type;
    Pos pos;
    friend bool operator==(const GlobalDecl &, const GlobalDecl &) = default;
};

struct Program {
    std::vector<RecordDecl> records;
    std::vector<GlobalDecl> globals;
    std::vector<FunctionDecl> functions;

    const RecordDecl *find_record(const std::string &name) const;
    const GlobalDecl *find_global(const std::string &name) const;
    const FunctionDecl *find_function(const std::string &name) const;

    friend bool operator==(const Program &, const Program &) = default;
};

/// Synthetic field used by arrays: `array<T>` behaves like a record whose
/// single field `elts` has type `ptr<T>`.
inline constexpr const char *kEltsField = "elts";
/// Synthetic field used for plain dereference.
inline constexpr const char *kDerefField = "deref";

/// Type of field `field` inside an object of type `object`; nullopt when the
/// field is not declared. Handles records and the synthetic `elts` field.
std::optional<Type> field_type(const Program &program, const Type &object, const std::string &field);

/// Declared pointer-carrying field names of an object type (record fields,
/// or `elts` for arrays).
std::vector<std::string> declared_fields(const Program &program, const Type &object);

/// Visits every statement of a body in pre-order, descending into `if`.
template <typename Fn> void for_each_stmt(const std::vector<Stmt> &body, Fn &&fn) {
    for (const auto &stmt : body) {
        fn(stmt);
        if (const auto *branch = std::get_if<If>(&stmt.node)) {
            for_each_stmt(branch->then_body, fn);
            for_each_stmt(branch->else_body, fn);
        }
    }
}

} // namespace lmpa
