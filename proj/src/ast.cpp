#include "lmpa/ast.hpp"

#include <algorithm>

namespace lmpa {

bool operator==(const Type &a, const Type &b) {
    if (a.kind != b.kind || a.record != b.record) {
        return false;
    }
    if (!a.elem || !b.elem) {
        return !a.elem && !b.elem;
    }
    return *a.elem == *b.elem;
}

std::string to_string(const Type &type) {
    switch (type.kind) {
    case Type::Kind::Int: return "int";
    case Type::Kind::Char: return "char";
    case Type::Kind::Void: return "void";
    case Type::Kind::Ptr: return "ptr<" + to_string(*type.elem) + ">";
    case Type::Kind::Array: return "array<" + to_string(*type.elem) + ">";
    case Type::Kind::Record: return type.record;
    }
    return "?";
}

const std::string &Selector::slot() const {
    static const std::string deref_name = kDerefField;
    return kind == Kind::Deref ? deref_name : field;
}

bool operator==(const If &a, const If &b) {
    return a.cond == b.cond && a.then_body == b.then_body && a.else_body == b.else_body;
}

namespace {

std::size_t operand_depth(const Operand &op) {
    if (const auto *access = std::get_if<Access>(&op)) {
        return access->depth();
    }
    return 0;
}

} // namespace

StmtKind classify(const Stmt &stmt) {
    return std::visit(
        [](const auto &node) -> StmtKind {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Decl>) {
                return StmtKind::Decl;
            } else if constexpr (std::is_same_v<T, CallStmt>) {
                for (const auto &arg : node.call.args) {
                    if (operand_depth(arg) > 0) {
                        return StmtKind::Compound;
                    }
                }
                return StmtKind::Call;
            } else if constexpr (std::is_same_v<T, Return>) {
                return node.value && operand_depth(*node.value) > 0 ? StmtKind::Compound
                                                                    : StmtKind::Return;
            } else if constexpr (std::is_same_v<T, If>) {
                return StmtKind::If;
            } else {
                const std::size_t dst_depth = node.dst.depth();
                if (const auto *call = std::get_if<CallExpr>(&node.src)) {
                    if (dst_depth > 0) {
                        return StmtKind::Compound;
                    }
                    for (const auto &arg : call->args) {
                        if (operand_depth(arg) > 0) {
                            return StmtKind::Compound;
                        }
                    }
                    return StmtKind::Call;
                }
                if (std::holds_alternative<AddressOf>(node.src)) {
                    return dst_depth == 0 ? StmtKind::AddrOf : StmtKind::Compound;
                }
                const auto *src = std::get_if<Access>(&node.src);
                const std::size_t src_depth = src ? src->depth() : 0;
                if (dst_depth + src_depth > 1) {
                    return StmtKind::Compound;
                }
                if (dst_depth == 1) {
                    return StmtKind::Store;
                }
                return src_depth == 1 ? StmtKind::Load : StmtKind::Copy;
            }
        },
        stmt.node);
}

std::optional<std::size_t> FunctionDecl::param_index(const std::string &param) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == param) {
            return i;
        }
    }
    return std::nullopt;
}

const FieldDecl *RecordDecl::find_field(const std::string &field) const {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const FieldDecl &f) { return f.name == field; });
    return it == fields.end() ? nullptr : &*it;
}

const RecordDecl *Program::find_record(const std::string &name) const {
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const RecordDecl &r) { return r.name == name; });
    return it == records.end() ? nullptr : &*it;
}

const GlobalDecl *Program::find_global(const std::string &name) const {
    auto it = std::find_if(globals.begin(), globals.end(),
                           [&](const GlobalDecl &g) { return g.name == name; });
    return it == globals.end() ? nullptr : &*it;
}

const FunctionDecl *Program::find_function(const std::string &name) const {
    auto it = std::find_if(functions.begin(), functions.end(),
                           [&](const FunctionDecl &f) { return f.name == name; });
    return it == functions.end() ? nullptr : &*it;
}

std::optional<Type> field_type(const Program &program, const Type &object, const std::string &field) {
    if (object.kind == Type::Kind::Array) {
        if (field == kEltsField) {
            return Type::ptr(*object.elem);
        }
        return std::nullopt;
    }
    if (object.kind == Type::Kind::Record) {
        if (const auto *record = program.find_record(object.record)) {
            if (const auto *decl = record->find_field(field)) {
                return decl->type;
            }
        }
    }
    return std::nullopt;
}

std::vector<std::string> declared_fields(const Program &program, const Type &object) {
    std::vector<std::string> names;
    if (object.kind == Type::Kind::Array) {
        names.emplace_back(kEltsField);
    } else if (object.kind == Type::Kind::Record) {
        if (const auto *record = program.find_record(object.record)) {
            for (const auto &f : record->fields) {
                if (f.type.is_pointer()) {
                    names.push_back(f.name);
                }
            }
        }
    }
    return names;
}

} // namespace lmpa
