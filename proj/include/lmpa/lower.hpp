#pragma once

#include "lmpa/ast.hpp"

#include <map>
#include <optional>
#include <string>

namespace lmpa {

/// Declared types visible inside one function: parameters, every `let`
/// (MiniC locals are function-scoped), lowering temporaries, then globals.
class TypeEnv {
public:
    TypeEnv(const Program &program, const FunctionDecl &fn);

    std::optional<Type> lookup(const std::string &name) const;
    bool is_global(const std::string &name) const;

    /// Type of an access chain; throws TypeError when a selector does not
    /// apply (unknown field, dereference of a non-pointer).
    Type type_of(const Access &access) const;

    const Program &program() const { return *program_; }

private:
    const Program *program_;
    std::map<std::string, Type> locals_;
};

/// Result type of a call to `callee` (user function or modeled API).
Type call_result_type(const Program &program, const std::string &callee);

/// Splits every multi-dereference statement through fresh `%t<N>`
/// temporaries so that each statement performs at most one dereference, and
/// assigns pre-order statement indices. Idempotent.
Program lower_to_ir(const Program &program);

/// True when every statement of the program satisfies the one-dereference
/// invariant.
bool is_lowered(const Program &program);

} // namespace lmpa
