#pragma once

#include "lmpa/ast.hpp"

#include <string>
#include <string_view>

namespace lmpa {

/// Parses MiniC source into a checked Program.
///
/// Throws SyntaxError (with line/column) on malformed input, TypeError for
/// unknown type names, unknown variables or fields and missing returns, and
/// DuplicateName for redeclared records, globals, functions, fields,
/// parameters or locals.
Program parse_module(std::string_view source);

/// Renders a program back to MiniC. The output re-parses to an equal AST.
std::string pretty_print(const Program &program);

std::string print_function(const FunctionDecl &fn);
std::string print_stmt(const Stmt &stmt, int indent = 0);
std::string print_access(const Access &access);
std::string print_operand(const Operand &operand);
std::string print_condition(const Condition &cond);
/// `fn name(p: T, ...) -> R`
std::string print_signature(const FunctionDecl &fn);

} // namespace lmpa
