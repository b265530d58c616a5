#pragma once

#include "lmpa/ast.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmpa {

/// Root of a summary access path.
///
/// Canonical text: `param:<i>`, `ret`, `global:<name>` (the value of a
/// global), `&global:<name>` (the global's storage object) and
/// `fresh:<tag>` (an object minted per call site).
struct PathBase {
    enum class Kind { Param, Ret, Global, GlobalAddr, Fresh };
    Kind kind = Kind::Ret;
    int index = 0;      // Param
    std::string name;   // Global, GlobalAddr, Fresh

    static PathBase param(int i) { return {Kind::Param, i, {}}; }
    static PathBase ret() { return {Kind::Ret, 0, {}}; }
    static PathBase global(std::string n) { return {Kind::Global, 0, std::move(n)}; }
    static PathBase global_addr(std::string n) { return {Kind::GlobalAddr, 0, std::move(n)}; }
    static PathBase fresh(std::string tag) { return {Kind::Fresh, 0, std::move(tag)}; }

    friend auto operator<=>(const PathBase &, const PathBase &) = default;
};

/// `->field`, `[*]` (plain dereference) or `->*` (any selector, ModSet only).
struct PathSelector {
    enum class Kind { Field, Deref, Wildcard };
    Kind kind = Kind::Field;
    std::string field;

    static PathSelector field_of(std::string f) { return {Kind::Field, std::move(f)}; }
    static PathSelector deref() { return {Kind::Deref, {}}; }
    static PathSelector wildcard() { return {Kind::Wildcard, {}}; }

    /// Points-to slot name (`deref` for `[*]`).
    std::string slot() const { return kind == Kind::Deref ? std::string(kDerefField) : field; }

    friend auto operator<=>(const PathSelector &, const PathSelector &) = default;
};

struct AccessPath {
    PathBase base;
    std::vector<PathSelector> selectors;

    AccessPath() = default;
    AccessPath(PathBase b, std::vector<PathSelector> sels = {});

    /// Parses canonical text; throws InvalidPath.
    static AccessPath parse(std::string_view text);
    std::string str() const;

    /// Appends a selector by points-to slot name (`deref` → `[*]`).
    AccessPath child(const std::string &slot) const;
    AccessPath with(PathSelector sel) const;
    /// Path without its last selector.
    AccessPath parent() const;

    bool is_fresh() const { return base.kind == PathBase::Kind::Fresh; }
    bool has_wildcard() const;
    /// True when this (wildcard-terminated) path covers `other`: `p->*`
    /// covers every path strictly extending `p`; otherwise equality.
    bool covers(const AccessPath &other) const;

    friend auto operator<=>(const AccessPath &, const AccessPath &) = default;
    friend bool operator==(const AccessPath &, const AccessPath &) = default;

private:
    void canonicalize();
};

/// Type of a path under a callee signature; nullopt when untypable (a
/// selector does not apply or the base is unknown). Fresh bases are untyped
/// and accept any selector: `untyped` is set in that case.
std::optional<Type> path_type(const Program &program, const FunctionDecl &signature, const AccessPath &path,
                              bool *untyped = nullptr);

/// Like path_type but returns an error description, empty when valid.
std::string check_path(const Program &program, const FunctionDecl &signature, const AccessPath &path);

} // namespace lmpa
