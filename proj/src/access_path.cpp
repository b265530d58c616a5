#include "lmpa/access_path.hpp"

#include "lmpa/error.hpp"

#include <cctype>

namespace lmpa {

AccessPath::AccessPath(PathBase b, std::vector<PathSelector> sels) : base(std::move(b)), selectors(std::move(sels)) {
    canonicalize();
}

void AccessPath::canonicalize() {
    if (base.kind == PathBase::Kind::GlobalAddr && !selectors.empty() &&
        selectors.front().kind == PathSelector::Kind::Deref) {
        base.kind = PathBase::Kind::Global;
        selectors.erase(selectors.begin());
    }
}

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '%'; }

} // namespace

AccessPath AccessPath::parse(std::string_view text) {
    auto bad = [&](const std::string &why) { return InvalidPath("invalid access path '" + std::string(text) + "': " + why); };
    std::size_t i = 0;
    PathBase base;
    auto take_name = [&](bool tag) {
        std::size_t start = i;
        while (i < text.size()) {
            if (tag) {
                if (text.compare(i, 2, "->") == 0 || text[i] == '[') {
                    break;
                }
            } else if (!ident_char(text[i])) {
                break;
            }
            ++i;
        }
        if (i == start) {
            throw bad("empty name");
        }
        return std::string(text.substr(start, i - start));
    };
    if (text.rfind("param:", 0) == 0) {
        i = 6;
        std::size_t start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i == start) {
            throw bad("missing parameter index");
        }
        base = PathBase::param(std::stoi(std::string(text.substr(start, i - start))));
    } else if (text.rfind("ret", 0) == 0 && (text.size() == 3 || !ident_char(text[3]))) {
        i = 3;
        base = PathBase::ret();
    } else if (text.rfind("global:", 0) == 0) {
        i = 7;
        base = PathBase::global(take_name(false));
    } else if (text.rfind("&global:", 0) == 0) {
        i = 8;
        base = PathBase::global_addr(take_name(false));
    } else if (text.rfind("fresh:", 0) == 0) {
        i = 6;
        base = PathBase::fresh(take_name(true));
    } else {
        throw bad("unknown base");
    }
    std::vector<PathSelector> sels;
    while (i < text.size()) {
        if (text.compare(i, 3, "[*]") == 0) {
            sels.push_back(PathSelector::deref());
            i += 3;
        } else if (text.compare(i, 3, "->*") == 0) {
            sels.push_back(PathSelector::wildcard());
            i += 3;
        } else if (text.compare(i, 2, "->") == 0) {
            i += 2;
            sels.push_back(PathSelector::field_of(take_name(false)));
        } else {
            throw bad("unexpected character at offset " + std::to_string(i));
        }
    }
    for (std::size_t k = 0; k + 1 < sels.size(); ++k) {
        if (sels[k].kind == PathSelector::Kind::Wildcard) {
            throw bad("wildcard must be the last selector");
        }
    }
    return AccessPath(std::move(base), std::move(sels));
}

std::string AccessPath::str() const {
    std::string out;
    switch (base.kind) {
    case PathBase::Kind::Param: out = "param:" + std::to_string(base.index); break;
    case PathBase::Kind::Ret: out = "ret"; break;
    case PathBase::Kind::Global: out = "global:" + base.name; break;
    case PathBase::Kind::GlobalAddr: out = "&global:" + base.name; break;
    case PathBase::Kind::Fresh: out = "fresh:" + base.name; break;
    }
    for (const auto &sel : selectors) {
        switch (sel.kind) {
        case PathSelector::Kind::Field: out += "->" + sel.field; break;
        case PathSelector::Kind::Deref: out += "[*]"; break;
        case PathSelector::Kind::Wildcard: out += "->*"; break;
        }
    }
    return out;
}

AccessPath AccessPath::child(const std::string &slot) const {
    return with(slot == kDerefField ? PathSelector::deref() : PathSelector::field_of(slot));
}

AccessPath AccessPath::with(PathSelector sel) const {
    auto sels = selectors;
    sels.push_back(std::move(sel));
    return AccessPath(base, std::move(sels));
}

AccessPath AccessPath::parent() const {
    if (selectors.empty()) {
        return *this;
    }
    AccessPath p;
    p.base = base;
    p.selectors.assign(selectors.begin(), selectors.end() - 1);
    return p;
}

bool AccessPath::has_wildcard() const {
    return !selectors.empty() && selectors.back().kind == PathSelector::Kind::Wildcard;
}

bool AccessPath::covers(const AccessPath &other) const {
    if (!has_wildcard()) {
        return *this == other;
    }
    const std::size_t prefix = selectors.size() - 1;
    if (base != other.base || other.selectors.size() <= prefix) {
        return false;
    }
    for (std::size_t i = 0; i < prefix; ++i) {
        if (selectors[i] != other.selectors[i]) {
            return false;
        }
    }
    return true;
}

namespace {

std::string type_path(const Program &program, const FunctionDecl &signature, const AccessPath &path,
                      std::optional<Type> &out, bool &untyped) {
    untyped = false;
    Type t;
    switch (path.base.kind) {
    case PathBase::Kind::Param:
        if (path.base.index < 0 || static_cast<std::size_t>(path.base.index) >= signature.params.size()) {
            return "no parameter " + std::to_string(path.base.index) + " in " + signature.name;
        }
        t = signature.params[static_cast<std::size_t>(path.base.index)].type;
        break;
    case PathBase::Kind::Ret:
        t = signature.return_type;
        break;
    case PathBase::Kind::Global:
    case PathBase::Kind::GlobalAddr: {
        const auto *g = program.find_global(path.base.name);
        if (!g) {
            return "unknown global '" + path.base.name + "'";
        }
        t = path.base.kind == PathBase::Kind::Global ? g->type : Type::ptr(g->type);
        break;
    }
    case PathBase::Kind::Fresh:
        untyped = true;
        return {};
    }
    for (const auto &sel : path.selectors) {
        if (sel.kind == PathSelector::Kind::Wildcard) {
            out = std::nullopt;
            untyped = true;
            return {};
        }
        if (t.kind == Type::Kind::Ptr && t.pointee().kind == Type::Kind::Void) {
            untyped = true;
            return {};
        }
        if (!t.is_pointer()) {
            return "cannot dereference non-pointer " + to_string(t) + " in '" + path.str() + "'";
        }
        if (sel.kind == PathSelector::Kind::Deref) {
            t = t.pointee();
            continue;
        }
        auto ft = field_type(program, t.pointee(), sel.field);
        if (!ft) {
            return "undeclared field '" + sel.field + "' of " + to_string(t.pointee()) + " in '" + path.str() + "'";
        }
        t = *ft;
    }
    out = t;
    return {};
}

} // namespace

std::optional<Type> path_type(const Program &program, const FunctionDecl &signature, const AccessPath &path,
                              bool *untyped) {
    std::optional<Type> out;
    bool u = false;
    std::string err = type_path(program, signature, path, out, u);
    if (untyped) {
        *untyped = u;
    }
    if (!err.empty()) {
        return std::nullopt;
    }
    return out;
}

std::string check_path(const Program &program, const FunctionDecl &signature, const AccessPath &path) {
    std::optional<Type> out;
    bool u = false;
    return type_path(program, signature, path, out, u);
}

} // namespace lmpa
