#pragma once

#include "lmpa/points_to.hpp"

#include <string>
#include <vector>

namespace lmpa {

/// A value expression over the points-to graph: a base (a variable's value
/// or a constant object) followed by field loads.
struct Term {
    enum class Base { None, Var, Object };
    Base base = Base::None;
    std::string var;
    ObjectId object = 0;
    std::vector<std::string> fields;

    static Term none() { return {}; }
    static Term of_var(std::string name, std::vector<std::string> fields = {}) {
        return {Base::Var, std::move(name), 0, std::move(fields)};
    }
    static Term of_object(ObjectId id, std::vector<std::string> fields = {}) {
        return {Base::Object, {}, id, std::move(fields)};
    }
    Term with(std::string field) const {
        Term t = *this;
        t.fields.push_back(std::move(field));
        return t;
    }
    bool empty() const { return base == Base::None; }
};

/// Inclusion constraint `lhs ⊇ rhs` (lhs read as a location), a pointer
/// payload copy between the objects of two terms (memcpy-style), or a free
/// event recorded after solving.
struct Constraint {
    enum class Kind { Include, FieldCopy, Free };
    Kind kind = Kind::Include;
    Term lhs;
    Term rhs;
    std::string guard;
    int index = -1;
};

} // namespace lmpa
