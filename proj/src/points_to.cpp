#include "lmpa/points_to.hpp"

#include "lmpa/error.hpp"

#include <algorithm>

namespace lmpa {

std::string to_string(ObjectKind kind) {
    switch (kind) {
    case ObjectKind::HeapSite: return "heap";
    case ObjectKind::StackSite: return "stack";
    case ObjectKind::GlobalSite: return "global";
    case ObjectKind::VirtualParam: return "virtual_param";
    case ObjectKind::VirtualField: return "virtual_field";
    }
    return "?";
}

AbstractObject ObjectFactory::make(ObjectKind kind, std::string label) {
    AbstractObject obj;
    obj.id = next_.fetch_add(1);
    obj.kind = kind;
    obj.label = std::move(label);
    return obj;
}

AbstractObject ObjectFactory::global_site(const std::string &name, const Type &type) {
    std::lock_guard lock(mutex_);
    auto it = globals_.find(name);
    if (it == globals_.end()) {
        AbstractObject obj = make(ObjectKind::GlobalSite, name);
        obj.path = "&global:" + name;
        obj.type = type;
        it = globals_.emplace(name, std::move(obj)).first;
    }
    return it->second;
}

void PointsToGraph::add_object(const AbstractObject &object) { objects.emplace(object.id, object); }

const AbstractObject &PointsToGraph::object(ObjectId id) const {
    auto it = objects.find(id);
    if (it == objects.end()) {
        throw UnknownNode("object #" + std::to_string(id) + " is not registered");
    }
    return it->second;
}

std::optional<ObjectId> PointsToGraph::find_label(const std::string &label) const {
    for (const auto &[id, obj] : objects) {
        if (obj.label == label) {
            return id;
        }
    }
    return std::nullopt;
}

Node PointsToGraph::value_node(const std::string &var) const {
    if (auto it = cells.find(var); it != cells.end()) {
        return Node::field(it->second, kDerefField);
    }
    return Node::var(var);
}

const ObjSet &PointsToGraph::pts(const Node &node) const {
    static const ObjSet empty;
    if (node.is_var()) {
        auto it = var_pts.find(node.name);
        return it == var_pts.end() ? empty : it->second;
    }
    auto it = field_pts.find({node.object, node.name});
    return it == field_pts.end() ? empty : it->second;
}

bool PointsToGraph::insert(const Node &node, ObjectId object) {
    if (node.is_var()) {
        return var_pts[node.name].insert(object).second;
    }
    return field_pts[{node.object, node.name}].insert(object).second;
}

bool PointsToGraph::has_node(const Node &node) const {
    if (node.is_var()) {
        return var_pts.count(node.name) > 0;
    }
    return field_pts.count({node.object, node.name}) > 0;
}

std::vector<std::string> PointsToGraph::labels(const ObjSet &set) const {
    std::vector<std::string> out;
    out.reserve(set.size());
    for (ObjectId id : set) {
        out.push_back(object(id).label);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string PointsToGraph::node_label(const Node &node) const {
    if (node.is_var()) {
        return node.name;
    }
    return object(node.object).label + "." + node.name;
}

std::size_t PointsToGraph::fact_count() const {
    std::size_t n = 0;
    for (const auto &[_, s] : var_pts) {
        n += s.size();
    }
    for (const auto &[_, s] : field_pts) {
        n += s.size();
    }
    return n;
}

nlohmann::json PointsToGraph::to_json() const {
    nlohmann::json vars = nlohmann::json::object();
    for (const auto &[name, set] : var_pts) {
        if (!set.empty() && !cells.count(name)) {
            vars[name] = labels(set);
        }
    }
    for (const auto &[name, cell] : cells) {
        if (!declared.count(name)) {
            continue;
        }
        const auto &set = pts(Node::field(cell, kDerefField));
        if (!set.empty()) {
            vars[name] = labels(set);
        }
    }
    nlohmann::json fields = nlohmann::json::object();
    for (const auto &[key, set] : field_pts) {
        if (!set.empty()) {
            fields[object(key.first).label + "." + key.second] = labels(set);
        }
    }
    return {{"function", function}, {"vars", vars}, {"fields", fields}};
}

std::set<std::pair<std::string, std::string>> PointsToGraph::facts() const {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto &[name, set] : var_pts) {
        for (ObjectId id : set) {
            out.emplace(name, object(id).label);
        }
    }
    for (const auto &[key, set] : field_pts) {
        for (ObjectId id : set) {
            out.emplace(object(key.first).label + "." + key.second, object(id).label);
        }
    }
    return out;
}

PointsToGraph graph_delta(const PointsToGraph &before, const PointsToGraph &after) {
    PointsToGraph delta;
    delta.function = after.function;
    delta.cells = after.cells;
    delta.declared = after.declared;
    for (const auto &[id, obj] : after.objects) {
        delta.objects.emplace(id, obj);
    }
    for (const auto &[name, set] : after.var_pts) {
        for (ObjectId id : set) {
            if (!before.pts(Node::var(name)).count(id)) {
                delta.var_pts[name].insert(id);
            }
        }
    }
    for (const auto &[key, set] : after.field_pts) {
        for (ObjectId id : set) {
            if (!before.pts(Node::field(key.first, key.second)).count(id)) {
                delta.field_pts[key].insert(id);
            }
        }
    }
    return delta;
}

ObjSet query_points_to(const PointsToGraph &graph, const Node &node) {
    if (node.is_var()) {
        if (!graph.declared.count(node.name) && !graph.var_pts.count(node.name) && !graph.cells.count(node.name)) {
            throw UnknownNode("unknown variable '" + node.name + "' in '" + graph.function + "'");
        }
        return graph.pts(graph.value_node(node.name));
    }
    if (!graph.objects.count(node.object)) {
        throw UnknownNode("object #" + std::to_string(node.object) + " is not registered");
    }
    return graph.pts(node);
}

bool query_alias(const PointsToGraph &graph, const Node &a, const Node &b) {
    ObjSet pa = query_points_to(graph, a);
    ObjSet pb = query_points_to(graph, b);
    return std::any_of(pa.begin(), pa.end(), [&](ObjectId id) { return pb.count(id) > 0; });
}

} // namespace lmpa
