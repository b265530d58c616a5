#pragma once

#include "lmpa/ast.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lmpa {

using ObjectId = std::uint32_t;
using ObjSet = std::set<ObjectId>;

enum class ObjectKind { HeapSite, StackSite, GlobalSite, VirtualParam, VirtualField };

std::string to_string(ObjectKind kind);

/// An analysis-time memory object.
struct AbstractObject {
    ObjectId id = 0;
    ObjectKind kind = ObjectKind::HeapSite;
    std::string label;
    /// Sites: owning function and statement (heap) index; -1 otherwise.
    std::string function;
    int index = -1;
    /// VirtualField: parent object and field name.
    ObjectId parent = 0;
    std::string field;
    /// Virtual objects and global sites: the access path naming the object
    /// in summary terms (`param:0->args`, `&global:g`). Empty for sites.
    std::string path;
    /// Declared type of the object when known (virtual and global objects).
    std::optional<Type> type;

    bool is_virtual() const { return kind == ObjectKind::VirtualParam || kind == ObjectKind::VirtualField; }
};

/// Mints objects with run-unique ids. Global sites are interned by name so
/// every function of a run refers to the same object. Thread-safe.
class ObjectFactory {
public:
    AbstractObject make(ObjectKind kind, std::string label);
    AbstractObject global_site(const std::string &name, const Type &type);

private:
    std::atomic<ObjectId> next_{1};
    std::mutex mutex_;
    std::map<std::string, AbstractObject> globals_;
};

/// A points-to node: a variable (`object == 0`) or an object field.
struct Node {
    ObjectId object = 0;
    std::string name;

    static Node var(std::string name) { return {0, std::move(name)}; }
    static Node field(ObjectId object, std::string field) { return {object, std::move(field)}; }
    bool is_var() const { return object == 0; }

    friend auto operator<=>(const Node &, const Node &) = default;
};

/// Name of the synthetic node collecting returned values.
inline constexpr const char *kRetNode = "ret";

class PointsToGraph {
public:
    std::string function;
    std::map<ObjectId, AbstractObject> objects;
    std::map<std::string, ObjSet> var_pts;
    std::map<std::pair<ObjectId, std::string>, ObjSet> field_pts;
    /// Memory-resident variables (globals, address-taken locals): their value
    /// lives in the `deref` field of the storage object.
    std::map<std::string, ObjectId> cells;
    /// Every variable name that may be queried.
    std::set<std::string> declared;

    void add_object(const AbstractObject &object);
    const AbstractObject &object(ObjectId id) const;
    std::optional<ObjectId> find_label(const std::string &label) const;

    /// Node holding the value of variable `var`.
    Node value_node(const std::string &var) const;

    const ObjSet &pts(const Node &node) const;
    /// Returns true when the fact is new.
    bool insert(const Node &node, ObjectId object);
    /// Returns true when the node has at least one stored fact slot.
    bool has_node(const Node &node) const;

    std::vector<std::string> labels(const ObjSet &set) const;
    std::string node_label(const Node &node) const;
    std::size_t fact_count() const;

    /// `{"function":..,"vars":{..},"fields":{"o1.args":[..]}}`, arrays sorted.
    nlohmann::json to_json() const;

    /// All facts as (node label, object label) pairs.
    std::set<std::pair<std::string, std::string>> facts() const;
};

/// Facts present in `after` but not in `before`, as a graph (objects that
/// appear only in `after` are carried along).
PointsToGraph graph_delta(const PointsToGraph &before, const PointsToGraph &after);

/// Stored points-to set of a node. Throws UnknownNode for undeclared
/// variables and unregistered objects; never-assigned nodes yield {}.
ObjSet query_points_to(const PointsToGraph &graph, const Node &node);

/// True iff the two nodes share a target.
bool query_alias(const PointsToGraph &graph, const Node &a, const Node &b);

} // namespace lmpa
