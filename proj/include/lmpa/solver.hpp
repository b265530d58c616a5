#pragma once

#include "lmpa/ast.hpp"
#include "lmpa/constraints.hpp"
#include "lmpa/diagnostics.hpp"
#include "lmpa/points_to.hpp"
#include "lmpa/summary_ir.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace lmpa {

/// Guard text of every fact; empty string when some producer is unguarded
/// or producers disagree.
using FactGuards = std::map<Node, std::map<ObjectId, std::string>>;

/// Decodes a callee's natural-language summary at a call site.
using SummaryDecoder =
    std::function<std::vector<SummaryOp>(const FunctionDecl &callee, const NLSummary &summary, int call_index)>;

struct SolveOptions {
    /// Create virtual field objects the first time a field of a virtual (or
    /// global storage) object is read or written.
    bool materialize = false;
    /// Longest access path a materialized object may have.
    std::size_t max_depth = 3;
    /// Randomizes worklist order when set.
    std::optional<std::uint64_t> shuffle_seed;
    /// Called after every constraint evaluation.
    std::function<void(const PointsToGraph &)> on_step;
    /// Defaults to the summary's raw ops.
    SummaryDecoder decode;
};

/// Worklist solver for inclusion constraints over one graph.
class ConstraintSolver {
public:
    ConstraintSolver(PointsToGraph &graph, const Program &program, ObjectFactory &factory, SolveOptions options);

    void add(Constraint constraint);
    void add(const std::vector<Constraint> &constraints);
    void solve();

    /// Objects a term denotes in the current graph.
    ObjSet eval(const Term &term);
    FactGuards guards();
    const std::set<std::string> &materialized() const { return materialized_; }
    const std::vector<Constraint> &constraints() const { return constraints_; }

private:
    ObjSet rvalue(const Term &term, int reader);
    std::vector<Node> lvalue(const Term &term, int reader);
    const ObjSet &read(const Node &node, int reader);
    void touch(ObjectId object, const std::string &field);
    void watch(const Node &node, int reader);
    void watch_fields(ObjectId object, int reader);
    void store(const Node &node, ObjectId object);
    void evaluate(int index);
    void push(int index);

    PointsToGraph &graph_;
    const Program &program_;
    ObjectFactory &factory_;
    SolveOptions options_;
    std::vector<Constraint> constraints_;
    std::map<Node, std::vector<int>> watchers_;
    std::map<ObjectId, std::vector<int>> field_watchers_;
    std::set<std::pair<ObjectId, std::string>> touched_;
    std::set<std::string> materialized_;
    std::deque<int> worklist_;
    std::vector<bool> queued_;
    std::mt19937_64 rng_;
    std::map<Node, ObjSet> initial_;
};

/// A call statement seen from the caller.
struct CallSite {
    std::string caller;
    int index = -1;
    std::vector<Operand> args;
    std::optional<std::string> dst;
    std::string guard;
};

/// Constraints contributed by applying `summary` at `site`. Fresh tags mint
/// one caller-side object per tag per call site (label `<tag>/<caller>:<index>`).
/// Kill ops suppress the matching ops. Throws UnboundParam.
std::vector<Constraint> summary_constraints(const FunctionDecl &callee, const FunctionSummary &summary,
                                            const CallSite &site, PointsToGraph &graph, ObjectFactory &factory,
                                            const Program &program, const SummaryDecoder &decode = {});

/// Removes ops suppressed by the kill ops in `ops` and drops the kills.
std::vector<SummaryOp> surviving_ops(const std::vector<SummaryOp> &ops);

struct SolveResult {
    /// The environment after registering variables and cells, before solving.
    PointsToGraph initial;
    PointsToGraph graph;
    std::vector<Diagnostic> diagnostics;
    FactGuards guards;
    std::set<std::string> materialized;
};

/// Field-sensitive, flow-insensitive inclusion solving of one lowered
/// function from an initial environment. Throws MissingSummary,
/// UndeclaredField.
SolveResult solve_function_detailed(const FunctionDecl &fn, const Program &program, const PointsToGraph &init,
                                    const std::map<std::string, FunctionSummary> &summaries,
                                    ObjectFactory &factory, const SolveOptions &options = {});

PointsToGraph solve_function(const FunctionDecl &fn, const Program &program, const PointsToGraph &init,
                             const std::map<std::string, FunctionSummary> &summaries, ObjectFactory &factory,
                             const SolveOptions &options = {});

/// Registers declared variables and memory-resident cells (globals and
/// address-taken variables) of `fn` in `graph`, moving any seeded value of a
/// resident variable into its cell.
void prepare_graph(PointsToGraph &graph, const FunctionDecl &fn, const Program &program, ObjectFactory &factory);

/// `a && b`, skipping empty parts.
std::string join_guards(const std::string &a, const std::string &b);

} // namespace lmpa
