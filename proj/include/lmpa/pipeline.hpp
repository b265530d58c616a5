#pragma once

#include "lmpa/ast.hpp"
#include "lmpa/behavior.hpp"
#include "lmpa/callgraph.hpp"
#include "lmpa/diagnostics.hpp"
#include "lmpa/llm.hpp"
#include "lmpa/oracle.hpp"
#include "lmpa/param_spec.hpp"
#include "lmpa/points_to.hpp"
#include "lmpa/summary_ir.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lmpa {

/// Report sections selectable with `--emit`.
inline const std::set<std::string> kEmitTargets = {"pts", "summaries", "verdicts", "paramspecs", "callgraph", "apis"};

struct RunConfig {
    std::string input;
    ProviderConfig provider;
    /// Empty means pts, summaries, verdicts and paramspecs.
    std::set<std::string> emit;
    bool oracle = false;
    std::string out;
    /// Functions given the conservative summary without analysis.
    std::set<std::string> force_conservative;
};

struct FunctionResult {
    std::string name;
    BehaviorVerdict verdict;
    std::optional<ParamSpec> spec;
    /// The solved graph; absent for functions that were never solved.
    std::optional<PointsToGraph> graph;
    std::optional<RawSummary> raw;
    FunctionSummary summary;
};

struct OracleComparison {
    std::map<std::string, FactDiff> functions;

    std::size_t missing() const;
    std::size_t extra() const;
};

struct AnalysisReport {
    std::string provenance;
    CallGraph callgraph;
    AnalysisOrder order;
    std::map<std::string, FunctionResult> functions;
    std::vector<Diagnostic> diagnostics;
    std::optional<OracleComparison> oracle;

    std::map<std::string, ParamSpec> specs() const;
    /// Keys sorted, arrays in a fixed order; identical inputs give
    /// identical documents.
    nlohmann::json to_json(const std::set<std::string> &emit) const;
};

/// Bottom-up analysis of a lowered program. Throws on frontend errors and
/// RecursiveProgram when the oracle is requested for a cyclic program.
AnalysisReport analyze_program(const Program &program, const RunConfig &cfg);

/// Reads, parses and lowers `cfg.input`, then runs analyze_program.
AnalysisReport analyze_file(const RunConfig &cfg);

/// Comparison against oracle_inline_analyze at escaping locations.
OracleComparison compare_with_oracle(const Program &program, const AnalysisReport &report);

/// Parses a comma-separated `--emit` list; throws std::invalid_argument.
std::set<std::string> parse_emit(const std::string &text);

} // namespace lmpa
