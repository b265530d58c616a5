#pragma once

#include "lmpa/access_path.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lmpa {

enum class OpKind { Alloc, Store, Copy, Return, Kill };

std::string to_string(OpKind kind);
OpKind op_kind_from_string(const std::string &text);

/// One instruction of a function summary: `dst ⊇ src`, or a kill of the
/// fact `(dst, src)` (every fact of `dst` when `src` is absent).
struct SummaryOp {
    OpKind op = OpKind::Store;
    AccessPath dst;
    std::optional<AccessPath> src;
    std::optional<std::string> cond;

    /// `{"op":"store","dst":"param:0->large","src":"fresh:o","cond":null}`
    nlohmann::json to_json() const;
    /// Throws SchemaViolation on a malformed document and InvalidPath on a
    /// malformed path.
    static SummaryOp from_json(const nlohmann::json &doc);

    friend bool operator==(const SummaryOp &, const SummaryOp &) = default;
    friend auto operator<=>(const SummaryOp &, const SummaryOp &) = default;
};

nlohmann::json ops_to_json(const std::vector<SummaryOp> &ops);
std::vector<SummaryOp> ops_from_json(const nlohmann::json &doc);

/// Deterministic English rendering of ops, one sentence per line
/// (`allocates fresh:o into ret under condition c.`). Empty input renders
/// as "no externally visible pointer effects".
std::string render_ops_text(const std::vector<SummaryOp> &ops);
/// Inverse of render_ops_text; lines that are not rendered ops are skipped.
std::vector<SummaryOp> parse_ops_text(const std::string &text);

struct RawSummary {
    std::vector<SummaryOp> ops;
    std::vector<std::string> conditions;

    /// Non-kill ops: the superset every model answer is clamped against.
    std::vector<SummaryOp> superset() const;
    std::vector<SummaryOp> kills() const;

    friend bool operator==(const RawSummary &, const RawSummary &) = default;
};

struct NLSummary {
    std::string text;
    std::vector<std::string> conditions;
    RawSummary raw;

    friend bool operator==(const NLSummary &, const NLSummary &) = default;
};

/// A modeled system API invocation; `arg_map` maps API formals (`dst`,
/// `src`, `size`, `ret`, ...) to callee-relative expressions (`ret`,
/// `param:1`, a parameter name, or an access path).
struct ApiCall {
    std::string api;
    std::map<std::string, std::string> arg_map;

    nlohmann::json to_json() const;
    static ApiCall from_json(const nlohmann::json &doc);

    friend bool operator==(const ApiCall &, const ApiCall &) = default;
};

struct ApiListSummary {
    std::vector<ApiCall> calls;
    friend bool operator==(const ApiListSummary &, const ApiListSummary &) = default;
};

struct ConservativeSummary {
    std::vector<SummaryOp> ops;
    friend bool operator==(const ConservativeSummary &, const ConservativeSummary &) = default;
};

using FunctionSummary = std::variant<ApiListSummary, NLSummary, ConservativeSummary>;

/// `{function, kind: "api_list"|"nl"|"conservative", text?, ops, conditions}`
nlohmann::json summary_to_json(const std::string &function, const FunctionSummary &summary);

} // namespace lmpa
