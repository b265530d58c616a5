#pragma once

#include "lmpa/diagnostics.hpp"
#include "lmpa/llm.hpp"
#include "lmpa/solver.hpp"
#include "lmpa/summary_ir.hpp"

#include <map>
#include <string>
#include <vector>

namespace lmpa {

/// Escaping effects of a solved function: every fact at a Param-, Ret-,
/// Global- or Fresh-rooted location that was not in the initial
/// environment. Heap and stack objects become `fresh:<label>` sources; the
/// first op mentioning a tag is its `alloc`.
RawSummary extract_raw_summary(const FunctionDecl &fn, const SolveResult &solved);

/// Worst-case effects over declared types: the return value and every
/// pointer global may receive every pointer argument, every pointer global
/// and a fresh object; every pointer field reachable from a pointer
/// parameter (each record expanded once per path) may receive the same.
ConservativeSummary conservative_summary(const FunctionDecl &fn, const Program &program);

/// Natural-language form of a raw summary. Falls back to the template
/// rendering when the gateway is off, fails or is rejected.
NLSummary encode_summary(const RawSummary &raw, const FunctionDecl &fn, const Program &program, Gateway &gateway,
                         std::vector<Diagnostic> *diagnostics = nullptr);

struct ClampResult {
    std::vector<SummaryOp> ops;
    std::vector<Diagnostic> diagnostics;
};

/// Bounds decoded ops by the superset: drops ill-typed ops, non-kill ops no
/// superset op subsumes (same kind, dst and src up to an injective renaming
/// of fresh tags) and kills of unknown destinations; warns about superset
/// ops nothing covers. Kept ops use the superset's fresh tags.
ClampResult validate_decoded(const std::vector<SummaryOp> &ops, const RawSummary &superset,
                             const FunctionDecl &signature, const Program &program);

/// Ops for a call site. With the gateway off this is `nl.raw.ops`;
/// otherwise the model's answer clamped against `nl.raw`, with the raw
/// kills re-applied. Rejected answers fall back to `nl.raw.ops`.
std::vector<SummaryOp> decode_summary(const NLSummary &nl, const FunctionDecl &callee, const Program &program,
                                      Gateway &gateway, std::vector<Diagnostic> *diagnostics = nullptr);

/// Appends model-proposed kills whose dst is a dst of `raw`.
RawSummary refine_with_kill(const RawSummary &raw, const FunctionDecl &fn, const Program &program, Gateway &gateway,
                            std::vector<Diagnostic> *diagnostics = nullptr);

/// Facts added to `graph` by applying `summary` at `site`.
PointsToGraph apply_summary_at_callsite(const FunctionDecl &callee, const FunctionSummary &summary,
                                        const CallSite &site, const PointsToGraph &graph, ObjectFactory &factory,
                                        const Program &program);

} // namespace lmpa
