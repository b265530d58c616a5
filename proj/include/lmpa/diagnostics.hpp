#pragma once

#include <string>
#include <tuple>

namespace lmpa {

/// One entry of the analysis diagnostics stream.
///
/// Kinds in use: `freed` (an object reaches free()), `clamp_drop` (a model
/// fact rejected by the superset clamp or type check), `missing_fact` (a
/// superset fact the model omitted), `llm_fallback` (a model answer was
/// unavailable or rejected and the deterministic fallback was used),
/// `invalid_path`, `kill_dropped` and `widened` (a recursive group whose
/// summaries did not stabilize was given conservative summaries).
struct Diagnostic {
    std::string kind;
    std::string function;
    std::string message;

    friend bool operator==(const Diagnostic &, const Diagnostic &) = default;
    friend bool operator<(const Diagnostic &a, const Diagnostic &b) {
        return std::tie(a.function, a.kind, a.message) < std::tie(b.function, b.kind, b.message);
    }
};

} // namespace lmpa
