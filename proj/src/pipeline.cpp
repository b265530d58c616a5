#include "lmpa/pipeline.hpp"

#include "lmpa/error.hpp"
#include "lmpa/lower.hpp"
#include "lmpa/parser.hpp"
#include "lmpa/solver.hpp"
#include "lmpa/summary.hpp"
#include "lmpa/sysapi.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lmpa {

using nlohmann::json;

namespace {

constexpr int kMaxRounds = 8;

class Analyzer {
public:
    Analyzer(const Program &program, const RunConfig &cfg) : program_(program), cfg_(cfg), gateway_(cfg.provider) {
        decode_ = [this](const FunctionDecl &callee, const NLSummary &nl, int) { return decode(callee, nl); };
    }

    AnalysisReport run() {
        AnalysisReport report;
        report.provenance = cfg_.provider.describe();
        report.callgraph = build_call_graph(program_);
        report.order = analysis_order(report.callgraph);
        for (const auto &group : report.order.groups) {
            if (is_recursive(group, report.callgraph)) {
                recursive_group(group, report);
                continue;
            }
            for (const auto &name : group) {
                FunctionResult r = analyze(*program_.find_function(name), report.diagnostics);
                summaries_[name] = r.summary;
                report.functions[name] = std::move(r);
            }
        }
        report.diagnostics.insert(report.diagnostics.end(), decode_diags_.begin(), decode_diags_.end());
        std::sort(report.diagnostics.begin(), report.diagnostics.end());
        report.diagnostics.erase(std::unique(report.diagnostics.begin(), report.diagnostics.end()),
                                 report.diagnostics.end());
        return report;
    }

private:
    std::vector<SummaryOp> decode(const FunctionDecl &callee, const NLSummary &nl) {
        auto it = decoded_.find(callee.name);
        if (it != decoded_.end() && it->second.first == nl) {
            return it->second.second;
        }
        auto ops = decode_summary(nl, callee, program_, gateway_, &decode_diags_);
        decoded_[callee.name] = {nl, ops};
        return ops;
    }

    FunctionResult analyze(const FunctionDecl &fn, std::vector<Diagnostic> &diags) {
        FunctionResult r;
        r.name = fn.name;
        if (cfg_.force_conservative.count(fn.name)) {
            r.verdict = BehaviorVerdict::no("conservative summary forced");
            r.summary = conservative_summary(fn, program_);
            return r;
        }
        r.verdict = classify_behavior(fn, program_, gateway_, &diags);
        if (r.verdict.abstractable) {
            r.summary = ApiListSummary{r.verdict.api_list};
            return r;
        }
        std::set<AccessPath> fallback = dereferenced_paths(fn, program_, summaries_, decode_);
        r.spec = infer_param_spec(fn, program_, gateway_, fallback, &diags);
        PointsToGraph init = init_points_to_env(*r.spec, fn, program_, factory_);
        SolveOptions options;
        options.decode = decode_;
        SolveResult solved = solve_function_detailed(fn, program_, init, summaries_, factory_, options);
        diags.insert(diags.end(), solved.diagnostics.begin(), solved.diagnostics.end());
        RawSummary raw = extract_raw_summary(fn, solved);
        raw = refine_with_kill(raw, fn, program_, gateway_, &diags);
        r.summary = encode_summary(raw, fn, program_, gateway_, &diags);
        r.raw = std::move(raw);
        r.graph = std::move(solved.graph);
        return r;
    }

    /// Rounds from empty summaries, each member seeing the summaries its
    /// group mates published earlier in the same round; widened to the
    /// conservative summary when a member still changes in the last round.
    void recursive_group(const std::vector<std::string> &group, AnalysisReport &report) {
        for (const auto &name : group) {
            summaries_[name] = NLSummary{render_ops_text({}), {}, {}};
        }
        std::map<std::string, FunctionResult> results;
        std::vector<Diagnostic> diags;
        bool stable = false;
        for (int round = 0; round < kMaxRounds && !stable; ++round) {
            diags.clear();
            results.clear();
            stable = true;
            for (const auto &name : group) {
                results[name] = analyze(*program_.find_function(name), diags);
                stable = stable && results[name].summary == summaries_[name];
                summaries_[name] = results[name].summary;
            }
        }
        if (!stable) {
            for (const auto &name : group) {
                const FunctionDecl &fn = *program_.find_function(name);
                summaries_[name] = conservative_summary(fn, program_);
                results[name].summary = summaries_[name];
                diags.push_back({"widened", name, "summary did not stabilize after " + std::to_string(kMaxRounds) +
                                                      " rounds; using the conservative summary"});
            }
        }
        report.diagnostics.insert(report.diagnostics.end(), diags.begin(), diags.end());
        for (auto &[name, r] : results) {
            report.functions[name] = std::move(r);
        }
    }

    const Program &program_;
    const RunConfig &cfg_;
    Gateway gateway_;
    ObjectFactory factory_;
    std::map<std::string, FunctionSummary> summaries_;
    std::map<std::string, std::pair<NLSummary, std::vector<SummaryOp>>> decoded_;
    std::vector<Diagnostic> decode_diags_;
    SummaryDecoder decode_;
};

} // namespace

AnalysisReport analyze_program(const Program &program, const RunConfig &cfg) {
    AnalysisReport report = Analyzer(program, cfg).run();
    if (cfg.oracle) {
        report.oracle = compare_with_oracle(program, report);
    }
    return report;
}

AnalysisReport analyze_file(const RunConfig &cfg) {
    std::ifstream in(cfg.input);
    if (!in) {
        throw std::invalid_argument("cannot read " + cfg.input);
    }
    std::stringstream text;
    text << in.rdbuf();
    return analyze_program(lower_to_ir(parse_module(text.str())), cfg);
}

OracleComparison compare_with_oracle(const Program &program, const AnalysisReport &report) {
    auto reference = oracle_inline_analyze(program, report.specs());
    OracleComparison cmp;
    for (const auto &[name, r] : report.functions) {
        if (r.graph) {
            cmp.functions[name] = compare_facts(*r.graph, reference.at(name));
        }
    }
    return cmp;
}

std::size_t OracleComparison::missing() const {
    std::size_t n = 0;
    for (const auto &[name, d] : functions) {
        n += d.missing.size();
    }
    return n;
}

std::size_t OracleComparison::extra() const {
    std::size_t n = 0;
    for (const auto &[name, d] : functions) {
        n += d.extra.size();
    }
    return n;
}

std::map<std::string, ParamSpec> AnalysisReport::specs() const {
    std::map<std::string, ParamSpec> out;
    for (const auto &[name, r] : functions) {
        if (r.spec) {
            out.emplace(name, *r.spec);
        }
    }
    return out;
}

json AnalysisReport::to_json(const std::set<std::string> &emit_targets) const {
    std::set<std::string> emit = emit_targets;
    if (emit.empty()) {
        emit = {"pts", "summaries", "verdicts", "paramspecs"};
    }
    json out;
    out["provenance"] = {{"provider", provenance}};
    json names = json::array();
    for (const auto &[name, r] : functions) {
        names.push_back(name);
    }
    out["functions"] = names;
    if (emit.count("pts")) {
        json pts = json::object();
        for (const auto &[name, r] : functions) {
            if (r.graph) {
                pts[name] = r.graph->to_json();
            }
        }
        out["pts"] = pts;
    }
    if (emit.count("summaries")) {
        json list = json::array();
        for (const auto &[name, r] : functions) {
            list.push_back(summary_to_json(name, r.summary));
        }
        out["summaries"] = list;
    }
    if (emit.count("verdicts")) {
        json list = json::array();
        for (const auto &[name, r] : functions) {
            list.push_back(r.verdict.to_json(name));
        }
        out["verdicts"] = list;
    }
    if (emit.count("paramspecs")) {
        json list = json::array();
        for (const auto &[name, r] : functions) {
            if (r.spec) {
                list.push_back(r.spec->to_json());
            }
        }
        out["paramspecs"] = list;
    }
    if (emit.count("callgraph")) {
        json edges = json::array();
        for (const auto &e : callgraph.edges) {
            edges.push_back({{"caller", e.caller}, {"callee", e.callee}, {"site", e.site}});
        }
        out["callgraph"] = {{"nodes", callgraph.nodes}, {"edges", edges}, {"order", order.groups}};
    }
    if (emit.count("apis")) {
        json apis = api_catalog_json();
        std::sort(apis.begin(), apis.end(), [](const json &a, const json &b) { return a["name"] < b["name"]; });
        out["apis"] = apis;
    }
    json diags = json::array();
    for (const auto &d : diagnostics) {
        diags.push_back({{"kind", d.kind}, {"function", d.function}, {"message", d.message}});
    }
    out["diagnostics"] = diags;
    if (oracle) {
        json per = json::object();
        auto facts = [](const FactSet &set) {
            json list = json::array();
            for (const auto &[node, object] : set) {
                list.push_back({node, object});
            }
            return list;
        };
        for (const auto &[name, d] : oracle->functions) {
            per[name] = {{"missing", facts(d.missing)}, {"extra", facts(d.extra)}};
        }
        out["oracle"] = {{"functions", per}, {"missing_total", oracle->missing()}, {"extra_total", oracle->extra()}};
    }
    return out;
}

std::set<std::string> parse_emit(const std::string &text) {
    std::set<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) {
            continue;
        }
        if (!kEmitTargets.count(item)) {
            throw std::invalid_argument("unknown emit target '" + item + "'");
        }
        out.insert(item);
    }
    return out;
}

} // namespace lmpa
