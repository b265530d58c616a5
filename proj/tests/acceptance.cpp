// Prints one PASS/FAIL line per acceptance criterion; exits non-zero when
// any criterion fails.

#include "support.hpp"

#include "lmpa/param_spec.hpp"
#include "lmpa/pipeline.hpp"
#include "lmpa/summary.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

using namespace lmpa;
namespace fs = std::filesystem;

namespace {

/// Collects the first failed expectation of a criterion.
class Check {
public:
    void expect(bool ok, const std::string &what) {
        if (!ok && failure_.empty()) {
            failure_ = what;
        }
    }
    bool ok() const { return failure_.empty(); }
    const std::string &failure() const { return failure_; }

private:
    std::string failure_;
};

RunConfig config(const std::string &rel, const std::string &fixtures = {}) {
    RunConfig cfg;
    cfg.input = test::corpus(rel);
    cfg.provider = fixtures.empty() ? ProviderConfig::off() : ProviderConfig::mock(test::corpus(fixtures));
    return cfg;
}

std::size_t count_kind(const std::vector<Diagnostic> &diags, const std::string &kind) {
    return static_cast<std::size_t>(
        std::count_if(diags.begin(), diags.end(), [&](const Diagnostic &d) { return d.kind == kind; }));
}

std::set<std::string> labels(const PointsToGraph &g, const Node &node) {
    auto v = g.labels(g.pts(node));
    return {v.begin(), v.end()};
}

void example1(Check &c) {
    const std::string expected =
        R"({"api_list":[{"api":"malloc","arg_map":{"ret":"ret","size":"argc"}},)"
        R"({"api":"memcpy","arg_map":{"dst":"ret","size":"argc","src":"argv"}}],)"
        R"("function":"copy_argv","verdict":"abstractable"})";
    auto report = analyze_file(config("ex1/copy_argv.mc", "ex1/fixtures"));
    std::string verdict;
    auto doc = report.to_json({"verdicts"});
    for (const auto &v : doc["verdicts"]) {
        if (v["function"] == "copy_argv") {
            verdict = v.dump();
        }
    }
    c.expect(verdict == expected, "copy_argv verdict is " + verdict);
    const auto &g = *report.functions.at("main").graph;
    c.expect(!query_alias(g, g.value_node("newargv_a"), g.value_node("argv_b")),
             "caller A's result aliases caller B's argument under the api-list summary");

    auto control_cfg = config("ex1/copy_argv.mc", "ex1/fixtures");
    control_cfg.force_conservative = {"copy_argv"};
    auto control = analyze_file(control_cfg);
    const auto &h = *control.functions.at("main").graph;
    c.expect(query_alias(h, h.value_node("newargv_a"), h.value_node("argv_b")),
             "the conservative control run shows no alias");
}

void example2(Check &c) {
    Program program = test::lowered(test::slurp(test::corpus("ex2/ngx_set_user.mc")));
    const auto &fn = *program.find_function("ngx_set_user");
    for (const char *fixtures : {"", "ex2/fixtures_permissive"}) {
        std::string mode = *fixtures ? fixtures : "fallback";
        auto report = analyze_file(config("ex2/ngx_set_user.mc", fixtures));
        ObjectFactory factory;
        auto env = init_points_to_env(report.specs().at("ngx_set_user"), fn, program, factory);
        std::set<std::string> virtuals;
        test::Facts relations;
        for (const auto &[id, obj] : env.objects) {
            if (obj.is_virtual()) {
                virtuals.insert(obj.label);
            }
        }
        for (const auto &[key, set] : env.field_pts) {
            for (ObjectId o : set) {
                relations.emplace(env.object(key.first).label + "." + key.second, env.object(o).label);
            }
        }
        c.expect(virtuals == std::set<std::string>{"o1", "o2", "o3", "o4", "o5"}, mode + ": virtual objects differ");
        c.expect(relations == test::Facts{{"o1.args", "o3"}, {"o3.elts", "o4"}, {"o2.user", "o5"}},
                 mode + ": field relations differ");

        const auto &g = *report.functions.at("ngx_set_user").graph;
        std::set<std::string> solved_virtuals;
        for (const auto &[id, obj] : g.objects) {
            if (obj.is_virtual()) {
                solved_virtuals.insert(obj.label);
            }
        }
        c.expect(solved_virtuals == virtuals, mode + ": solving created more virtual objects");
        c.expect(labels(g, g.value_node("cf")) == std::set<std::string>{"o1"}, mode + ": cf is not o1");
        c.expect(labels(g, g.value_node("ccf")) == std::set<std::string>{"o2"}, mode + ": ccf is not o2");
        c.expect(labels(g, g.value_node("value")) == std::set<std::string>{"o4"}, mode + ": value is not o4");
    }
}

void example3(Check &c) {
    for (const char *fixtures : {"", "ex3/fixtures"}) {
        std::string mode = *fixtures ? fixtures : "off";
        auto report = analyze_file(config("ex3/ngx_palloc.mc", fixtures));
        const auto &raw = *report.functions.at("ngx_palloc_large").raw;
        std::size_t allocs = 0, stores = 0;
        for (const auto &op : raw.ops) {
            allocs += op.op == OpKind::Alloc;
            stores += op.op == OpKind::Store && op.dst.str() == "param:0->large";
        }
        c.expect(allocs == 1 && stores == 1, mode + ": raw summary lacks one alloc and one store to param:0->large");
        const auto &nl = std::get<NLSummary>(report.functions.at("ngx_palloc").summary);
        c.expect(std::find(nl.conditions.begin(), nl.conditions.end(), "size > pool->size") != nl.conditions.end(),
                 mode + ": condition missing from the encoded summary");
        const auto &g = *report.functions.at("ngx_create_request").graph;
        std::optional<ObjectId> fresh;
        for (const auto &[id, obj] : g.objects) {
            if (obj.kind == ObjectKind::HeapSite && obj.label.find("ngx_create_request:") != std::string::npos) {
                fresh = id;
            }
        }
        c.expect(fresh.has_value(), mode + ": no fresh object in the caller");
        if (!fresh) {
            continue;
        }
        ObjectId pool = *g.pts(g.value_node("pool")).begin();
        c.expect(g.pts(g.value_node("r")).count(*fresh) == 1, mode + ": pts(p) lacks the fresh object");
        c.expect(g.pts(Node::field(pool, "large")).count(*fresh) == 1, mode + ": pts(pool.large) lacks the fresh object");
    }
}

std::vector<GeneratedProgram> &generated() {
    static std::vector<GeneratedProgram> corpus = generate_corpus(200, 42);
    return corpus;
}

void oracle_soundness(Check &c) {
    std::size_t straight = 0;
    for (const auto &g : generated()) {
        RunConfig cfg;
        cfg.oracle = true;
        auto report = analyze_program(test::lowered(g.source), cfg);
        c.expect(report.oracle->missing() == 0, g.name + ": missing facts");
        if (g.shape == ProgramShape::StraightLineSingleCall) {
            ++straight;
            c.expect(report.oracle->extra() == 0, g.name + ": extra facts on a straight-line program");
        }
    }
    c.expect(straight == 50, "expected 50 straight-line programs");
}

void clamp_soundness(Check &c) {
    std::size_t checked = 0;
    for (const auto &dir : fs::directory_iterator(test::corpus(""))) {
        for (const auto &fixtures : fs::directory_iterator(dir.path())) {
            if (!fixtures.is_directory()) {
                continue;
            }
            for (const auto &file : fs::directory_iterator(fixtures.path())) {
                std::string name = file.path().filename().string();
                const std::string prefix = "summary_decode__";
                if (name.rfind(prefix, 0) != 0 || name == prefix + "default.json") {
                    continue;
                }
                std::string fn = name.substr(prefix.size(), name.size() - prefix.size() - 5);
                fs::path source;
                for (const auto &f : fs::directory_iterator(dir.path())) {
                    if (f.path().extension() == ".mc") {
                        source = f.path();
                    }
                }
                RunConfig cfg;
                cfg.input = source.string();
                cfg.provider = ProviderConfig::mock(fixtures.path().string());
                auto report = analyze_file(cfg);
                Program program = test::lowered(test::slurp(source.string()));
                Gateway gateway(cfg.provider);
                const auto &nl = std::get<NLSummary>(report.functions.at(fn).summary);
                std::vector<SummaryOp> kept;
                for (auto op : decode_summary(nl, *program.find_function(fn), program, gateway)) {
                    if (op.op != OpKind::Kill) {
                        op.cond.reset();
                        kept.push_back(op);
                    }
                }
                auto superset = nl.raw.superset();
                for (auto &op : superset) {
                    op.cond.reset();
                }
                c.expect(test::subsumed_modulo_fresh(kept, superset), name + " in " + fixtures.path().string());
                ++checked;
            }
        }
    }
    c.expect(checked >= 4, "fewer decode fixtures than expected");

    auto normal = analyze_file(config("ex3/ngx_palloc.mc", "ex3/fixtures"));
    auto adversarial = analyze_file(config("ex3/ngx_palloc.mc", "ex3/fixtures_adversarial"));
    c.expect(count_kind(adversarial.diagnostics, "clamp_drop") == 1, "adversarial fixture: expected one drop");
    c.expect(count_kind(normal.diagnostics, "clamp_drop") == 0, "normal fixture: unexpected drop");
    c.expect(normal.to_json({"pts"})["pts"] == adversarial.to_json({"pts"})["pts"],
             "adversarial fixture changed points-to sets");
}

const char *const kBundled[] = {"ex1/copy_argv.mc", "ex2/ngx_set_user.mc", "ex3/ngx_palloc.mc", "kill/overwrite.mc"};

void round_trip(Check &c) {
    Gateway echo(ProviderConfig::mock(test::corpus("echo")));
    std::size_t checked = 0;
    for (const char *rel : kBundled) {
        Program program = test::lowered(test::slurp(test::corpus(rel)));
        auto report = analyze_file(config(rel));
        for (const auto &[name, result] : report.functions) {
            if (!result.raw) {
                continue;
            }
            const auto &fn = *program.find_function(name);
            auto nl = encode_summary(*result.raw, fn, program, echo);
            auto decoded = decode_summary(nl, fn, program, echo);
            c.expect(test::equal_modulo_fresh(decoded, result.raw->ops), std::string(rel) + ": " + name);
            ++checked;
        }
    }
    c.expect(checked >= 8, "too few functions round-tripped");
}

void kill_precision(Check &c) {
    auto plain = analyze_file(config("kill/overwrite.mc"));
    auto refined = analyze_file(config("kill/overwrite.mc", "kill/fixtures"));
    const auto &g0 = *plain.functions.at("main").graph;
    const auto &g1 = *refined.functions.at("main").graph;
    auto val = [](const PointsToGraph &g) { return labels(g, Node::field(*g.find_label("heap@main:4"), "val")); };
    // b, x and y are allocated at statements 4, 5 and 6; after set_twice
    // only the second store survives.
    const std::set<std::string> flow_sensitive = {"heap@main:6"};
    const std::set<std::string> insensitive = {"heap@main:5", "heap@main:6"};
    c.expect(val(g0) == insensitive, "b->val without the kill");
    c.expect(val(g1) == flow_sensitive, "b->val with the kill");
    c.expect(labels(g1, g1.value_node("seen")) == flow_sensitive, "seen with the kill");
    c.expect(labels(g0, g0.value_node("seen")) == insensitive, "seen without the kill");
    for (const auto &[name, _] : g1.var_pts) {
        auto with = labels(g1, Node::var(name));
        auto without = labels(g0, Node::var(name));
        c.expect(std::includes(without.begin(), without.end(), with.begin(), with.end()), "kill added facts to " + name);
    }
}

std::string full_corpus_run() {
    std::ostringstream out;
    const std::pair<const char *, const char *> runs[] = {
        {"ex1/copy_argv.mc", ""},          {"ex1/copy_argv.mc", "ex1/fixtures"},
        {"ex2/ngx_set_user.mc", ""},       {"ex2/ngx_set_user.mc", "ex2/fixtures"},
        {"ex2/ngx_set_user.mc", "ex2/fixtures_permissive"},
        {"ex3/ngx_palloc.mc", ""},         {"ex3/ngx_palloc.mc", "ex3/fixtures"},
        {"ex3/ngx_palloc.mc", "ex3/fixtures_adversarial"},
        {"kill/overwrite.mc", ""},         {"kill/overwrite.mc", "kill/fixtures"},
    };
    for (const auto &[rel, fixtures] : runs) {
        out << analyze_file(config(rel, fixtures)).to_json(kEmitTargets).dump(2) << "\n";
    }
    for (const auto &g : generated()) {
        out << analyze_program(test::lowered(g.source), RunConfig{}).to_json(kEmitTargets).dump(2) << "\n";
    }
    return out.str();
}

void determinism(Check &c) {
    std::string first = full_corpus_run();
    std::string second = full_corpus_run();
    c.expect(first == second, "reports differ between runs");
    c.expect(first.size() > 1000, "empty reports");
}

void solver_properties(Check &c) {
    std::size_t brute = 0;
    for (const auto &p : test::intra_programs(100)) {
        const auto &fn = p.functions[0];
        auto base = test::solve(fn, p);
        if (test::statement_count(fn) <= 30) {
            c.expect(base == test::brute_force(fn, p), fn.name + ": differs from exhaustive saturation");
            ++brute;
        }
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            SolveOptions opts;
            opts.shuffle_seed = seed;
            test::Facts last;
            bool monotone = true;
            opts.on_step = [&](const PointsToGraph &g) {
                auto now = g.facts();
                monotone &= std::includes(now.begin(), now.end(), last.begin(), last.end());
                last = std::move(now);
            };
            c.expect(test::solve(fn, p, opts) == base, "worklist order changed the fixpoint");
            c.expect(monotone, "a solver step removed a fact");
        }
    }
    c.expect(brute >= 90, "too few programs within the brute-force bound");
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check &)>>> criteria = {
        {"example-1 api-list abstraction removes the spurious alias", example1},
        {"example-2 five virtual objects and three field relations", example2},
        {"example-3 conditional allocation summary reaches the caller", example3},
        {"oracle soundness over 200 generated programs", oracle_soundness},
        {"clamp soundness and adversarial decode", clamp_soundness},
        {"encode/decode round-trip with echo fixtures", round_trip},
        {"kill precision on write-then-overwrite", kill_precision},
        {"determinism of full-corpus reports", determinism},
        {"solver fixpoint properties", solver_properties},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception &e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        std::cout << (c.ok() ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
                  << ms.count() << " ms)";
        if (!c.ok()) {
            std::cout << ": " << c.failure();
            ++failures;
        }
        std::cout << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
