#include "support.hpp"

#include "lmpa/error.hpp"
#include "lmpa/pipeline.hpp"

#include <doctest.h>

using namespace lmpa;

namespace {

RunConfig config(const std::string &rel, const std::string &fixtures = {}) {
    RunConfig cfg;
    cfg.input = test::corpus(rel);
    cfg.provider = fixtures.empty() ? ProviderConfig::off() : ProviderConfig::mock(test::corpus(fixtures));
    return cfg;
}

bool main_alias(const AnalysisReport &report) {
    const auto &g = *report.functions.at("main").graph;
    return query_alias(g, g.value_node("newargv_a"), g.value_node("argv_b"));
}

const char *const kRecursive = R"(
struct node { next: ptr<node>; data: ptr<char>; }
fn last(n: ptr<node>) -> ptr<node> {
    let r: ptr<node>;
    let m: ptr<node>;
    if (n->next == null) {
        return n;
    }
    m = n->next;
    r = last(m);
    return r;
}
fn ping(n: ptr<node>, d: ptr<char>) -> int {
    n->data = d;
    pong(n->next, d);
    return 0;
}
fn pong(n: ptr<node>, d: ptr<char>) -> int {
    ping(n, d);
    return 0;
}
fn grow(n: ptr<node>) -> int {
    let fresh: ptr<node>;
    fresh = malloc(16);
    fresh->next = n;
    n->next = fresh;
    grow(fresh);
    return 0;
}
)";

} // namespace

TEST_CASE("an api-list function is never solved") {
    auto report = analyze_file(config("ex1/copy_argv.mc", "ex1/fixtures"));
    const auto &copy = report.functions.at("copy_argv");
    CHECK(copy.verdict.abstractable);
    CHECK(std::holds_alternative<ApiListSummary>(copy.summary));
    CHECK_FALSE(copy.spec);
    CHECK_FALSE(copy.graph);
    CHECK_FALSE(copy.raw);
    CHECK_FALSE(report.specs().count("copy_argv"));
    for (const char *caller : {"caller_a", "caller_b", "main"}) {
        CHECK(std::holds_alternative<NLSummary>(report.functions.at(caller).summary));
    }
}

TEST_CASE("api-list summaries keep independent callers apart") {
    auto precise = analyze_file(config("ex1/copy_argv.mc", "ex1/fixtures"));
    CHECK_FALSE(main_alias(precise));

    auto cfg = config("ex1/copy_argv.mc", "ex1/fixtures");
    cfg.force_conservative = {"copy_argv"};
    auto conservative = analyze_file(cfg);
    CHECK(std::holds_alternative<ConservativeSummary>(conservative.functions.at("copy_argv").summary));
    CHECK(main_alias(conservative));
}

TEST_CASE("reports are deterministic") {
    for (const char *rel : {"ex1/copy_argv.mc", "ex3/ngx_palloc.mc", "kill/overwrite.mc"}) {
        auto a = analyze_file(config(rel)).to_json(kEmitTargets).dump();
        auto b = analyze_file(config(rel)).to_json(kEmitTargets).dump();
        CHECK(a == b);
    }
}

TEST_CASE("report sections follow the emit list") {
    auto report = analyze_file(config("ex3/ngx_palloc.mc"));
    auto doc = report.to_json({"callgraph"});
    CHECK(doc.contains("callgraph"));
    CHECK(doc.contains("diagnostics"));
    CHECK_FALSE(doc.contains("pts"));
    auto full = report.to_json({});
    for (const char *key : {"pts", "summaries", "verdicts", "paramspecs", "provenance"}) {
        CHECK(full.contains(key));
    }
    CHECK(full["provenance"]["provider"] == "off");
    CHECK(parse_emit("pts,apis") == std::set<std::string>{"pts", "apis"});
    CHECK_THROWS_AS(parse_emit("pts,bogus"), std::invalid_argument);
}

TEST_CASE("the palloc summary carries its path condition to callers") {
    auto report = analyze_file(config("ex3/ngx_palloc.mc"));
    const auto &raw = *report.functions.at("ngx_palloc_large").raw;
    int allocs = 0, large_stores = 0;
    for (const auto &op : raw.ops) {
        allocs += op.op == OpKind::Alloc;
        large_stores += op.op == OpKind::Store && op.dst.str() == "param:0->large";
    }
    CHECK(allocs == 1);
    CHECK(large_stores == 1);
    const auto &nl = std::get<NLSummary>(report.functions.at("ngx_palloc").summary);
    CHECK(std::find(nl.conditions.begin(), nl.conditions.end(), "size > pool->size") != nl.conditions.end());

    const auto &g = *report.functions.at("ngx_create_request").graph;
    auto fresh = [&](const ObjSet &set) {
        for (ObjectId o : set) {
            if (g.object(o).kind == ObjectKind::HeapSite) {
                return true;
            }
        }
        return false;
    };
    ObjectId pool = *g.pts(g.value_node("pool")).begin();
    CHECK(fresh(g.pts(g.value_node("r"))));
    CHECK(fresh(g.pts(Node::field(pool, "large"))));
}

TEST_CASE("summary-based facts agree with inlining on the bundled corpus") {
    for (const char *rel : {"ex1/copy_argv.mc", "ex2/ngx_set_user.mc", "ex3/ngx_palloc.mc", "kill/overwrite.mc"}) {
        auto cfg = config(rel);
        cfg.oracle = true;
        auto report = analyze_file(cfg);
        REQUIRE(report.oracle);
        INFO(rel);
        CHECK(report.oracle->missing() == 0);
        CHECK(report.oracle->extra() == 0);
    }
}

TEST_CASE("recursive groups are iterated and stay sound") {
    Program p = test::lowered(kRecursive);
    RunConfig cfg;
    auto report = analyze_program(p, cfg);
    CHECK(report.functions.size() == 4);
    for (const auto &[name, result] : report.functions) {
        INFO(name);
        bool widened = std::any_of(report.diagnostics.begin(), report.diagnostics.end(),
                                   [&](const Diagnostic &d) { return d.kind == "widened" && d.function == name; });
        CHECK(widened == std::holds_alternative<ConservativeSummary>(result.summary));
    }
    const auto &nl = std::get<NLSummary>(report.functions.at("last").summary);
    std::set<std::string> rets;
    for (const auto &op : nl.raw.ops) {
        if (op.dst.str() == "ret" && op.src) {
            rets.insert(op.src->str());
        }
    }
    CHECK(rets.count("param:0"));
    CHECK(rets.count("param:0->next"));
    CHECK(rets.count("param:0->next->next"));

    cfg.oracle = true;
    CHECK_THROWS_AS(analyze_program(p, cfg), RecursiveProgram);
}
