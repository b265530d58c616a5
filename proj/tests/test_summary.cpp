#include "support.hpp"

#include "lmpa/pipeline.hpp"
#include "lmpa/summary.hpp"

#include <doctest.h>

using namespace lmpa;

namespace {

AnalysisReport run(const std::string &rel, const std::string &fixtures = {}) {
    RunConfig cfg;
    cfg.input = test::corpus(rel);
    cfg.provider = fixtures.empty() ? ProviderConfig::off() : ProviderConfig::mock(test::corpus(fixtures));
    return analyze_file(cfg);
}

std::vector<SummaryOp> without_conditions(std::vector<SummaryOp> ops) {
    for (auto &op : ops) {
        op.cond.reset();
    }
    return ops;
}

SummaryOp op(OpKind kind, const std::string &dst, const std::string &src, std::optional<std::string> cond = {}) {
    return {kind, AccessPath::parse(dst), AccessPath::parse(src), std::move(cond)};
}

const char *const kCorpus[] = {"ex1/copy_argv.mc", "ex2/ngx_set_user.mc", "ex3/ngx_palloc.mc", "kill/overwrite.mc"};

} // namespace

TEST_CASE("fresh-renaming comparison") {
    std::vector<SummaryOp> a = {op(OpKind::Alloc, "ret", "fresh:a"), op(OpKind::Store, "fresh:a->f", "fresh:b")};
    std::vector<SummaryOp> b = {op(OpKind::Store, "fresh:y->f", "fresh:x"), op(OpKind::Alloc, "ret", "fresh:y")};
    CHECK(test::equal_modulo_fresh(a, b));
    b[0] = op(OpKind::Store, "fresh:y->f", "fresh:y");
    CHECK_FALSE(test::equal_modulo_fresh(a, b));
    CHECK_FALSE(test::subsumed_modulo_fresh(a, b));
    CHECK(test::subsumed_modulo_fresh({op(OpKind::Alloc, "ret", "fresh:q")}, b));
}

TEST_CASE("rendered text parses back to the same ops") {
    std::vector<SummaryOp> ops = {op(OpKind::Alloc, "ret", "fresh:chunk"),
                                  op(OpKind::Store, "param:0->large", "fresh:chunk", "size > pool->size"),
                                  op(OpKind::Copy, "param:1->user", "param:0->args->elts"),
                                  op(OpKind::Return, "ret", "&global:g")};
    ops.push_back({OpKind::Kill, AccessPath::parse("param:0->val"), std::nullopt, std::nullopt});
    CHECK(parse_ops_text(render_ops_text(ops)) == ops);
    CHECK(parse_ops_text(render_ops_text({})).empty());
}

TEST_CASE("echo encode then decode reproduces every raw summary") {
    Gateway echo(ProviderConfig::mock(test::corpus("echo")));
    int checked = 0;
    for (const char *rel : kCorpus) {
        Program program = test::lowered(test::slurp(test::corpus(rel)));
        auto report = run(rel);
        for (const auto &[name, result] : report.functions) {
            if (!result.raw) {
                continue;
            }
            const FunctionDecl &fn = *program.find_function(name);
            std::vector<Diagnostic> diags;
            NLSummary nl = encode_summary(*result.raw, fn, program, echo, &diags);
            auto decoded = decode_summary(nl, fn, program, echo, &diags);
            INFO(rel, " ", name);
            CHECK(test::equal_modulo_fresh(decoded, result.raw->ops));
            CHECK(nl.conditions == result.raw->conditions);
            CHECK(diags.empty());
            ++checked;
        }
    }
    CHECK(checked >= 8);
}

TEST_CASE("clamp keeps only ops the raw superset subsumes") {
    Program program = test::lowered(test::slurp(test::corpus("ex3/ngx_palloc.mc")));
    for (const char *fixtures : {"ex3/fixtures", "ex3/fixtures_adversarial"}) {
        auto report = run("ex3/ngx_palloc.mc", fixtures);
        Gateway gateway(ProviderConfig::mock(test::corpus(fixtures)));
        for (const char *name : {"ngx_palloc", "ngx_palloc_large"}) {
            const auto &nl = std::get<NLSummary>(report.functions.at(name).summary);
            auto decoded = decode_summary(nl, *program.find_function(name), program, gateway);
            std::vector<SummaryOp> facts;
            for (const auto &o : decoded) {
                if (o.op != OpKind::Kill) {
                    facts.push_back(o);
                }
            }
            INFO(fixtures, " ", name);
            CHECK_FALSE(facts.empty());
            CHECK(test::subsumed_modulo_fresh(without_conditions(facts), without_conditions(nl.raw.superset())));
        }
    }
}

TEST_CASE("clamp drops invented, ill-typed and unknown-kill ops") {
    Program program = test::lowered(test::slurp(test::corpus("ex3/ngx_palloc.mc")));
    const FunctionDecl &fn = *program.find_function("ngx_palloc_large");
    RawSummary raw;
    raw.ops = {op(OpKind::Alloc, "ret", "fresh:heap"), op(OpKind::Store, "param:0->large", "fresh:heap")};
    std::vector<SummaryOp> proposed = {
        op(OpKind::Alloc, "ret", "fresh:chunk"),
        op(OpKind::Store, "param:0->large", "fresh:chunk"),
        op(OpKind::Store, "param:0->large->next", "param:0->large"),
        op(OpKind::Store, "param:0->size", "fresh:chunk"),
    };
    proposed.push_back({OpKind::Kill, AccessPath::parse("param:0->large->next"), std::nullopt, std::nullopt});
    auto result = validate_decoded(proposed, raw, fn, program);
    CHECK(result.ops == raw.ops);
    int drops = 0;
    for (const auto &d : result.diagnostics) {
        drops += d.kind == "clamp_drop";
    }
    CHECK(drops == 3);
}

TEST_CASE("adversarial decode answer changes nothing downstream") {
    auto normal = run("ex3/ngx_palloc.mc", "ex3/fixtures");
    auto adversarial = run("ex3/ngx_palloc.mc", "ex3/fixtures_adversarial");
    CHECK(normal.to_json({"pts"})["pts"] == adversarial.to_json({"pts"})["pts"]);
    int drops = 0;
    for (const auto &d : adversarial.diagnostics) {
        drops += d.kind == "clamp_drop";
    }
    CHECK(drops == 1);
    for (const auto &d : normal.diagnostics) {
        CHECK(d.kind != "clamp_drop");
    }
}

TEST_CASE("kill ops narrow caller facts to the flow-sensitive result") {
    auto plain = run("kill/overwrite.mc");
    auto refined = run("kill/overwrite.mc", "kill/fixtures");
    const auto &g0 = *plain.functions.at("main").graph;
    const auto &g1 = *refined.functions.at("main").graph;
    auto val = [](const PointsToGraph &g) {
        ObjectId box = *g.pts(Node::var("b")).begin();
        return g.labels(g.pts(Node::field(box, "val")));
    };
    auto labels = [](const PointsToGraph &g, const char *var) { return g.labels(g.pts(Node::var(var))); };
    CHECK(val(g0).size() == 2);
    CHECK(val(g1) == labels(g1, "y"));
    CHECK(labels(g1, "seen") == labels(g1, "y"));
    CHECK(labels(g0, "seen").size() == 2);
    const auto &raw = *refined.functions.at("set_twice").raw;
    CHECK(raw.kills().size() == 1);
    CHECK(raw.superset().size() == 2);
}

TEST_CASE("conservative summary covers every pointer-typed location") {
    Program program = test::lowered(test::slurp(test::corpus("ex2/ngx_set_user.mc")));
    auto cons = conservative_summary(*program.find_function("ngx_set_user"), program);
    std::set<std::string> dsts;
    for (const auto &o : cons.ops) {
        dsts.insert(o.dst.str());
    }
    CHECK(dsts.count("param:0->args->elts"));
    CHECK(dsts.count("param:0->log"));
    CHECK(dsts.count("param:1->user"));
    CHECK(dsts.count("param:1->group"));
}
