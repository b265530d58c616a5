#include "lmpa/summary_ir.hpp"

#include "lmpa/error.hpp"

#include <sstream>

namespace lmpa {

using nlohmann::json;

std::string to_string(OpKind kind) {
    switch (kind) {
    case OpKind::Alloc: return "alloc";
    case OpKind::Store: return "store";
    case OpKind::Copy: return "copy";
    case OpKind::Return: return "return";
    case OpKind::Kill: return "kill";
    }
    return "?";
}

OpKind op_kind_from_string(const std::string &text) {
    for (OpKind k : {OpKind::Alloc, OpKind::Store, OpKind::Copy, OpKind::Return, OpKind::Kill}) {
        if (to_string(k) == text) {
            return k;
        }
    }
    throw SchemaViolation("unknown op '" + text + "'");
}

json SummaryOp::to_json() const {
    return {{"op", to_string(op)},
            {"dst", dst.str()},
            {"src", src ? json(src->str()) : json(nullptr)},
            {"cond", cond ? json(*cond) : json(nullptr)}};
}

SummaryOp SummaryOp::from_json(const json &doc) {
    if (!doc.is_object() || !doc.contains("op") || !doc["op"].is_string() || !doc.contains("dst") ||
        !doc["dst"].is_string()) {
        throw SchemaViolation("summary op needs string fields 'op' and 'dst': " + doc.dump());
    }
    SummaryOp op;
    op.op = op_kind_from_string(doc["op"].get<std::string>());
    op.dst = AccessPath::parse(doc["dst"].get<std::string>());
    if (doc.contains("src") && !doc["src"].is_null()) {
        if (!doc["src"].is_string()) {
            throw SchemaViolation("summary op 'src' must be a string or null");
        }
        op.src = AccessPath::parse(doc["src"].get<std::string>());
    }
    if (doc.contains("cond") && !doc["cond"].is_null()) {
        if (!doc["cond"].is_string()) {
            throw SchemaViolation("summary op 'cond' must be a string or null");
        }
        op.cond = doc["cond"].get<std::string>();
    }
    if (op.op != OpKind::Kill && !op.src) {
        throw SchemaViolation(to_string(op.op) + " op needs a 'src'");
    }
    return op;
}

json ops_to_json(const std::vector<SummaryOp> &ops) {
    json out = json::array();
    for (const auto &op : ops) {
        out.push_back(op.to_json());
    }
    return out;
}

std::vector<SummaryOp> ops_from_json(const json &doc) {
    if (!doc.is_array()) {
        throw SchemaViolation("ops must be an array");
    }
    std::vector<SummaryOp> out;
    for (const auto &e : doc) {
        out.push_back(SummaryOp::from_json(e));
    }
    return out;
}

std::vector<SummaryOp> RawSummary::superset() const {
    std::vector<SummaryOp> out;
    for (const auto &op : ops) {
        if (op.op != OpKind::Kill) {
            out.push_back(op);
        }
    }
    return out;
}

std::vector<SummaryOp> RawSummary::kills() const {
    std::vector<SummaryOp> out;
    for (const auto &op : ops) {
        if (op.op == OpKind::Kill) {
            out.push_back(op);
        }
    }
    return out;
}

json ApiCall::to_json() const { return {{"api", api}, {"arg_map", arg_map}}; }

ApiCall ApiCall::from_json(const json &doc) {
    if (!doc.is_object() || !doc.contains("api") || !doc["api"].is_string() || !doc.contains("arg_map") ||
        !doc["arg_map"].is_object()) {
        throw SchemaViolation("api call needs 'api' and 'arg_map': " + doc.dump());
    }
    ApiCall call;
    call.api = doc["api"].get<std::string>();
    for (const auto &[k, v] : doc["arg_map"].items()) {
        if (!v.is_string()) {
            throw SchemaViolation("arg_map values must be strings");
        }
        call.arg_map[k] = v.get<std::string>();
    }
    return call;
}

json summary_to_json(const std::string &function, const FunctionSummary &summary) {
    json out = {{"function", function}};
    if (const auto *list = std::get_if<ApiListSummary>(&summary)) {
        json calls = json::array();
        for (const auto &c : list->calls) {
            calls.push_back(c.to_json());
        }
        out["kind"] = "api_list";
        out["api_list"] = calls;
        out["ops"] = json::array();
        out["conditions"] = json::array();
    } else if (const auto *nl = std::get_if<NLSummary>(&summary)) {
        out["kind"] = "nl";
        out["text"] = nl->text;
        out["ops"] = ops_to_json(nl->raw.ops);
        out["conditions"] = nl->conditions;
    } else {
        out["kind"] = "conservative";
        out["ops"] = ops_to_json(std::get<ConservativeSummary>(summary).ops);
        out["conditions"] = json::array();
    }
    return out;
}

namespace {

constexpr const char *kNoEffects = "no externally visible pointer effects";
constexpr const char *kUnder = " under condition ";

struct Phrase {
    OpKind op;
    const char *verb;
    const char *link;
};

constexpr Phrase kPhrases[] = {
    {OpKind::Alloc, "allocates ", " into "},
    {OpKind::Store, "stores ", " into "},
    {OpKind::Copy, "copies ", " into "},
    {OpKind::Return, "returns ", " through "},
    {OpKind::Kill, "kills ", " at "},
};

} // namespace

std::string render_ops_text(const std::vector<SummaryOp> &ops) {
    if (ops.empty()) {
        return kNoEffects;
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const SummaryOp &op = ops[i];
        for (const auto &p : kPhrases) {
            if (p.op != op.op) {
                continue;
            }
            if (op.src) {
                out << p.verb << op.src->str() << p.link << op.dst.str();
            } else {
                out << "kills every fact at " << op.dst.str();
            }
        }
        if (op.cond) {
            out << kUnder << *op.cond;
        }
        out << ".";
        if (i + 1 < ops.size()) {
            out << "\n";
        }
    }
    return out.str();
}

std::vector<SummaryOp> parse_ops_text(const std::string &text) {
    std::vector<SummaryOp> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.back() != '.') {
            continue;
        }
        line.pop_back();
        SummaryOp op;
        if (auto at = line.find(kUnder); at != std::string::npos) {
            op.cond = line.substr(at + std::string(kUnder).size());
            line = line.substr(0, at);
        }
        try {
            if (line.rfind("kills every fact at ", 0) == 0) {
                op.op = OpKind::Kill;
                op.dst = AccessPath::parse(line.substr(20));
                out.push_back(std::move(op));
                continue;
            }
            for (const auto &p : kPhrases) {
                std::string verb = p.verb;
                if (line.rfind(verb, 0) != 0) {
                    continue;
                }
                auto link = line.find(p.link, verb.size());
                if (link == std::string::npos) {
                    break;
                }
                op.op = p.op;
                op.src = AccessPath::parse(line.substr(verb.size(), link - verb.size()));
                op.dst = AccessPath::parse(line.substr(link + std::string(p.link).size()));
                out.push_back(std::move(op));
                break;
            }
        } catch (const InvalidPath &) {
        }
    }
    return out;
}

} // namespace lmpa
