#include "lmpa/llm.hpp"

#include "lmpa/error.hpp"
#include "lmpa/summary_ir.hpp"

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef LMPA_PROMPTS_DIR
#define LMPA_PROMPTS_DIR "prompts"
#endif

namespace lmpa {

using nlohmann::json;

namespace {

std::string env_or(const char *name, const std::string &fallback) {
    const char *value = std::getenv(name);
    return value && *value ? std::string(value) : fallback;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

ProviderConfig ProviderConfig::mock(std::string dir) {
    ProviderConfig cfg;
    cfg.mode = Mode::Mock;
    cfg.mock_dir = std::move(dir);
    return cfg;
}

ProviderConfig ProviderConfig::parse(const std::string &spec) {
    ProviderConfig cfg;
    if (spec == "off") {
        return cfg;
    }
    if (spec.rfind("mock:", 0) == 0) {
        cfg = mock(spec.substr(5));
        if (cfg.mock_dir.empty()) {
            throw std::invalid_argument("mock provider needs a fixture directory");
        }
        if (!std::filesystem::is_directory(cfg.mock_dir)) {
            throw std::invalid_argument("fixture directory '" + cfg.mock_dir + "' does not exist");
        }
        return cfg;
    }
    if (spec.rfind("http:", 0) == 0 || spec == "http") {
        cfg.mode = Mode::Http;
        cfg.endpoint = spec.size() > 5 ? spec.substr(5) : std::string();
        cfg.endpoint = cfg.endpoint.empty() ? env_or("LMPA_LLM_ENDPOINT", "") : cfg.endpoint;
        cfg.model = env_or("LMPA_LLM_MODEL", "default");
        if (cfg.endpoint.empty()) {
            throw std::invalid_argument("http provider needs an endpoint (http:<url> or LMPA_LLM_ENDPOINT)");
        }
        return cfg;
    }
    throw std::invalid_argument("unknown provider '" + spec + "' (expected off, mock:<dir> or http:<url>)");
}

std::string ProviderConfig::describe() const {
    switch (mode) {
    case Mode::Off: return "off";
    case Mode::Mock: return "mock:" + mock_dir;
    case Mode::Http: return "http:" + endpoint;
    }
    return "off";
}

std::string to_string(QueryKind kind) {
    switch (kind) {
    case QueryKind::BehaviorClassify: return "behavior_classify";
    case QueryKind::ParamSpec: return "param_spec";
    case QueryKind::SummaryEncode: return "summary_encode";
    case QueryKind::SummaryDecode: return "summary_decode";
    case QueryKind::SummaryRefine: return "summary_refine";
    }
    return "?";
}

std::string fixture_path(const std::string &dir, QueryKind kind, const std::string &function, int attempt) {
    std::string name = to_string(kind) + "__" + function;
    name += attempt > 0 ? ".retry" + std::to_string(attempt) + ".json" : ".json";
    return (std::filesystem::path(dir) / name).string();
}

namespace {

/// Collects the first schema problem of a document.
class Shape {
public:
    explicit Shape(const json &doc) : doc_(doc) {
        if (!doc.is_object()) {
            error_ = "document is not a JSON object";
        }
    }

    Shape &string(const char *key, bool required = true) {
        return field(key, required, [](const json &v) { return v.is_string(); }, "a string");
    }
    Shape &boolean(const char *key) {
        return field(key, true, [](const json &v) { return v.is_boolean(); }, "a boolean");
    }
    Shape &object(const char *key) {
        return field(key, true, [](const json &v) { return v.is_object(); }, "an object");
    }
    Shape &strings(const char *key) {
        return field(
            key, true,
            [](const json &v) {
                if (!v.is_array()) {
                    return false;
                }
                for (const auto &e : v) {
                    if (!e.is_string()) {
                        return false;
                    }
                }
                return true;
            },
            "an array of strings");
    }
    Shape &array(const char *key, const std::function<std::string(const json &)> &each) {
        field(key, true, [](const json &v) { return v.is_array(); }, "an array");
        if (!error_.empty()) {
            return *this;
        }
        for (std::size_t i = 0; i < doc_[key].size(); ++i) {
            std::string e = each(doc_[key][i]);
            if (!e.empty()) {
                error_ = std::string(key) + "[" + std::to_string(i) + "]: " + e;
                break;
            }
        }
        return *this;
    }
    const std::string &error() const { return error_; }

private:
    template <typename Pred>
    Shape &field(const char *key, bool required, Pred pred, const char *what) {
        if (!error_.empty()) {
            return *this;
        }
        if (!doc_.contains(key) || (!required && doc_[key].is_null())) {
            if (required) {
                error_ = std::string("missing field '") + key + "'";
            }
            return *this;
        }
        if (!pred(doc_[key])) {
            error_ = std::string("field '") + key + "' must be " + what;
        }
        return *this;
    }

    const json &doc_;
    std::string error_;
};

std::string check_op(const json &op, bool kill_only) {
    Shape shape(op);
    shape.string("op").string("dst").string("src", false).string("cond", false);
    if (!shape.error().empty()) {
        return shape.error();
    }
    try {
        OpKind kind = op_kind_from_string(op["op"].get<std::string>());
        if (kill_only && kind != OpKind::Kill) {
            return "expected op \"kill\"";
        }
    } catch (const Error &e) {
        return e.what();
    }
    return {};
}

std::string check_api_entry(const json &entry) {
    Shape shape(entry);
    shape.string("api").object("arg_map");
    if (!shape.error().empty()) {
        return shape.error();
    }
    for (const auto &[k, v] : entry["arg_map"].items()) {
        if (!v.is_string()) {
            return "arg_map value for '" + k + "' must be a string";
        }
    }
    return {};
}

std::string check_param_entry(const json &entry) {
    Shape shape(entry);
    if (!shape.error().empty()) {
        return shape.error();
    }
    if (!entry.contains("index") || !entry["index"].is_number_integer()) {
        return "field 'index' must be an integer";
    }
    return Shape(entry).strings("materialize").error();
}

} // namespace

std::string check_request(QueryKind kind, const json &payload) {
    Shape shape(payload);
    switch (kind) {
    case QueryKind::BehaviorClassify:
        shape.string("source").string("signature").strings("api_catalog");
        break;
    case QueryKind::ParamSpec:
        shape.string("signature").object("record_layouts").strings("usage_sites");
        break;
    case QueryKind::SummaryEncode:
        shape.string("source").array("raw_ops", [](const json &o) { return check_op(o, false); }).strings("conditions");
        break;
    case QueryKind::SummaryDecode:
        shape.string("text").strings("conditions").string("callee_signature");
        break;
    case QueryKind::SummaryRefine:
        shape.string("source").array("raw_ops", [](const json &o) { return check_op(o, false); });
        break;
    }
    return shape.error();
}

std::string check_response(QueryKind kind, const json &doc) {
    Shape shape(doc);
    switch (kind) {
    case QueryKind::BehaviorClassify:
        shape.boolean("abstractable").array("api_list", check_api_entry).string("side_effect_notes", false);
        break;
    case QueryKind::ParamSpec:
        shape.array("params", check_param_entry);
        break;
    case QueryKind::SummaryEncode:
        shape.string("text").strings("conditions");
        if (shape.error().empty() && doc["text"].get<std::string>().empty()) {
            return "field 'text' must not be empty";
        }
        break;
    case QueryKind::SummaryDecode:
        shape.array("ops", [](const json &o) { return check_op(o, false); });
        break;
    case QueryKind::SummaryRefine:
        shape.array("kills", [](const json &o) { return check_op(o, true); }).string("rationale", false);
        break;
    }
    return shape.error();
}

std::string render_prompt(const LLMQuery &query) {
    std::string dir = env_or("LMPA_PROMPTS_DIR", LMPA_PROMPTS_DIR);
    std::string text = read_file((std::filesystem::path(dir) / (to_string(query.kind) + ".txt")).string());
    if (text.empty()) {
        text = "Task: " + to_string(query.kind) + "\nInput:\n{{payload}}\nAnswer with a single JSON object only.\n";
    }
    const std::string marker = "{{payload}}";
    std::string payload = query.payload.dump(2);
    for (std::size_t pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos + payload.size())) {
        text.replace(pos, marker.size(), payload);
    }
    return text;
}

std::optional<json> extract_json_object(const std::string &text) {
    for (std::size_t start = text.find('{'); start != std::string::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                json doc = json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!doc.is_discarded()) {
                    return doc;
                }
                break;
            }
        }
    }
    return std::nullopt;
}

Gateway::Gateway(ProviderConfig config)
    : config_(std::move(config)),
      in_flight_(std::make_shared<std::counting_semaphore<>>(std::max(1, config_.max_in_flight))) {}

namespace {

/// Answers of an echo fixture: the mock reflects the payload back.
json echo_answer(const LLMQuery &query) {
    const json &p = query.payload;
    switch (query.kind) {
    case QueryKind::BehaviorClassify:
        return {{"abstractable", false}, {"api_list", json::array()}, {"side_effect_notes", "echo"}};
    case QueryKind::ParamSpec: {
        std::map<int, std::vector<std::string>> by_param;
        for (const auto &site : p.value("usage_sites", json::array())) {
            std::string text = site.get<std::string>();
            if (text.rfind("param:", 0) == 0) {
                by_param[std::atoi(text.c_str() + 6)].push_back(text);
            }
        }
        json params = json::array();
        for (const auto &[index, paths] : by_param) {
            params.push_back({{"index", index}, {"materialize", paths}});
        }
        return {{"params", params}};
    }
    case QueryKind::SummaryEncode:
        return {{"text", render_ops_text(ops_from_json(p.at("raw_ops")))}, {"conditions", p.at("conditions")}};
    case QueryKind::SummaryDecode:
        return {{"ops", ops_to_json(parse_ops_text(p.at("text").get<std::string>()))}};
    case QueryKind::SummaryRefine:
        return {{"kills", json::array()}, {"rationale", "echo"}};
    }
    return json::object();
}

} // namespace

json Gateway::fetch_mock(const LLMQuery &query, int attempt) {
    std::string path = fixture_path(config_.mock_dir, query.kind, query.function_name, attempt);
    if (attempt > 0 && !std::filesystem::exists(path)) {
        path = fixture_path(config_.mock_dir, query.kind, query.function_name, 0);
    }
    if (!std::filesystem::exists(path)) {
        std::string fallback = fixture_path(config_.mock_dir, query.kind, "default", 0);
        if (!std::filesystem::exists(fallback)) {
            throw FixtureMissing("no fixture " + path);
        }
        path = fallback;
    }
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw SchemaViolation(path + ": not valid JSON");
    }
    if (doc.is_object() && doc.value("mock_echo", false)) {
        doc = echo_answer(query);
    }
    return doc;
}

json Gateway::fetch_http(const LLMQuery &query) {
    std::string url = config_.endpoint;
    std::size_t scheme_end = url.find("://");
    std::size_t path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/v1/chat/completions" : url.substr(path_start);
    if (origin.find("://") == std::string::npos) {
        origin = "http://" + origin;
    }

    json body = {
        {"model", config_.model},
        {"temperature", 0},
        {"messages",
         json::array({
             {{"role", "system"}, {"content", "You assist a pointer analysis. Reply with JSON only."}},
             {{"role", "user"}, {"content", render_prompt(query) + "\nRespond with one JSON object and nothing else."}},
         })},
    };

    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    std::string key = env_or(config_.api_key_env.c_str(), "");
    if (!key.empty()) {
        headers.emplace("Authorization", "Bearer " + key);
    }

    in_flight_->acquire();
    auto result = client.Post(path, headers, body.dump(), "application/json");
    in_flight_->release();

    if (!result) {
        if (result.error() == httplib::Error::Read || result.error() == httplib::Error::ConnectionTimeout) {
            throw TimeoutError("request to " + config_.endpoint + " timed out");
        }
        throw TransportError("request to " + config_.endpoint + " failed: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw TransportError("endpoint " + config_.endpoint + " answered HTTP " + std::to_string(result->status));
    }
    json reply = json::parse(result->body, nullptr, false);
    if (reply.is_discarded()) {
        throw SchemaViolation("endpoint reply is not JSON");
    }
    std::string content;
    try {
        content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception &) {
        throw SchemaViolation("endpoint reply has no choices[0].message.content");
    }
    auto doc = extract_json_object(content);
    if (!doc) {
        throw SchemaViolation("model reply contains no JSON object");
    }
    return *doc;
}

json Gateway::fetch(const LLMQuery &query, int attempt) {
    switch (config_.mode) {
    case ProviderConfig::Mode::Mock: return fetch_mock(query, attempt);
    case ProviderConfig::Mode::Http: return fetch_http(query);
    case ProviderConfig::Mode::Off: break;
    }
    throw std::logic_error("LLM gateway queried while disabled");
}

LLMResponse Gateway::query(const LLMQuery &query) {
    std::string bad = check_request(query.kind, query.payload);
    if (!bad.empty()) {
        throw SchemaViolation(to_string(query.kind) + " request: " + bad);
    }
    std::string provenance = config_.mode == ProviderConfig::Mode::Mock ? "mock" : "live";
    int tries = config_.mode == ProviderConfig::Mode::Http ? config_.max_retries + 1 : 1;
    std::string problem;
    for (int attempt = 0; attempt < tries; ++attempt) {
        json doc;
        try {
            doc = fetch(query, 0);
        } catch (const SchemaViolation &e) {
            problem = e.what();
            continue;
        }
        problem = check_response(query.kind, doc);
        if (problem.empty()) {
            return {std::move(doc), provenance, attempt + 1, false};
        }
    }
    throw SchemaViolation(to_string(query.kind) + " for " + query.function_name + ": " + problem);
}

LLMResponse Gateway::self_validate(const LLMQuery &query, LLMResponse response, const Validator &check) {
    std::string complaint = check(response.document);
    if (complaint.empty()) {
        return response;
    }
    int attempts = response.attempts;
    for (int retry = 1; retry <= config_.max_retries; ++retry) {
        LLMQuery again = query;
        again.payload["validator_feedback"] = complaint;
        ++attempts;
        json doc;
        try {
            doc = fetch(again, retry);
        } catch (const SchemaViolation &e) {
            complaint = e.what();
            continue;
        }
        std::string bad = check_response(query.kind, doc);
        if (!bad.empty()) {
            complaint = bad;
            continue;
        }
        response.document = std::move(doc);
        complaint = check(response.document);
        if (complaint.empty()) {
            response.attempts = attempts;
            return response;
        }
    }
    response.attempts = attempts;
    response.rejected = true;
    return response;
}

} // namespace lmpa
