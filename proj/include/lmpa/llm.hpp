#pragma once

#include <json.hpp>

#include <functional>
#include <optional>
#include <memory>
#include <semaphore>
#include <string>

namespace lmpa {

struct ProviderConfig {
    enum class Mode { Off, Mock, Http };

    Mode mode = Mode::Off;
    std::string mock_dir;
    std::string endpoint;
    std::string model;
    /// Environment variable holding the bearer token.
    std::string api_key_env = "LMPA_LLM_API_KEY";
    int timeout_seconds = 60;
    int max_retries = 2;
    int max_in_flight = 4;

    /// `off`, `mock:<dir>` or `http:<url>`; empty endpoint/model fall back
    /// to LMPA_LLM_ENDPOINT / LMPA_LLM_MODEL. Throws std::invalid_argument.
    static ProviderConfig parse(const std::string &spec);
    static ProviderConfig off() { return {}; }
    static ProviderConfig mock(std::string dir);

    /// `off`, `mock:<dir>` or `http:<url>`.
    std::string describe() const;
};

enum class QueryKind { BehaviorClassify, ParamSpec, SummaryEncode, SummaryDecode, SummaryRefine };

std::string to_string(QueryKind kind);

struct LLMQuery {
    QueryKind kind = QueryKind::BehaviorClassify;
    std::string function_name;
    nlohmann::json payload;
};

struct LLMResponse {
    nlohmann::json document;
    std::string provenance;  // "live" or "mock"
    int attempts = 1;
    bool rejected = false;
};

/// Returns an empty string when the document is acceptable, otherwise a
/// complaint that is fed back to the model.
using Validator = std::function<std::string(const nlohmann::json &)>;

/// Empty when `payload` matches the request schema of `kind`.
std::string check_request(QueryKind kind, const nlohmann::json &payload);
/// Empty when `doc` matches the response schema of `kind`.
std::string check_response(QueryKind kind, const nlohmann::json &doc);

/// `<dir>/<kind>__<function>.json`, or `.retry<N>.json` for attempt N > 0. A
/// `<kind>__default.json` fixture answers for functions without their own.
std::string fixture_path(const std::string &dir, QueryKind kind, const std::string &function, int attempt = 0);

/// Prompt text for a query: the template `prompts/<kind>.txt` with
/// `{{payload}}` replaced by the payload JSON.
std::string render_prompt(const LLMQuery &query);

/// First balanced JSON object embedded in free text.
std::optional<nlohmann::json> extract_json_object(const std::string &text);

class Gateway {
public:
    explicit Gateway(ProviderConfig config);

    const ProviderConfig &config() const { return config_; }
    bool enabled() const { return config_.mode != ProviderConfig::Mode::Off; }

    /// Throws FixtureMissing, TransportError, TimeoutError, SchemaViolation.
    LLMResponse query(const LLMQuery &query);

    /// Re-queries with `validator_feedback` until `check` accepts, at most
    /// max_retries times; the last response is tagged rejected on
    /// exhaustion.
    LLMResponse self_validate(const LLMQuery &query, LLMResponse response, const Validator &check);

private:
    nlohmann::json fetch(const LLMQuery &query, int attempt);
    nlohmann::json fetch_mock(const LLMQuery &query, int attempt);
    nlohmann::json fetch_http(const LLMQuery &query);

    ProviderConfig config_;
    std::shared_ptr<std::counting_semaphore<>> in_flight_;
};

} // namespace lmpa
