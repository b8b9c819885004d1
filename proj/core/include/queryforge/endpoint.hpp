#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "queryforge/prompt.hpp"
#include "queryforge/synthetic.hpp"

#include <nlohmann/json_fwd.hpp>

namespace qf {

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    SamplingPreset preset;
    std::optional<std::uint64_t> seed;
};

struct TokenUsage {
    long long input_tokens = 0;
    long long output_tokens = 0;
    long long requests = 0;

    TokenUsage& operator+=(const TokenUsage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        requests += o.requests;
        return *this;
    }
};

struct ChatResponse {
    std::vector<std::string> completions; // one per return sequence
    TokenUsage usage;
};

class EndpointError : public std::runtime_error {
public:
    EndpointError(const std::string& msg, bool retriable)
        : std::runtime_error(msg), retriable_(retriable) {}
    bool retriable() const { return retriable_; }

private:
    bool retriable_;
};

/// Chat-completion backend. Implementations must be safe for concurrent
/// complete() calls.
class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    /// Whether one request can carry n > 1 return sequences.
    virtual bool supports_n() const { return true; }
    /// 0 = unlimited. Approximate, in whitespace tokens.
    virtual std::size_t context_window() const { return 0; }
};

/// Wire request: model, messages[{role,content}], then only the sampling
/// fields the preset actually sets, plus max_tokens and n.
nlohmann::json chat_request_json(const ChatRequest& request);
ChatResponse parse_chat_response_json(const nlohmann::json& body);

/// JSON-over-HTTP endpoint (OpenAI-compatible /v1/chat/completions).
std::unique_ptr<ChatEndpoint> make_http_endpoint(const std::string& base_url,
                                                 const std::string& auth_token);

/// Deterministic offline generator used by tests and demo runs. Accepted
/// URLs: "mock://synth" (queries sampled from the target document's words)
/// and "mock://judge" (grades derived from query/document word overlap).
std::unique_ptr<ChatEndpoint> make_mock_endpoint(const std::string& url);

/// Dispatch on URL scheme: http(s) or mock.
std::unique_ptr<ChatEndpoint> make_endpoint(const std::string& url,
                                            const std::string& auth_token = "");

struct RetryPolicy {
    int attempts = 3;
    /// First backoff; doubles per retry.
    std::chrono::milliseconds initial_backoff{1000};
};

/// One document's worth of completions: exactly preset.num_return_sequences
/// whitespace-trimmed strings. Retries transport failures per policy.
std::vector<std::string> generate_for_document(ChatEndpoint& endpoint,
                                               const std::string& model,
                                               const std::vector<ChatMessage>& messages,
                                               const SamplingPreset& preset,
                                               const RetryPolicy& retry = {},
                                               TokenUsage* usage = nullptr,
                                               std::optional<std::uint64_t> seed = std::nullopt);

} // namespace qf
