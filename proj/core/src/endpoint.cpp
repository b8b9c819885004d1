#include "queryforge/endpoint.hpp"

#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include <httplib.h>

namespace qf {

nlohmann::json chat_request_json(const ChatRequest& request) {
    nlohmann::ordered_json body;
    body["model"] = request.model;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
    const auto& p = request.preset;
    if (p.temperature) body["temperature"] = *p.temperature;
    if (p.top_p) body["top_p"] = *p.top_p;
    if (p.top_k) body["top_k"] = *p.top_k;
    if (p.repetition_penalty) body["repetition_penalty"] = *p.repetition_penalty;
    if (p.presence_penalty) body["presence_penalty"] = *p.presence_penalty;
    body["max_tokens"] = p.max_tokens;
    body["n"] = p.num_return_sequences;
    if (request.seed) body["seed"] = *request.seed;
    return body;
}

ChatResponse parse_chat_response_json(const nlohmann::json& body) {
    ChatResponse resp;
    if (!body.contains("choices") || !body["choices"].is_array())
        throw EndpointError("malformed chat response: missing choices[]", false);
    for (const auto& choice : body["choices"]) {
        if (!choice.contains("message") || !choice["message"].contains("content"))
            throw EndpointError("malformed chat response: choice without message.content", false);
        resp.completions.push_back(choice["message"]["content"].get<std::string>());
    }
    if (body.contains("usage")) {
        const auto& u = body["usage"];
        resp.usage.input_tokens = u.value("prompt_tokens", u.value("input_tokens", 0LL));
        resp.usage.output_tokens = u.value("completion_tokens", u.value("output_tokens", 0LL));
    }
    resp.usage.requests = 1;
    return resp;
}

namespace {

class HttpChatEndpoint : public ChatEndpoint {
public:
    HttpChatEndpoint(std::string base_url, std::string auth_token)
        : base_url_(std::move(base_url)), auth_token_(std::move(auth_token)) {}

    ChatResponse complete(const ChatRequest& request) override {
        httplib::Client client(base_url_);
        client.set_read_timeout(300, 0);
        httplib::Headers headers;
        if (!auth_token_.empty())
            headers.emplace("Authorization", "Bearer " + auth_token_);
        const std::string payload = chat_request_json(request).dump();
        auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");
        if (!res)
            throw EndpointError("transport failure talking to " + base_url_ + ": " +
                                    httplib::to_string(res.error()),
                                true);
        if (res->status == 400 || res->status == 404 || res->status == 422)
            throw EndpointError("endpoint rejected request (HTTP " +
                                    std::to_string(res->status) + "): " + res->body,
                                false);
        if (res->status != 200)
            throw EndpointError("endpoint returned HTTP " + std::to_string(res->status),
                                true);
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(std::string("invalid JSON in chat response: ") + e.what(), true);
        }
        return parse_chat_response_json(body);
    }

private:
    std::string base_url_;
    std::string auth_token_;
};

long long approx_tokens(const std::vector<ChatMessage>& messages) {
    long long total = 0;
    for (const auto& m : messages) total += static_cast<long long>(word_count(m.content));
    return total;
}

/// Deterministic query generator: each return sequence is a handful of
/// words sampled from the target document (the final user turn), always
/// labelled "Query:" so the downstream cleaning path gets exercised.
class SynthMockEndpoint : public ChatEndpoint {
public:
    ChatResponse complete(const ChatRequest& request) override {
        if (request.messages.empty() || request.messages.back().role != Role::user)
            throw EndpointError("mock endpoint expects a final user turn", false);
        const std::string& content = request.messages.back().content;
        auto words = split_words(content);
        if (words.empty())
            throw EndpointError("mock endpoint got an empty document", false);

        std::uint64_t base = fnv1a64(content) ^ fnv1a64(request.model) ^
                             fnv1a64(request.preset.name);
        if (request.seed) base = mix_seed(base, *request.seed);

        const double temperature = request.preset.temperature.value_or(0.7);
        ChatResponse resp;
        resp.usage.input_tokens = approx_tokens(request.messages);
        resp.usage.requests = 1;
        for (int i = 0; i < request.preset.num_return_sequences; ++i) {
            std::mt19937_64 rng(mix_seed(base, static_cast<std::uint64_t>(i)));
            const std::size_t span = temperature >= 1.0 ? 6 : 4;
            const std::size_t len = 3 + rng() % span;
            std::ostringstream query;
            query << "Query:";
            for (std::size_t w = 0; w < len; ++w)
                query << " " << words[rng() % words.size()];
            std::string text = query.str();
            resp.usage.output_tokens += static_cast<long long>(word_count(text));
            resp.completions.push_back(std::move(text));
        }
        return resp;
    }
};

/// Deterministic relevance judge: grades by the fraction of query words
/// found in the document, answering "Score: N".
class JudgeMockEndpoint : public ChatEndpoint {
public:
    ChatResponse complete(const ChatRequest& request) override {
        if (request.messages.empty())
            throw EndpointError("mock judge got an empty prompt", false);
        const std::string& content = request.messages.back().content;
        auto query_pos = content.find("Query:");
        auto doc_pos = content.find("Document:");
        int grade = 0;
        if (query_pos != std::string::npos && doc_pos != std::string::npos &&
            doc_pos > query_pos) {
            auto query_words =
                split_words(content.substr(query_pos + 6, doc_pos - query_pos - 6));
            auto doc_words = split_words(content.substr(doc_pos + 9));
            std::unordered_set<std::string> doc_set;
            for (auto& w : doc_words) doc_set.insert(to_lower(w));
            std::size_t hits = 0;
            for (auto& w : query_words)
                if (doc_set.count(to_lower(w))) ++hits;
            const double overlap =
                query_words.empty() ? 0.0 : double(hits) / double(query_words.size());
            grade = overlap >= 0.8 ? 3 : overlap >= 0.5 ? 2 : overlap >= 0.2 ? 1 : 0;
        }
        ChatResponse resp;
        resp.completions.assign(std::max(1, request.preset.num_return_sequences),
                                "Score: " + std::to_string(grade));
        resp.usage.input_tokens = approx_tokens(request.messages);
        resp.usage.output_tokens = 2LL * resp.completions.size();
        resp.usage.requests = 1;
        return resp;
    }
};

} // namespace

std::unique_ptr<ChatEndpoint> make_http_endpoint(const std::string& base_url,
                                                 const std::string& auth_token) {
    return std::make_unique<HttpChatEndpoint>(base_url, auth_token);
}

std::unique_ptr<ChatEndpoint> make_mock_endpoint(const std::string& url) {
    if (url == "mock://synth") return std::make_unique<SynthMockEndpoint>();
    if (url == "mock://judge") return std::make_unique<JudgeMockEndpoint>();
    throw ValidationError("unknown mock endpoint \"" + url + "\"");
}

std::unique_ptr<ChatEndpoint> make_endpoint(const std::string& url,
                                            const std::string& auth_token) {
    if (url.rfind("mock://", 0) == 0) return make_mock_endpoint(url);
    if (url.rfind("http://", 0) == 0) return make_http_endpoint(url, auth_token);
    if (url.rfind("https://", 0) == 0)
        throw ValidationError("https endpoints are not supported in this build; "
                              "use a local http endpoint or a forwarding proxy");
    throw ValidationError("unsupported endpoint URL \"" + url + "\"");
}

namespace {

/// Tail-first truncation of the final user turn to fit the context window.
std::vector<ChatMessage> fit_to_context(const std::vector<ChatMessage>& messages,
                                        std::size_t window, const SamplingPreset& preset) {
    if (window == 0) return messages;
    const long long budget =
        static_cast<long long>(window) - static_cast<long long>(preset.max_tokens);
    long long total = approx_tokens(messages);
    if (total <= budget) return messages;

    auto fitted = messages;
    auto& target = fitted.back().content;
    auto words = split_words(target);
    long long overflow = total - budget;
    if (overflow >= static_cast<long long>(words.size()))
        throw EndpointError("document cannot fit the endpoint context window", false);
    words.resize(words.size() - static_cast<std::size_t>(overflow));
    std::ostringstream joined;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) joined << " ";
        joined << words[i];
    }
    target = joined.str();
    std::cerr << "[queryforge] warning: document truncated tail-first by " << overflow
              << " tokens to fit the context window\n";
    return fitted;
}

ChatResponse complete_with_retries(ChatEndpoint& endpoint, const ChatRequest& request,
                                   const RetryPolicy& retry) {
    auto backoff = retry.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return endpoint.complete(request);
        } catch (const EndpointError& e) {
            if (!e.retriable() || attempt >= retry.attempts) throw;
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

} // namespace

std::vector<std::string> generate_for_document(ChatEndpoint& endpoint,
                                               const std::string& model,
                                               const std::vector<ChatMessage>& messages,
                                               const SamplingPreset& preset,
                                               const RetryPolicy& retry,
                                               TokenUsage* usage,
                                               std::optional<std::uint64_t> seed) {
    ChatRequest request;
    request.model = model;
    request.messages = fit_to_context(messages, endpoint.context_window(), preset);
    request.preset = preset;
    request.seed = seed;

    std::vector<std::string> completions;
    TokenUsage total;
    if (endpoint.supports_n()) {
        auto resp = complete_with_retries(endpoint, request, retry);
        if (static_cast<int>(resp.completions.size()) != preset.num_return_sequences)
            throw EndpointError("endpoint returned " + std::to_string(resp.completions.size()) +
                                    " sequences, expected " +
                                    std::to_string(preset.num_return_sequences),
                                false);
        completions = std::move(resp.completions);
        total += resp.usage;
    } else {
        // One call per sequence with a distinct derived seed.
        ChatRequest single = request;
        single.preset.num_return_sequences = 1;
        for (int i = 0; i < preset.num_return_sequences; ++i) {
            single.seed = mix_seed(seed.value_or(0), static_cast<std::uint64_t>(i));
            auto resp = complete_with_retries(endpoint, single, retry);
            if (resp.completions.empty())
                throw EndpointError("endpoint returned no completion", false);
            completions.push_back(std::move(resp.completions.front()));
            total += resp.usage;
        }
    }
    for (auto& c : completions) c = trim(c);
    if (usage) *usage += total;
    return completions;
}

} // namespace qf
