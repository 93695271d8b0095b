#include "trisk/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "trisk/errors.hpp"

namespace trisk {

void CompletionRequest::validate() const {
    if (messages.empty()) throw ConfigError("completion request: at least one message required");
    if (!(temperature >= 0.0) || !(temperature <= 2.0))
        throw ConfigError("completion request: temperature must be in [0, 2]");
    for (const Message& m : messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant")
            throw ConfigError("completion request: unknown role '" + m.role + "'");
        if (m.content.empty() && m.role != "assistant")
            throw ConfigError("completion request: empty content for role '" + m.role + "'");
    }
}

MockClient::MockClient(std::vector<std::string> responses) : responses_(std::move(responses)) {}

std::string MockClient::complete(const CompletionRequest& req) {
    req.validate();
    std::lock_guard<std::mutex> lock(mutex_);
    log_.push_back(req);
    if (cursor_ >= responses_.size()) throw ClientError("mock client: fixtures exhausted");
    return responses_[cursor_++];
}

std::size_t MockClient::capacity() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return responses_.size();
}

std::size_t MockClient::consumed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cursor_;
}

void MockClient::seek(std::size_t cursor) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (cursor > responses_.size()) throw ClientError("mock client: seek past end of fixtures");
    cursor_ = cursor;
}

std::vector<CompletionRequest> MockClient::request_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
}

std::unique_ptr<MockClient> mock_from_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fixture file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse fixture file " + path + ": " + e.what());
    }
    if (!j.is_array()) throw IoError("fixture file must hold a JSON array of strings: " + path);
    std::vector<std::string> responses;
    for (const auto& item : j) {
        if (!item.is_string())
            throw IoError("fixture file must hold a JSON array of strings: " + path);
        responses.push_back(item.get<std::string>());
    }
    return std::make_unique<MockClient>(std::move(responses));
}

HttpClient::HttpClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) throw ClientError("http client: endpoint must not be empty");
}

std::string HttpClient::complete(const CompletionRequest& req) {
    req.validate();
    nlohmann::json body;
    body["model"] = req.model_name.empty() ? cfg_.model : req.model_name;
    body["messages"] = nlohmann::json::array();
    for (const Message& m : req.messages)
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            const int delay = cfg_.backoff_initial_ms << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client http(cfg_.endpoint);
        http.set_connection_timeout(cfg_.timeout_seconds);
        http.set_read_timeout(cfg_.timeout_seconds);
        httplib::Result res =
            http.Post("/v1/chat/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ClientError("http client: status " + std::to_string(res->status) + ": " +
                              res->body);
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw ClientError("http client: malformed response body");
        }
        if (!reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty() || !reply["choices"][0].contains("message") ||
            !reply["choices"][0]["message"].contains("content") ||
            !reply["choices"][0]["message"]["content"].is_string())
            throw ClientError("http client: response missing choices[0].message.content");
        return reply["choices"][0]["message"]["content"].get<std::string>();
    }
    throw ClientError("http client: retries exhausted, last error: " + last_error);
}

std::unique_ptr<Client> make_client_from_env() {
    const char* endpoint = std::getenv("LLM_ENDPOINT");
    if (endpoint == nullptr || *endpoint == '\0')
        throw ClientError("LLM_ENDPOINT is not set; required for the live client");
    HttpClientConfig cfg;
    cfg.endpoint = endpoint;
    if (const char* key = std::getenv("LLM_API_KEY")) cfg.api_key = key;
    if (const char* model = std::getenv("LLM_MODEL")) cfg.model = model;
    return std::make_unique<HttpClient>(cfg);
}

}  // namespace trisk
