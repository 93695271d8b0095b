#pragma once

// Chat-completion clients: a live client for any OpenAI-compatible HTTP
// endpoint and a deterministic scripted mock that replays fixture responses
// in order, used for offline tests of the full evolutionary loop.

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace trisk {

struct Message {
    std::string role;  // "system", "user" or "assistant"
    std::string content;
};

struct CompletionRequest {
    std::vector<Message> messages;
    double temperature = 0.7;
    int max_tokens = 2048;
    std::string model_name;  // empty: client picks its configured model

    // Throws ConfigError: no messages, temperature outside [0, 2], empty
    // user/system content, or unknown role.
    void validate() const;
};

class Client {
   public:
    virtual ~Client() = default;

    // Returns one assistant message. Throws ClientError on failure.
    virtual std::string complete(const CompletionRequest& req) = 0;
};

// Replays a fixed list of assistant responses in order, ignoring request
// content but logging every request for assertions. Thread-safe; a single
// cursor serializes consumption.
class MockClient : public Client {
   public:
    explicit MockClient(std::vector<std::string> responses);

    std::string complete(const CompletionRequest& req) override;

    std::size_t capacity() const;
    std::size_t consumed() const;
    // Repositions the cursor (resume support). Throws ClientError if past
    // the end of the fixture list.
    void seek(std::size_t cursor);
    std::vector<CompletionRequest> request_log() const;

   private:
    mutable std::mutex mutex_;
    std::vector<std::string> responses_;
    std::vector<CompletionRequest> log_;
    std::size_t cursor_ = 0;
};

// Loads a JSON array of strings. Throws IoError on missing/unparseable file.
std::unique_ptr<MockClient> mock_from_fixture(const std::string& path);

struct HttpClientConfig {
    std::string endpoint;  // scheme://host[:port], no trailing path
    std::string api_key;   // empty: no Authorization header
    std::string model;     // used when the request leaves model_name empty
    int max_retries = 3;   // additional attempts after the first
    int backoff_initial_ms = 250;
    int timeout_seconds = 120;
};

// POSTs OpenAI-style chat-completion requests to {endpoint}/v1/chat/completions.
// Transient transport failures and 429/5xx responses are retried with
// exponential backoff; other HTTP errors and malformed bodies fail at once.
class HttpClient : public Client {
   public:
    explicit HttpClient(HttpClientConfig cfg);

    std::string complete(const CompletionRequest& req) override;

   private:
    HttpClientConfig cfg_;
};

// Builds an HttpClient from LLM_ENDPOINT, LLM_API_KEY and LLM_MODEL.
// Throws ClientError when LLM_ENDPOINT is unset.
std::unique_ptr<Client> make_client_from_env();

}  // namespace trisk
