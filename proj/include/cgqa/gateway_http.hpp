#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cgqa/errors.hpp"
#include "cgqa/llm_gateway.hpp"

namespace cgqa {

// Chat-completion client. Wire shape (docs/gateway-api.md):
//   POST <path>  {"model": "...", "temperature": 0.7,
//                 "messages": [{"role": "...", "content": "..."}, ...]}
//   200          {"choices": [{"message": {"content": "..."}}]}
// Credential, when set, travels as "Authorization: Bearer $CGQA_GATEWAY_KEY".
struct HttpChatConfig {
    std::string host;              // e.g. "https://api.example.com"
    std::string path = "/v1/chat/completions";
    std::string model;
    int max_retries = 3;
    int backoff_ms = 200;
    std::string key_env = "CGQA_GATEWAY_KEY";
};

class HttpChatBackend final : public GatewayBackend {
public:
    explicit HttpChatBackend(HttpChatConfig config) : config_(std::move(config)) {}

    std::string kind() const override { return "http-chat"; }

protected:
    std::string do_complete(const std::vector<ChatMessage>& messages, double temperature,
                            int /*sample_index*/) override {
        nlohmann::json body;
        body["model"] = config_.model;
        body["temperature"] = temperature;
        body["messages"] = nlohmann::json::array();
        for (const auto& m : messages)
            body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        const std::string payload = body.dump();

        int delay = config_.backoff_ms;
        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
                delay *= 2;
            }
            httplib::Client client(config_.host);
            client.set_connection_timeout(10);
            client.set_read_timeout(120);
            httplib::Headers headers;
            if (const char* key = std::getenv(config_.key_env.c_str()))
                headers.emplace("Authorization", std::string("Bearer ") + key);
            auto res = client.Post(config_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failed";
                continue;
            }
            if (res->status != 200) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            auto parsed = nlohmann::json::parse(res->body, nullptr, false);
            if (parsed.is_discarded() || !parsed.contains("choices") ||
                parsed["choices"].empty() || !parsed["choices"][0].contains("message")) {
                last_error = "malformed response body";
                continue;
            }
            return parsed["choices"][0]["message"].value("content", "");
        }
        throw_error(Errc::backend_error,
                    "chat backend at " + config_.host + ": " + last_error);
        return {};
    }

private:
    HttpChatConfig config_;
};

} // namespace cgqa
