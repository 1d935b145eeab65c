#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cgqa/encoder.hpp"
#include "cgqa/errors.hpp"

namespace cgqa {

// HTTP embedding service client. Wire shape (see docs/encoder-api.md):
//   POST <path>  {"model": "...", "texts": ["...", ...]}
//   200          {"vectors": [[...], ...]}   one vector per input, in order
// Credential, when required, travels as "Authorization: Bearer $CGQA_ENCODER_KEY".
struct RemoteEncoderConfig {
    std::string host;         // e.g. "http://localhost:8089"
    std::string path = "/embed";
    std::string model;
    size_t batch_size = 64;
    int max_retries = 3;
    int backoff_ms = 50;      // doubles per retry
    std::string key_env = "CGQA_ENCODER_KEY";
};

class RemoteEncoder final : public TextEncoder {
public:
    explicit RemoteEncoder(RemoteEncoderConfig config) : config_(std::move(config)) {}

    std::string kind() const override { return "remote"; }

    std::unique_ptr<SimilarityIndex> build_index(std::vector<std::string> corpus) const override;

    // batched, retried, positionally aligned to the inputs
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const {
        std::vector<std::vector<double>> vectors;
        vectors.reserve(texts.size());
        for (size_t start = 0; start < texts.size(); start += config_.batch_size) {
            size_t end = std::min(texts.size(), start + config_.batch_size);
            std::vector<std::string> batch(texts.begin() + start, texts.begin() + end);
            auto part = embed_batch(batch);
            vectors.insert(vectors.end(), part.begin(), part.end());
        }
        return vectors;
    }

private:
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& batch) const {
        nlohmann::json body;
        body["model"] = config_.model;
        body["texts"] = batch;
        const std::string payload = body.dump();

        int delay = config_.backoff_ms;
        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
                delay *= 2;
            }
            httplib::Client client(config_.host);
            client.set_connection_timeout(5);
            client.set_read_timeout(30);
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
            if (parsed.is_discarded() || !parsed.contains("vectors") ||
                !parsed["vectors"].is_array() || parsed["vectors"].size() != batch.size()) {
                last_error = "malformed response body";
                continue;
            }
            std::vector<std::vector<double>> out;
            out.reserve(batch.size());
            for (const auto& v : parsed["vectors"])
                out.push_back(v.get<std::vector<double>>());
            return out;
        }
        throw_error(Errc::remote_unavailable,
                    "embedding service at " + config_.host + ": " + last_error);
    }

    RemoteEncoderConfig config_;
};

class RemoteIndex final : public SimilarityIndex {
public:
    RemoteIndex(const RemoteEncoder& encoder, std::vector<std::string> corpus,
                std::vector<std::vector<double>> vectors)
        : encoder_(encoder), corpus_(std::move(corpus)), vectors_(std::move(vectors)) {}

    size_t size() const override { return corpus_.size(); }

    std::vector<ScoredItem> top_similar(const std::string& query, size_t t) const override {
        auto qv = encoder_.embed({query}).front();
        std::vector<ScoredItem> scored;
        scored.reserve(corpus_.size());
        for (size_t i = 0; i < corpus_.size(); ++i)
            scored.push_back({corpus_[i], cosine(qv, vectors_[i])});
        return encoder_detail::rank_and_cut(std::move(scored), t);
    }

private:
    static double cosine(const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0, na = 0, nb = 0;
        size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0 || nb == 0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    }

    const RemoteEncoder& encoder_;
    std::vector<std::string> corpus_;
    std::vector<std::vector<double>> vectors_;
};

inline std::unique_ptr<SimilarityIndex> RemoteEncoder::build_index(
    std::vector<std::string> corpus) const {
    if (corpus.empty())
        throw_error(Errc::no_candidates, "cannot index an empty corpus");
    auto vectors = embed(corpus);
    return std::make_unique<RemoteIndex>(*this, std::move(corpus), std::move(vectors));
}

} // namespace cgqa
