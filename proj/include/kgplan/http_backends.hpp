#pragma once
// Network-backed implementations of the LM backend and similarity provider.
// The chat backend speaks the common chat-completion wire format; the
// embedding provider expects a minimal {"texts": [...]} -> {"vectors": [[...]]}
// contract. Both are configured through environment variables so tests and
// the CLI stay credential-free by default.

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "kgplan/lm.hpp"
#include "kgplan/similarity.hpp"

namespace kgplan {

namespace detail {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port
    std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    size_t path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

}  // namespace detail

// Chat-completion backend: POSTs {model, messages:[{role:user, content}]}
// and reads choices[0].message.content plus usage counts when present.
class HttpChatBackend : public LmBackend {
public:
    HttpChatBackend(std::string url, std::string model, std::string api_key = "",
                    double timeout_s = 60.0)
        : url_(std::move(url)), model_(std::move(model)), api_key_(std::move(api_key)),
          timeout_s_(timeout_s) {}

    // KGPLAN_LLM_URL (e.g. http://host:port/v1/chat/completions),
    // KGPLAN_LLM_MODEL, KGPLAN_LLM_KEY
    static HttpChatBackend from_env() {
        std::string url = detail::env_or("KGPLAN_LLM_URL", "");
        if (url.empty())
            throw LmError("KGPLAN_LLM_URL is not set; the http backend needs an endpoint", false);
        return HttpChatBackend(url, detail::env_or("KGPLAN_LLM_MODEL", "default"),
                               detail::env_or("KGPLAN_LLM_KEY", ""));
    }

    LmResult complete(const PromptBundle& prompt) override {
        auto [host, path] = detail::split_url(url_);
        httplib::Client client(host);
        client.set_connection_timeout(static_cast<int>(timeout_s_));
        client.set_read_timeout(static_cast<int>(timeout_s_));

        nlohmann::json body = {
            {"model", model_},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.rendered}}})}};
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) throw LmError("chat backend unreachable at " + url_, true);
        if (res->status >= 500)
            throw LmError("chat backend returned " + std::to_string(res->status), true);
        if (res->status != 200)
            throw LmError("chat backend returned " + std::to_string(res->status) + ": " +
                              res->body,
                          false);
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            LmResult out;
            out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                out.input_tokens = j["usage"].value("prompt_tokens", -1);
                out.output_tokens = j["usage"].value("completion_tokens", -1);
            }
            return out;
        } catch (const nlohmann::json::exception& e) {
            throw LmError(std::string("malformed chat response: ") + e.what(), false);
        }
    }

    std::string id() const override { return "http(" + model_ + ")"; }

private:
    std::string url_;
    std::string model_;
    std::string api_key_;
    double timeout_s_;
};

// Embedding-based similarity: cosine of the two embedding vectors mapped
// into [0,1]. Vectors are cached per text, so repeated scoring of a world
// costs one request per distinct string.
class HttpEmbeddingSimilarity final : public TextSimilarity {
public:
    HttpEmbeddingSimilarity(std::string url, std::string token = "", double timeout_s = 30.0)
        : url_(std::move(url)), token_(std::move(token)), timeout_s_(timeout_s) {}

    // KGPLAN_EMBED_URL, KGPLAN_EMBED_TOKEN
    static HttpEmbeddingSimilarity from_env() {
        std::string url = detail::env_or("KGPLAN_EMBED_URL", "");
        if (url.empty())
            throw ProviderError("KGPLAN_EMBED_URL is not set; the embedding provider needs an "
                                "endpoint",
                                false);
        return HttpEmbeddingSimilarity(url, detail::env_or("KGPLAN_EMBED_TOKEN", ""));
    }

    double score(const std::string& a, const std::string& b) const override {
        const std::vector<double>& va = embed(a);
        const std::vector<double>& vb = embed(b);
        if (va.size() != vb.size() || va.empty())
            throw ProviderError("embedding backend returned mismatched vectors", false);
        double dot = 0, na = 0, nb = 0;
        for (size_t i = 0; i < va.size(); ++i) {
            dot += va[i] * vb[i];
            na += va[i] * va[i];
            nb += vb[i] * vb[i];
        }
        if (na == 0 || nb == 0) return 0.0;
        double cosine = dot / std::sqrt(na * nb);
        return std::clamp(0.5 * (1.0 + cosine), 0.0, 1.0);
    }

    std::string id() const override { return "embedding"; }

private:
    const std::vector<double>& embed(const std::string& text) const {
        auto it = cache_.find(text);
        if (it != cache_.end()) return it->second;

        auto [host, path] = detail::split_url(url_);
        httplib::Client client(host);
        client.set_connection_timeout(static_cast<int>(timeout_s_));
        client.set_read_timeout(static_cast<int>(timeout_s_));
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

        nlohmann::json body = {{"texts", nlohmann::json::array({text})}};
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) throw ProviderError("embedding backend unreachable at " + url_, true);
        if (res->status != 200)
            throw ProviderError("embedding backend returned " + std::to_string(res->status),
                                res->status >= 500);
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            auto vec = j.at("vectors").at(0).get<std::vector<double>>();
            return cache_.emplace(text, std::move(vec)).first->second;
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed embedding response: ") + e.what(), false);
        }
    }

    std::string url_;
    std::string token_;
    double timeout_s_;
    mutable std::map<std::string, std::vector<double>> cache_;
};

}  // namespace kgplan
