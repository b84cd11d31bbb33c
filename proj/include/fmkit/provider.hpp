#pragma once

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "fmkit/harness.hpp"

namespace fmkit {

namespace detail {

struct EndpointParts {
    std::string host;
    int port = 80;
    std::string path = "/";
};

/// Splits "http://host[:port]/path". Only plain http is supported; study
/// traffic against TLS endpoints goes through a local proxy.
inline EndpointParts parse_http_endpoint(const std::string& endpoint) {
    const std::string scheme = "http://";
    if (endpoint.rfind(scheme, 0) != 0)
        throw std::invalid_argument("endpoint must start with http:// : " + endpoint);
    EndpointParts parts;
    std::string rest = endpoint.substr(scheme.size());
    std::size_t slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    if (slash != std::string::npos)
        parts.path = rest.substr(slash);
    std::size_t colon = authority.find(':');
    if (colon == std::string::npos) {
        parts.host = authority;
    } else {
        parts.host = authority.substr(0, colon);
        try {
            parts.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("endpoint has a malformed port: " + endpoint);
        }
    }
    if (parts.host.empty())
        throw std::invalid_argument("endpoint has no host: " + endpoint);
    return parts;
}

} // namespace detail

/// Chat-completion client speaking the OpenAI-style JSON dialect. Transport
/// problems never throw; they come back as Timeout or HttpError exchanges so
/// the caller can record and score them.
class HttpProvider : public ProviderClient {
public:
    LlmExchange complete(const ProviderConfig& config, const std::string& blueprint_name,
                         AoKind ao, const std::string& system_text,
                         const std::string& user_text) override {
        (void)blueprint_name;
        (void)ao;
        LlmExchange ex;
        ex.system_text = system_text;
        ex.user_text = user_text;
        ex.status = TransportStatus::HttpError;

        detail::EndpointParts endpoint;
        try {
            endpoint = detail::parse_http_endpoint(config.endpoint);
        } catch (const std::exception&) {
            return ex;
        }

        nlohmann::json body;
        body["model"] = config.model_id;
        body["temperature"] = config.temperature;
        body["messages"] = {{{"role", "system"}, {"content", system_text}},
                            {{"role", "user"}, {"content", user_text}}};
        if (config.max_output_tokens)
            body["max_tokens"] = *config.max_output_tokens;

        httplib::Client client(endpoint.host, endpoint.port);
        auto timeout = std::chrono::duration<double>(config.request_timeout_s);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Headers headers;
        if (!config.auth_env.empty()) {
            const char* secret = std::getenv(config.auth_env.c_str());
            if (!secret)
                return ex;
            if (config.auth_style == "x-api-key")
                headers.emplace("x-api-key", secret);
            else
                headers.emplace("Authorization", std::string("Bearer ") + secret);
        }

        auto start = std::chrono::steady_clock::now();
        httplib::Result result =
            client.Post(endpoint.path, headers, body.dump(), "application/json");
        ex.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        if (!result) {
            bool timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                             result.error() == httplib::Error::Read;
            ex.status = timed_out ? TransportStatus::Timeout : TransportStatus::HttpError;
            return ex;
        }
        ex.http_code = result->status;
        if (result->status < 200 || result->status >= 300) {
            ex.status = TransportStatus::HttpError;
            return ex;
        }

        try {
            nlohmann::json doc = nlohmann::json::parse(result->body);
            ex.response_text =
                doc.at("choices").at(0).at("message").at("content").get<std::string>();
            if (doc.contains("usage")) {
                const nlohmann::json& usage = doc.at("usage");
                ex.prompt_tokens =
                    usage.value("prompt_tokens", usage.value("input_tokens", std::uint64_t{0}));
                ex.completion_tokens = usage.value(
                    "completion_tokens", usage.value("output_tokens", std::uint64_t{0}));
            }
            ex.status = TransportStatus::Ok;
        } catch (const nlohmann::json::exception&) {
            ex.status = TransportStatus::HttpError;
            ex.response_text.clear();
        }
        return ex;
    }
};

} // namespace fmkit
