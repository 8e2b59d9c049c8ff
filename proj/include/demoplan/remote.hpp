#pragma once

// Remote reasoner backend: a chat-completions style HTTP client whose
// response content is parsed as a skill-reasoning transcript. The request
// carries the PDDL domain, the task description and the annotated
// keyframe captions. Never used in default pipelines; wired in behind the
// ReasonerBackend interface for deployments with a language-model service.

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "demoplan/analyzer.hpp"
#include "demoplan/pddl.hpp"
#include "httplib.h"
#include "json.hpp"

namespace demoplan::analyzer {

struct RemoteConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
    std::string api_key;
    std::string model = "gpt-4o";
    int retries = 2;
    double timeout_s = 15.0;

    /// Reads ANALYZER_ENDPOINT / ANALYZER_KEY; nullopt when no endpoint is set.
    static std::optional<RemoteConfig> from_env() {
        const char* ep = std::getenv("ANALYZER_ENDPOINT");
        if (!ep || !*ep) return std::nullopt;
        RemoteConfig cfg;
        cfg.endpoint = ep;
        if (const char* key = std::getenv("ANALYZER_KEY")) cfg.api_key = key;
        return cfg;
    }
};

namespace detail {

inline std::string clock_stamp(double seconds_of_day) {
    const long total_ms = std::lround(seconds_of_day * 1000.0);
    const long ms = total_ms % 1000;
    const long s = (total_ms / 1000) % 60;
    const long m = (total_ms / 60000) % 60;
    const long h = (total_ms / 3600000) % 24;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%02ld:%02ld:%02ld.%03ld", h, m, s, ms);
    return buf;
}

inline nlohmann::json build_reasoning_request(const std::string& model,
                                              const pddl::PddlDomain& domain,
                                              const std::vector<KeyFrame>& keyframes,
                                              const std::string& task_description) {
    std::string frames;
    for (std::size_t i = 0; i < keyframes.size(); ++i)
        frames += "Frame " + std::to_string(i + 1) + " (" +
                  clock_stamp(keyframes[i].timestamp) + "): " + keyframes[i].caption + "\n";
    auto messages = nlohmann::json::array();
    messages.push_back(
        {{"role", "system"},
         {"content",
          "You are reasoning about robot skills and skill parameters at each frame of a video "
          "step by step. Skill has to be selected from the following skill library."}});
    messages.push_back(
        {{"role", "user"},
         {"content", "Your reasoning will be based on PDDL. The skill library is defined as the "
                     "following PDDL domain:\n" +
                         pddl::emit(domain)}});
    messages.push_back(
        {{"role", "user"},
         {"content",
          "As the first step of your reasoning, reason which skill in the skill library the "
          "robot performs at each frame. " +
              task_description + "\nBelow are the key frames to be described.\n" + frames +
              "Format your reasoning as strings strictly in 'frame number(timestamp): skill and "
              "reason' format. Consider the annotated object status and also the robot movement "
              "in your reasoning."}});
    return {{"model", model}, {"messages", messages}};
}

}  // namespace detail

/// POSTs the reasoning request and parses the response content as a
/// transcript. Transport errors retry up to cfg.retries times.
inline std::vector<SkillStep> infer_skill_sequence_remote(
    const RemoteConfig& cfg, const pddl::PddlDomain& domain,
    const std::vector<KeyFrame>& keyframes, const std::string& task_description) {
    const auto scheme_pos = cfg.endpoint.find("://");
    if (scheme_pos == std::string::npos) throw RemoteUnavailable("malformed endpoint URL");
    const auto path_pos = cfg.endpoint.find('/', scheme_pos + 3);
    const std::string base =
        path_pos == std::string::npos ? cfg.endpoint : cfg.endpoint.substr(0, path_pos);
    const std::string path = path_pos == std::string::npos ? "/" : cfg.endpoint.substr(path_pos);

    const auto body = detail::build_reasoning_request(cfg.model, domain, keyframes,
                                                      task_description);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        httplib::Client client(base);
        client.set_connection_timeout(static_cast<time_t>(cfg.timeout_s),
                                      static_cast<time_t>(cfg.timeout_s * 1e6) % 1000000);
        client.set_read_timeout(static_cast<time_t>(cfg.timeout_s), 0);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;  // transport error: retry
        }
        if (res->status != 200)
            throw RemoteUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body);
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw RemoteUnavailable(std::string("malformed response body: ") + e.what());
        }
        if (!reply.contains("choices") || reply["choices"].empty() ||
            !reply["choices"][0].contains("message"))
            throw RemoteUnavailable("response has no choices[0].message");
        const std::string content = reply["choices"][0]["message"].value("content", "");
        return parse_reasoner_transcript(content);
    }
    throw RemoteUnavailable(last_error + " after " + std::to_string(cfg.retries + 1) +
                            " attempts");
}

}  // namespace demoplan::analyzer
