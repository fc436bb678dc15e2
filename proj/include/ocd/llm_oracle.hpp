#pragma once

#include "ocd/oracle.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace ocd {

/// Chat-completion endpoint used to sample repair patches.
struct LlmEndpoint
{
    std::string url; // full URL of the chat-completions route
    std::string model;
    std::string api_key;
    std::size_t max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};

    /// OCD_LLM_URL, OCD_LLM_MODEL, OCD_LLM_KEY. Throws ValidationError when
    /// the URL or model is unset.
    static LlmEndpoint from_env();
};

/// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

/// The repair request body for an instance and its rendered context.
std::string build_repair_prompt(const Instance& instance, const std::string& rendered_context);

/// The diff inside a completion: the first fenced block if there is one,
/// otherwise everything from the first "---"/"diff --git" line.
std::string extract_patch(const std::string& completion);

/// Oracle that samples patches from an LLM, applies each to a scratch copy
/// of the repository and runs the instance's test command.
///
/// Runs the test command as-is with the caller's privileges; there is no
/// sandboxing beyond the scratch copy.
class LlmOracle : public Oracle
{
public:
    LlmOracle(LlmEndpoint endpoint, OracleConfig config, std::filesystem::path log_dir = {});

    OracleVerdict evaluate(const Candidate& candidate) override;
    bool concurrent_safe() const override { return true; }

    /// Sends one request for `n` completions and returns their texts;
    /// retries with exponential backoff, then throws ExternalServiceError.
    std::vector<std::string> request_completions(const std::string& prompt, std::size_t n) const;

    /// Applies `patch_text` to a fresh copy of the repository and runs the tests.
    SampleOutcome run_sample(const Instance& instance, const std::string& patch_text,
                             const std::filesystem::path& log_stem) const;

private:
    LlmEndpoint m_endpoint;
    OracleConfig m_config;
    std::filesystem::path m_log_dir;
};

} // namespace ocd
