#include "ocd/llm_oracle.hpp"

#include "ocd/errors.hpp"
#include "ocd/instance.hpp"
#include "ocd/process.hpp"
#include "ocd/query.hpp"
#include "ocd/render.hpp"
#include "ocd/text.hpp"
#include "ocd/unified_diff.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

namespace ocd {

namespace {

constexpr const char* kSystemPrompt =
    "You are an expert software engineer resolving a reported issue. Use only the code context "
    "provided; lines such as '# ... N lines omitted' stand for code that was left out. Reply with "
    "a single unified diff against the repository root (--- a/<path> / +++ b/<path> headers) and "
    "nothing else.";

std::string env_or_empty(const char* name)
{
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

} // namespace

LlmEndpoint LlmEndpoint::from_env()
{
    LlmEndpoint ep;
    ep.url = env_or_empty("OCD_LLM_URL");
    ep.model = env_or_empty("OCD_LLM_MODEL");
    ep.api_key = env_or_empty("OCD_LLM_KEY");
    if (ep.url.empty() || ep.model.empty())
        throw ValidationError("OCD_LLM_URL and OCD_LLM_MODEL must be set for the LLM oracle");
    return ep;
}

std::pair<std::string, std::string> split_url(const std::string& url)
{
    auto scheme = url.find("://");
    if (scheme == std::string::npos)
        throw ValidationError("URL without scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos)
        return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

std::string build_repair_prompt(const Instance& instance, const std::string& rendered_context)
{
    const auto query = build_query(instance.issue_text, instance.fault_locations);
    return query.rendered + "\nCODE CONTEXT:\n" + rendered_context;
}

std::string extract_patch(const std::string& completion)
{
    auto fence = completion.find("```");
    if (fence != std::string::npos) {
        auto body = completion.find('\n', fence);
        if (body != std::string::npos) {
            auto close = completion.find("```", body + 1);
            return completion.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1);
        }
    }
    for (const char* marker : {"diff --git", "--- "}) {
        if (starts_with(completion, marker))
            return completion;
        auto pos = completion.find(std::string("\n") + marker);
        if (pos != std::string::npos)
            return completion.substr(pos + 1);
    }
    return completion;
}

LlmOracle::LlmOracle(LlmEndpoint endpoint, OracleConfig config, std::filesystem::path log_dir)
    : m_endpoint(std::move(endpoint)), m_config(config), m_log_dir(std::move(log_dir))
{
    m_config.validate();
}

std::vector<std::string> LlmOracle::request_completions(const std::string& prompt, std::size_t n) const
{
    const auto [base, route] = split_url(m_endpoint.url);

    nlohmann::json body;
    body["model"] = m_endpoint.model;
    body["messages"] = nlohmann::json::array({
        {{"role", "system"}, {"content", kSystemPrompt}},
        {{"role", "user"}, {"content", prompt}},
    });
    body["n"] = n;
    body["temperature"] = m_config.temperature;
    body["max_tokens"] = m_config.max_tokens;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!m_endpoint.api_key.empty())
        headers.emplace("Authorization", "Bearer " + m_endpoint.api_key);

    std::string last_error;
    auto backoff = m_endpoint.initial_backoff;
    for (std::size_t attempt = 0; attempt < m_endpoint.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(std::chrono::seconds(m_config.timeout_seconds));
        auto res = client.Post(route, headers, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ExternalServiceError("LLM endpoint returned HTTP " + std::to_string(res->status));

        std::vector<std::string> texts;
        try {
            auto doc = nlohmann::json::parse(res->body);
            if (doc.contains("choices")) {
                for (const auto& c : doc["choices"]) {
                    if (c.contains("message"))
                        texts.push_back(c["message"].value("content", std::string{}));
                    else
                        texts.push_back(c.value("text", std::string{}));
                }
            } else if (doc.contains("completions")) {
                texts = doc["completions"].get<std::vector<std::string>>();
            }
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
            continue;
        }
        return texts;
    }
    throw ExternalServiceError("LLM endpoint unreachable after " + std::to_string(m_endpoint.max_attempts)
                               + " attempts: " + last_error);
}

SampleOutcome LlmOracle::run_sample(const Instance& instance, const std::string& patch_text,
                                    const std::filesystem::path& log_stem) const
{
    namespace fs = std::filesystem;
    SampleOutcome outcome;
    outcome.patch_text = patch_text;

    TempDir scratch("ocd-sample");
    const fs::path repo = scratch.path() / "repo";
    fs::copy(instance.repo_root, repo, fs::copy_options::recursive | fs::copy_options::copy_symlinks);

    try {
        diff::apply(diff::parse(patch_text), repo);
    } catch (const std::exception&) {
        outcome.apply_failed = true;
        return outcome;
    }

    fs::path stem = log_stem.empty() ? scratch.path() / "sample" : log_stem;
    fs::create_directories(stem.parent_path());
    auto result = run_shell(*instance.test_command, repo, stem.string() + ".stdout", stem.string() + ".stderr",
                            std::chrono::seconds(m_config.timeout_seconds));
    outcome.test_exit_status = result.exit_status;
    outcome.timed_out = result.timed_out;
    outcome.duration_seconds = result.duration_seconds;
    return outcome;
}

OracleVerdict LlmOracle::evaluate(const Candidate& candidate)
{
    if (!candidate.instance || !candidate.instance->test_command)
        throw ValidationError("LLM oracle needs an instance with a test_command");
    const Instance& inst = *candidate.instance;

    const auto rendered = render_leaves(candidate.tree, candidate.leaves);
    const std::string prompt = build_repair_prompt(inst, dump(rendered.per_file));

    std::vector<std::string> completions;
    // Some endpoints ignore n; keep asking for the remainder.
    for (std::size_t round = 0; completions.size() < m_config.samples_n && round < m_config.samples_n; ++round) {
        auto batch = request_completions(prompt, m_config.samples_n - completions.size());
        if (batch.empty())
            break;
        for (auto& c : batch)
            if (completions.size() < m_config.samples_n)
                completions.push_back(std::move(c));
    }

    const std::string key = verdict_cache_key(inst.instance_id, candidate.leaves).substr(0, 16);
    std::vector<SampleOutcome> samples;
    for (std::size_t i = 0; i < completions.size(); ++i) {
        std::filesystem::path stem;
        if (!m_log_dir.empty())
            stem = m_log_dir / inst.instance_id / (key + "-s" + std::to_string(i));
        samples.push_back(run_sample(inst, extract_patch(completions[i]), stem));
    }
    while (samples.size() < m_config.samples_n)
        samples.push_back(SampleOutcome{}); // missing completions count as failures
    return tally(std::move(samples), m_config.pass_threshold);
}

} // namespace ocd
