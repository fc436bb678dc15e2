#include "ocd/remote_scorer.hpp"

#include "ocd/errors.hpp"
#include "ocd/llm_oracle.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

namespace ocd {

namespace {

template <class Call>
httplib::Result with_retries(Call&& call, std::size_t attempts, std::chrono::milliseconds backoff,
                             const std::string& what)
{
    std::string last;
    for (std::size_t i = 0; i < attempts; ++i) {
        if (i > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = call();
        if (res && res->status < 500)
            return res;
        last = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    }
    throw ExternalServiceError(what + " failed after " + std::to_string(attempts) + " attempts: " + last);
}

} // namespace

RemoteScorer::RemoteScorer(std::string base_url, std::size_t max_attempts, std::chrono::milliseconds initial_backoff)
    : m_max_attempts(std::max<std::size_t>(1, max_attempts)), m_backoff(initial_backoff)
{
    auto [base, path] = split_url(base_url);
    m_base = base;
    m_prefix = path == "/" ? "" : path;
    while (!m_prefix.empty() && m_prefix.back() == '/')
        m_prefix.pop_back();

    auto res = with_retries(
        [&] {
            httplib::Client client(m_base);
            client.set_connection_timeout(std::chrono::seconds(5));
            return client.Get(m_prefix + "/capabilities");
        },
        m_max_attempts, m_backoff, "scorer capabilities request");
    if (res->status != 200)
        throw ExternalServiceError("scorer /capabilities returned HTTP " + std::to_string(res->status));
    try {
        auto doc = nlohmann::json::parse(res->body);
        const auto n = doc.at("max_batch_size").get<long long>();
        if (n < 1)
            throw ExternalServiceError("scorer advertises max_batch_size < 1");
        m_max_batch = static_cast<std::size_t>(n);
    } catch (const nlohmann::json::exception& e) {
        throw ExternalServiceError(std::string("malformed /capabilities response: ") + e.what());
    }
}

std::string RemoteScorer::url_from_env()
{
    const char* v = std::getenv("OCD_SCORER_URL");
    if (!v || !*v)
        throw ValidationError("OCD_SCORER_URL is not set");
    return v;
}

std::vector<double> RemoteScorer::score_batch(const StructuredQuery& query,
                                              const std::vector<ScoringSegment>& segments)
{
    nlohmann::json body;
    body["query"] = query.rendered;
    body["segments"] = nlohmann::json::array();
    for (const auto& s : segments)
        body["segments"].push_back(s.text);
    const std::string payload = body.dump();

    auto res = with_retries(
        [&] {
            httplib::Client client(m_base);
            client.set_connection_timeout(std::chrono::seconds(5));
            client.set_read_timeout(std::chrono::seconds(120));
            return client.Post(m_prefix + "/score", payload, "application/json");
        },
        m_max_attempts, m_backoff, "scorer request");
    if (res->status != 200)
        throw std::runtime_error("scorer /score returned HTTP " + std::to_string(res->status));
    auto doc = nlohmann::json::parse(res->body);
    return doc.at("scores").get<std::vector<double>>();
}

} // namespace ocd
