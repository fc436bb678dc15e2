#pragma once

#include "ocd/compressor.hpp"

#include <chrono>
#include <string>

namespace ocd {

/// Client for a scoring service:
///   GET  /capabilities -> {"max_batch_size": int}
///   POST /score {"query": str, "segments": [str]} -> {"scores": [float]}
class RemoteScorer : public Scorer
{
public:
    /// Queries /capabilities; throws ExternalServiceError when the service
    /// cannot be reached after `max_attempts` tries.
    explicit RemoteScorer(std::string base_url, std::size_t max_attempts = 3,
                          std::chrono::milliseconds initial_backoff = std::chrono::milliseconds(200));

    /// OCD_SCORER_URL; throws ValidationError when unset.
    static std::string url_from_env();

    std::vector<double> score_batch(const StructuredQuery& query,
                                    const std::vector<ScoringSegment>& segments) override;
    std::size_t max_batch_size() const override { return m_max_batch; }
    std::string name() const override { return "remote"; }

private:
    std::string m_base;
    std::string m_prefix; // path prefix of the base URL, without trailing '/'
    std::size_t m_max_attempts;
    std::chrono::milliseconds m_backoff;
    std::size_t m_max_batch = 16;
};

} // namespace ocd
