#pragma once

#include "ocd/code_model.hpp"

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ocd {

struct Instance;

struct OracleConfig
{
    std::size_t samples_n = 4;
    double pass_threshold = 0.5;
    std::size_t timeout_seconds = 600;
    bool cache_enabled = true;
    double temperature = 0.8;
    std::size_t max_tokens = 4096;
    std::size_t max_evaluations = 300; // per instance, cache hits excluded

    void validate() const;
};

struct SampleOutcome
{
    std::optional<std::string> patch_text;
    int test_exit_status = -1;
    double duration_seconds = 0.0;
    bool timed_out = false;
    bool apply_failed = false;

    bool passed() const { return test_exit_status == 0 && !timed_out && !apply_failed; }
};

struct OracleVerdict
{
    bool sufficient = false;
    std::size_t passes = 0;
    std::size_t samples = 0;
    std::vector<SampleOutcome> per_sample;
    bool cache_hit = false;
};

/// Minimum passes for sufficiency: ceil(threshold * samples).
std::size_t required_passes(std::size_t samples, double threshold);

/// Verdict from per-sample outcomes under the majority rule.
OracleVerdict tally(std::vector<SampleOutcome> samples, double threshold);

/// A candidate context: the retained leaf segments of one instance. The
/// rendered form is the upward closure of these leaves.
struct Candidate
{
    const UnitTree& tree;
    const Instance* instance = nullptr;
    UnitSet leaves;
};

class Oracle
{
public:
    virtual ~Oracle() = default;
    virtual OracleVerdict evaluate(const Candidate& candidate) = 0;

    /// Whether evaluate() may be called from several threads at once.
    virtual bool concurrent_safe() const = 0;
};

/// Sufficient iff `required` is a subset of `included_leaves`.
OracleVerdict evaluate_mock(const UnitSet& included_leaves, const UnitSet& required);

/// Deterministic, monotone test double for the sufficiency predicate.
class MockOracle : public Oracle
{
public:
    explicit MockOracle(UnitSet required) : m_required(std::move(required)) {}

    OracleVerdict evaluate(const Candidate& candidate) override { return evaluate_mock(candidate.leaves, m_required); }
    bool concurrent_safe() const override { return true; }

    const UnitSet& required() const { return m_required; }

private:
    UnitSet m_required;
};

/// Mock that also fails whenever any distractor segment is present, which
/// models a context that misleads the repair model. Not monotone.
class DistractorMockOracle : public Oracle
{
public:
    DistractorMockOracle(UnitSet required, UnitSet distractors)
        : m_required(std::move(required)), m_distractors(std::move(distractors))
    {
    }

    OracleVerdict evaluate(const Candidate& candidate) override;
    bool concurrent_safe() const override { return true; }

private:
    UnitSet m_required;
    UnitSet m_distractors;
};

/// Hash of the instance id and the sorted leaf set.
std::string verdict_cache_key(const std::string& instance_id, const UnitSet& included_leaf_ids);

/// Thread-safe verdict store shared by both search phases. The first
/// verdict stored for a key is retained.
class VerdictCache
{
public:
    std::optional<OracleVerdict> lookup(const std::string& key) const;
    void store(const std::string& key, const OracleVerdict& verdict);
    std::size_t size() const;

private:
    mutable std::mutex m_mutex;
    std::unordered_map<std::string, OracleVerdict> m_entries;
};

/// Per-instance gateway to an oracle: caching, call accounting and the
/// evaluation budget.
class OracleSession
{
public:
    OracleSession(Oracle& oracle, const UnitTree& tree, const Instance* instance, OracleConfig config,
                  std::shared_ptr<VerdictCache> cache = std::make_shared<VerdictCache>());

    /// Evaluates a leaf set. `fresh` bypasses the cache lookup (the result
    /// is still stored). Throws BudgetExhausted when a real oracle call
    /// would exceed max_evaluations.
    OracleVerdict evaluate(const UnitSet& leaves, bool fresh = false);

    std::size_t invocations() const { return m_invocations; }
    std::size_t cache_hits() const { return m_cache_hits; }
    bool budget_exhausted() const { return m_exhausted; }

    const UnitTree& tree() const { return m_tree; }
    const OracleConfig& config() const { return m_config; }

private:
    Oracle& m_oracle;
    const UnitTree& m_tree;
    const Instance* m_instance;
    OracleConfig m_config;
    std::shared_ptr<VerdictCache> m_cache;
    std::size_t m_invocations = 0;
    std::size_t m_cache_hits = 0;
    bool m_exhausted = false;
};

} // namespace ocd
