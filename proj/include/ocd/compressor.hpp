#pragma once

#include "ocd/code_model.hpp"
#include "ocd/instance.hpp"
#include "ocd/query.hpp"
#include "ocd/render.hpp"
#include "ocd/tokens.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace ocd {

/// What a scorer sees of one segment (or of one window of it).
struct ScoringSegment
{
    std::string text;
    std::string path;
    Span span;
    bool encloses_fault = false; // span contains, or lies inside, a fault location's enclosing unit
};

/// f(q, s) in [0, 1] for a batch of segments.
class Scorer
{
public:
    virtual ~Scorer() = default;

    /// One score per segment. Values outside [0, 1] are clamped by the caller.
    virtual std::vector<double> score_batch(const StructuredQuery& query,
                                            const std::vector<ScoringSegment>& segments) = 0;
    virtual std::size_t max_batch_size() const = 0;
    virtual std::string name() const = 0;
};

/// 0.5 * identifier overlap with the issue + 0.5 * [encloses fault].
double heuristic_score(const StructuredQuery& query, const ScoringSegment& segment);

class HeuristicScorer : public Scorer
{
public:
    std::vector<double> score_batch(const StructuredQuery& query,
                                    const std::vector<ScoringSegment>& segments) override;
    std::size_t max_batch_size() const override { return 64; }
    std::string name() const override { return "heuristic"; }
};

struct WindowConfig
{
    std::size_t window_tokens = 512;
    std::size_t stride_tokens = 256;

    void validate() const;
};

/// A leaf segment queued for scoring.
struct SegmentInput
{
    UnitId id;
    ScoringSegment content;
    double priority_tiebreak = 0.0;
    std::size_t order = 0; // unit_order index
};

struct ScoredSegment
{
    UnitId unit_id;
    double score = 0.0;
    std::size_t token_cost = 0;
    double priority_tiebreak = 0.0;
    std::size_t order_tiebreak = 0;
};

/// Line-aligned windows of roughly `window_tokens`, each starting about
/// `stride_tokens` after the previous one. Text that fits is one window.
std::vector<ScoringSegment> split_windows(const ScoringSegment& segment, const WindowConfig& cfg,
                                          const TokenCounter& counter);

/// Scores every segment; long ones are the max over their windows. A failed
/// batch is retried once, then scored 0 with a message in `warnings`.
std::vector<ScoredSegment> score_segments(const StructuredQuery& query, const std::vector<SegmentInput>& segments,
                                          Scorer& scorer, const WindowConfig& cfg,
                                          const TokenCounter& counter = default_token_counter(),
                                          std::vector<std::string>* warnings = nullptr);

struct CompressionBudget
{
    double target_rate = 5.0;
    std::size_t budget_tokens = 0;

    /// floor(initial_tokens / rate); throws ValidationError unless rate > 1.
    static CompressionBudget from_rate(std::size_t initial_tokens, double rate);
};

struct Selection
{
    UnitSet ids;
    std::size_t cost = 0;
    bool over_budget = false; // the floor rule kept a segment larger than the budget
};

/// Descending score, then priority_tiebreak descending, then order
/// ascending; segments that do not fit are skipped. The top segment is
/// always kept.
Selection select_greedy(const std::vector<ScoredSegment>& scored, std::size_t budget_tokens);

struct CompressionStats
{
    std::size_t initial_tokens = 0;
    std::size_t compressed_tokens = 0;
    double achieved_rate = 0.0;
    double latency_seconds = 0.0;
    std::size_t budget_tokens = 0;
    bool over_budget = false;
    std::vector<UnitId> selected_segment_ids; // unit order
};

nlohmann::ordered_json to_json(const CompressionStats& stats);

struct CompressionOptions
{
    double rate = 5.0;
    WindowConfig windows;
    std::shared_ptr<const TokenCounter> counter;
};

struct CompressionResult
{
    RenderedContext rendered;
    std::string text; // dump of the rendered context
    CompressionStats stats;
    std::vector<std::string> warnings;
};

/// Leaf segments of the tree as scoring inputs for an instance's query.
std::vector<SegmentInput> segment_inputs(const UnitTree& tree, const Instance& instance);

/// build_query, score_segments, select_greedy and render. The selection
/// budget shrinks until the rendered dump, placeholders and file
/// separators included, fits the token budget.
CompressionResult compress(const Instance& instance, const UnitTree& tree, Scorer& scorer,
                           const CompressionOptions& options);

} // namespace ocd
