#include "ocd/compressor.hpp"

#include "ocd/errors.hpp"
#include "ocd/priority.hpp"
#include "ocd/python_lexer.hpp"
#include "ocd/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ocd {

double heuristic_score(const StructuredQuery& query, const ScoringSegment& segment)
{
    const auto issue_ids = python::identifier_set(query.issue_text);
    double overlap = 0.0;
    if (!issue_ids.empty()) {
        const auto seg_ids = python::identifier_set(segment.text);
        std::size_t common = 0;
        for (const auto& id : issue_ids)
            common += seg_ids.count(id);
        overlap = static_cast<double>(common) / static_cast<double>(issue_ids.size());
    }
    return 0.5 * overlap + (segment.encloses_fault ? 0.5 : 0.0);
}

std::vector<double> HeuristicScorer::score_batch(const StructuredQuery& query,
                                                 const std::vector<ScoringSegment>& segments)
{
    std::vector<double> out;
    out.reserve(segments.size());
    for (const auto& s : segments)
        out.push_back(heuristic_score(query, s));
    return out;
}

void WindowConfig::validate() const
{
    if (window_tokens < 1)
        throw ValidationError("compression.window_tokens must be >= 1");
    if (stride_tokens < 1 || stride_tokens > window_tokens)
        throw ValidationError("compression.stride_tokens must be in [1, window_tokens]");
}

std::vector<ScoringSegment> split_windows(const ScoringSegment& segment, const WindowConfig& cfg,
                                          const TokenCounter& counter)
{
    if (counter.count(segment.text) <= cfg.window_tokens)
        return {segment};

    const auto lines = split_lines(segment.text);
    std::vector<std::size_t> cost(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i)
        cost[i] = counter.count(lines[i]);

    std::vector<ScoringSegment> windows;
    std::size_t start = 0;
    while (start < lines.size()) {
        std::size_t end = start, used = 0;
        while (end < lines.size() && (end == start || used + cost[end] <= cfg.window_tokens))
            used += cost[end++];

        ScoringSegment w = segment;
        w.text.clear();
        for (std::size_t i = start; i < end; ++i)
            w.text += lines[i];
        if (!segment.span.empty())
            w.span = Span{segment.span.start_line + start, segment.span.start_line + end - 1};
        windows.push_back(std::move(w));
        if (end == lines.size())
            break;

        std::size_t next = start, advanced = 0;
        while (next < end && (next == start || advanced < cfg.stride_tokens))
            advanced += cost[next++];
        start = next;
    }
    return windows;
}

namespace {

double clamp_score(double s)
{
    if (std::isnan(s))
        return 0.0;
    return std::clamp(s, 0.0, 1.0);
}

} // namespace

std::vector<ScoredSegment> score_segments(const StructuredQuery& query, const std::vector<SegmentInput>& segments,
                                          Scorer& scorer, const WindowConfig& cfg, const TokenCounter& counter,
                                          std::vector<std::string>* warnings)
{
    cfg.validate();
    std::vector<ScoringSegment> pieces;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        for (auto& w : split_windows(segments[i].content, cfg, counter)) {
            pieces.push_back(std::move(w));
            owner.push_back(i);
        }
    }

    std::vector<double> piece_scores(pieces.size(), 0.0);
    const std::size_t batch = std::max<std::size_t>(1, scorer.max_batch_size());
    for (std::size_t begin = 0; begin < pieces.size(); begin += batch) {
        const std::size_t end = std::min(pieces.size(), begin + batch);
        const std::vector<ScoringSegment> slice(pieces.begin() + static_cast<std::ptrdiff_t>(begin),
                                                pieces.begin() + static_cast<std::ptrdiff_t>(end));
        std::string error;
        bool ok = false;
        for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
            try {
                auto scores = scorer.score_batch(query, slice);
                if (scores.size() != slice.size()) {
                    error = "scorer returned " + std::to_string(scores.size()) + " scores for "
                            + std::to_string(slice.size()) + " segments";
                    continue;
                }
                for (std::size_t k = 0; k < scores.size(); ++k)
                    piece_scores[begin + k] = clamp_score(scores[k]);
                ok = true;
            } catch (const ExternalServiceError&) {
                throw; // an unreachable service is fatal, not a bad batch
            } catch (const std::exception& e) {
                error = e.what();
            }
        }
        if (!ok && warnings)
            warnings->push_back("scoring batch " + std::to_string(begin / batch) + " failed twice, scored 0: "
                                + error);
    }

    std::vector<ScoredSegment> out(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        out[i].unit_id = segments[i].id;
        out[i].token_cost = counter.count(segments[i].content.text);
        out[i].priority_tiebreak = segments[i].priority_tiebreak;
        out[i].order_tiebreak = segments[i].order;
    }
    std::vector<bool> seen(segments.size(), false);
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        auto& s = out[owner[p]];
        s.score = seen[owner[p]] ? std::max(s.score, piece_scores[p]) : piece_scores[p];
        seen[owner[p]] = true;
    }
    return out;
}

CompressionBudget CompressionBudget::from_rate(std::size_t initial_tokens, double rate)
{
    if (!(rate > 1.0) || !std::isfinite(rate))
        throw ValidationError("compression rate must be > 1");
    CompressionBudget b;
    b.target_rate = rate;
    b.budget_tokens = static_cast<std::size_t>(std::floor(static_cast<double>(initial_tokens) / rate));
    return b;
}

Selection select_greedy(const std::vector<ScoredSegment>& scored, std::size_t budget_tokens)
{
    std::vector<const ScoredSegment*> ranked;
    ranked.reserve(scored.size());
    for (const auto& s : scored)
        ranked.push_back(&s);
    std::sort(ranked.begin(), ranked.end(), [](const ScoredSegment* a, const ScoredSegment* b) {
        if (a->score != b->score)
            return a->score > b->score;
        if (a->priority_tiebreak != b->priority_tiebreak)
            return a->priority_tiebreak > b->priority_tiebreak;
        if (a->order_tiebreak != b->order_tiebreak)
            return a->order_tiebreak < b->order_tiebreak;
        return a->unit_id < b->unit_id;
    });

    Selection sel;
    for (const ScoredSegment* s : ranked) {
        if (sel.ids.empty() && s->token_cost > budget_tokens) {
            sel.ids.insert(s->unit_id); // floor rule
            sel.cost = s->token_cost;
            sel.over_budget = true;
            continue;
        }
        if (sel.cost + s->token_cost <= budget_tokens) {
            sel.ids.insert(s->unit_id);
            sel.cost += s->token_cost;
        }
    }
    return sel;
}

nlohmann::ordered_json to_json(const CompressionStats& stats)
{
    nlohmann::ordered_json j;
    j["initial_tokens"] = stats.initial_tokens;
    j["compressed_tokens"] = stats.compressed_tokens;
    j["achieved_rate"] = stats.achieved_rate;
    j["latency_seconds"] = stats.latency_seconds;
    j["selected_segment_ids"] = stats.selected_segment_ids;
    j["budget_tokens"] = stats.budget_tokens;
    j["over_budget"] = stats.over_budget;
    return j;
}

std::vector<SegmentInput> segment_inputs(const UnitTree& tree, const Instance& instance)
{
    // Fault locations resolve to their innermost unit.
    std::vector<const CodeUnit*> fault_units;
    for (const auto& f : instance.fault_locations)
        if (const CodeUnit* u = tree.innermost_at(canonical_path(f.path), f.line))
            fault_units.push_back(u);

    // Coverage is the only priority signal available without a gold patch.
    CoverageReport cov;
    if (instance.coverage_report_path)
        cov = load_coverage(*instance.coverage_report_path);
    const PriorityWeights weights;

    std::vector<SegmentInput> out;
    for (const CodeUnit* leaf : leaf_segments(tree)) {
        SegmentInput in;
        in.id = leaf->id;
        in.content.text = std::string(tree.text(*leaf));
        in.content.path = leaf->path;
        in.content.span = leaf->span;
        for (const CodeUnit* f : fault_units)
            if (f->path == leaf->path && (leaf->span.contains(f->span) || f->span.contains(leaf->span)))
                in.content.encloses_fault = true;
        in.priority_tiebreak = priority(tree, *leaf, PatchInfo{}, cov, weights);
        in.order = tree.position(leaf->id);
        out.push_back(std::move(in));
    }
    return out;
}

CompressionResult compress(const Instance& instance, const UnitTree& tree, Scorer& scorer,
                           const CompressionOptions& options)
{
    const TokenCounter& counter = options.counter ? *options.counter : default_token_counter();
    const auto started = std::chrono::steady_clock::now();

    UnitSet everything(tree.unit_order().begin(), tree.unit_order().end());
    const std::size_t initial_tokens = counter.count(dump(render(tree, everything, counter).per_file));
    const auto budget = CompressionBudget::from_rate(initial_tokens, options.rate);

    CompressionResult result;
    const auto query = build_query(instance.issue_text, instance.fault_locations);
    const auto scored = score_segments(query, segment_inputs(tree, instance), scorer, options.windows, counter,
                                       &result.warnings);

    std::size_t allowance = budget.budget_tokens;
    Selection sel;
    for (;;) {
        sel = select_greedy(scored, allowance);
        result.rendered = render_leaves(tree, sel.ids, counter);
        result.text = dump(result.rendered.per_file);
        const std::size_t tokens = counter.count(result.text);
        if (tokens <= budget.budget_tokens || sel.ids.size() <= 1 || allowance == 0)
            break;
        // Placeholders and separators pushed the dump over; give the segments less room.
        allowance -= std::min(allowance, tokens - budget.budget_tokens);
    }

    auto& st = result.stats;
    st.initial_tokens = initial_tokens;
    st.compressed_tokens = counter.count(result.text);
    st.achieved_rate = st.compressed_tokens == 0
                           ? 0.0
                           : static_cast<double>(st.initial_tokens) / static_cast<double>(st.compressed_tokens);
    st.budget_tokens = budget.budget_tokens;
    st.over_budget = st.compressed_tokens > budget.budget_tokens;
    for (const auto& id : tree.unit_order())
        if (sel.ids.count(id))
            st.selected_segment_ids.push_back(id);
    st.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace ocd
