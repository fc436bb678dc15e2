#include "fixtures.hpp"

#include "ocd/compressor.hpp"
#include "ocd/errors.hpp"
#include "ocd/text.hpp"

#include <doctest.h>

#include <algorithm>
#include <deque>
#include <random>

using namespace ocd;

namespace {

/// Returns queued scores in call order and records batch sizes.
class StubScorer : public Scorer
{
public:
    StubScorer(std::deque<double> scores, std::size_t batch) : m_scores(std::move(scores)), m_batch(batch) {}

    std::vector<double> score_batch(const StructuredQuery&, const std::vector<ScoringSegment>& segments) override
    {
        batches.push_back(segments.size());
        if (failures_left > 0) {
            --failures_left;
            throw std::runtime_error("stub failure");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            out.push_back(m_scores.empty() ? 0.3 : m_scores.front());
            if (!m_scores.empty())
                m_scores.pop_front();
        }
        return out;
    }
    std::size_t max_batch_size() const override { return m_batch; }
    std::string name() const override { return "stub"; }

    std::vector<std::size_t> batches;
    int failures_left = 0;

private:
    std::deque<double> m_scores;
    std::size_t m_batch;
};

/// `lines` lines of exactly 40 bytes (10 approx tokens) each.
std::string tokens_text(std::size_t lines)
{
    std::string s;
    for (std::size_t i = 0; i < lines; ++i) {
        std::string line = "x" + std::to_string(i) + " = 0";
        line.resize(39, ' ');
        s += line + "\n";
    }
    return s;
}

SegmentInput input(const std::string& id, std::string text, std::size_t order = 0)
{
    SegmentInput in;
    in.id = id;
    in.content.text = std::move(text);
    in.content.path = "m.py";
    in.order = order;
    return in;
}

ScoredSegment scored(const std::string& id, double score, std::size_t cost, double prio = 0, std::size_t order = 0)
{
    ScoredSegment s;
    s.unit_id = id;
    s.score = score;
    s.token_cost = cost;
    s.priority_tiebreak = prio;
    s.order_tiebreak = order;
    return s;
}

StructuredQuery query(const std::string& issue)
{
    return build_query(issue, {});
}

} // namespace

TEST_CASE("short segments are scored whole")
{
    StubScorer scorer({0.7}, 8);
    const auto out = score_segments(query("q"), {input("a", tokens_text(10))}, scorer, WindowConfig{});
    REQUIRE(out.size() == 1);
    CHECK(out[0].score == 0.7);
    CHECK(out[0].token_cost == 100);
    CHECK(scorer.batches == std::vector<std::size_t>{1});
    CHECK(score_segments(query("q"), {}, scorer, WindowConfig{}).empty());
}

TEST_CASE("a long segment takes the max over its windows")
{
    const auto text = tokens_text(120);
    REQUIRE(default_token_counter().count(text) == 1200);
    WindowConfig cfg;
    cfg.window_tokens = 512;
    cfg.stride_tokens = 400;
    ScoringSegment seg;
    seg.text = text;
    seg.span = {1, 120};
    const auto windows = split_windows(seg, cfg, default_token_counter());
    REQUIRE(windows.size() == 3);

    StubScorer scorer({0.2, 0.9, 0.4}, 8);
    const auto out = score_segments(query("q"), {input("a", text)}, scorer, cfg);
    CHECK(out[0].score == 0.9);
    CHECK(out[0].token_cost == 1200);
}

TEST_CASE("windows are line aligned, bounded and overlapping")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
        for (std::size_t i = 0; i < n; ++i)
            text += std::string(std::uniform_int_distribution<std::size_t>(0, 80)(rng), 'a') + "\n";
        WindowConfig cfg;
        cfg.window_tokens = std::uniform_int_distribution<std::size_t>(20, 600)(rng);
        cfg.stride_tokens = std::uniform_int_distribution<std::size_t>(1, cfg.window_tokens)(rng);
        ScoringSegment seg;
        seg.text = text;
        seg.span = {1, n};
        const auto& counter = default_token_counter();
        const auto windows = split_windows(seg, cfg, counter);
        REQUIRE_FALSE(windows.empty());
        if (counter.count(text) <= cfg.window_tokens) {
            CHECK(windows.size() == 1);
            continue;
        }
        CHECK(windows.front().span.start_line == 1);
        CHECK(windows.back().span.end_line == n);
        const auto lines = split_lines(text);
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const auto& span = windows[w].span;
            std::string expected;
            std::size_t tokens = 0;
            for (std::size_t l = span.start_line; l <= span.end_line; ++l) {
                expected += lines[l - 1];
                tokens += counter.count(lines[l - 1]);
            }
            CHECK(windows[w].text == expected);
            // A single over-long line is its own window.
            CHECK((tokens <= cfg.window_tokens || span.line_count() == 1));
            if (w > 0) {
                CHECK(span.start_line > windows[w - 1].span.start_line);
                CHECK(span.start_line <= windows[w - 1].span.end_line + 1);
            }
        }
    }
}

TEST_CASE("batches respect the scorer's batch size and scores are clamped")
{
    StubScorer scorer({1.7, -0.2, 0.5, 0.1, 0.2}, 2);
    std::vector<SegmentInput> in;
    for (int i = 0; i < 5; ++i)
        in.push_back(input("s" + std::to_string(i), "x = 1\n", static_cast<std::size_t>(i)));
    const auto out = score_segments(query("q"), in, scorer, WindowConfig{});
    CHECK(scorer.batches == std::vector<std::size_t>{2, 2, 1});
    CHECK(out[0].score == 1.0);
    CHECK(out[1].score == 0.0);
    CHECK(out[2].score == 0.5);
    for (const auto& s : out) {
        CHECK(s.score >= 0.0);
        CHECK(s.score <= 1.0);
    }
}

TEST_CASE("a failing batch is retried once, then scored zero with a warning")
{
    std::vector<SegmentInput> in{input("a", "x = 1\n"), input("b", "y = 2\n")};
    {
        StubScorer scorer({0.6, 0.8}, 8);
        scorer.failures_left = 1;
        std::vector<std::string> warnings;
        const auto out = score_segments(query("q"), in, scorer, WindowConfig{}, default_token_counter(), &warnings);
        CHECK(out[0].score == 0.6);
        CHECK(warnings.empty());
        CHECK(scorer.batches.size() == 2);
    }
    {
        StubScorer scorer({0.6, 0.8}, 8);
        scorer.failures_left = 2;
        std::vector<std::string> warnings;
        const auto out = score_segments(query("q"), in, scorer, WindowConfig{}, default_token_counter(), &warnings);
        CHECK(out[0].score == 0.0);
        CHECK(out[1].score == 0.0);
        CHECK(warnings.size() == 1);
        CHECK(scorer.batches.size() == 2);
    }
}

TEST_CASE("window config validation")
{
    WindowConfig c;
    CHECK_NOTHROW(c.validate());
    c.stride_tokens = 600;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.window_tokens = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("heuristic scores")
{
    const auto q = build_query("Figure DPI doubles", {{"figure.py", 3, std::nullopt}});
    ScoringSegment at_fault;
    at_fault.text = "def unrelated():\n    pass\n";
    at_fault.encloses_fault = true;
    CHECK(heuristic_score(q, at_fault) == 0.5);

    ScoringSegment lexical;
    lexical.text = "Figure.DPI = doubles\n";
    CHECK(heuristic_score(q, lexical) == 0.5);

    ScoringSegment unrelated;
    unrelated.text = "def helper():\n    return 0\n";
    CHECK(heuristic_score(q, unrelated) == 0.0);

    ScoringSegment half;
    half.text = "x = DPI\n";
    CHECK(heuristic_score(q, half) == doctest::Approx(0.5 / 3.0));

    CHECK(heuristic_score(build_query("!!!", {}), lexical) == 0.0);
}

TEST_CASE("structured query template")
{
    const auto q = build_query("DPI doubles on unpickle", {{"figure.py", 3043, std::string("__setstate__")},
                                                           {"backend.py", 7, std::nullopt}});
    CHECK(q.rendered
          == "ISSUE:\nDPI doubles on unpickle\n\nFAULT LOCATIONS:\n- figure.py:3043 [__setstate__]\n- backend.py:7\n");
    CHECK(build_query("x", {}).rendered == "ISSUE:\nx\n\nFAULT LOCATIONS:\n");
    CHECK(build_query("x", {}).rendered == build_query("x", {}).rendered);
    CHECK_THROWS_AS(build_query("", {}), ValidationError);
}

TEST_CASE("greedy selection examples")
{
    const std::vector<ScoredSegment> list{scored("1", 0.9, 150), scored("2", 0.8, 100), scored("3", 0.1, 50)};
    auto sel = select_greedy(list, 200);
    CHECK(sel.ids == UnitSet{"1", "3"});
    CHECK(sel.cost == 200);
    CHECK_FALSE(sel.over_budget);

    sel = select_greedy(list, 300);
    CHECK(sel.ids == UnitSet{"1", "2", "3"});

    sel = select_greedy({scored("1", 0.5, 300)}, 200);
    CHECK(sel.ids == UnitSet{"1"});
    CHECK(sel.over_budget);

    CHECK(select_greedy({}, 10).ids.empty());
}

TEST_CASE("greedy ties break by priority then order")
{
    const std::vector<ScoredSegment> list{scored("a", 0.5, 10, 1.0, 0), scored("b", 0.5, 10, 2.0, 1),
                                          scored("c", 0.5, 10, 1.0, 2)};
    CHECK(select_greedy(list, 10).ids == UnitSet{"b"});
    CHECK(select_greedy(list, 20).ids == UnitSet{"a", "b"});
}

TEST_CASE("greedy selection respects the budget on random lists")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<ScoredSegment> list;
        const int n = std::uniform_int_distribution<int>(0, 30)(rng);
        std::uniform_int_distribution<int> coarse(0, 10);
        for (int i = 0; i < n; ++i)
            list.push_back(scored("s" + std::to_string(i), coarse(rng) / 10.0,
                                  std::uniform_int_distribution<std::size_t>(0, 300)(rng), coarse(rng),
                                  static_cast<std::size_t>(i)));
        const std::size_t budget = std::uniform_int_distribution<std::size_t>(0, 2000)(rng);
        const auto sel = select_greedy(list, budget);

        std::size_t cost = 0;
        for (const auto& s : list)
            if (sel.ids.count(s.unit_id))
                cost += s.token_cost;
        CHECK(cost == sel.cost);
        if (sel.ids.size() >= 2)
            CHECK(cost <= budget);
        if (!list.empty())
            CHECK(!sel.ids.empty());
        CHECK(sel.over_budget == (cost > budget));

        // Reference: canonical order, fit-or-skip, first always kept.
        auto ranked = list;
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return std::tie(b.score, b.priority_tiebreak, a.order_tiebreak)
                   < std::tie(a.score, a.priority_tiebreak, b.order_tiebreak);
        });
        UnitSet expected;
        std::size_t used = 0;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (i == 0 || used + ranked[i].token_cost <= budget) {
                expected.insert(ranked[i].unit_id);
                used += ranked[i].token_cost;
            }
        }
        CHECK(sel.ids == expected);

        auto shuffled = list;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(select_greedy(shuffled, budget).ids == sel.ids);
    }
}

TEST_CASE("budget from rate")
{
    CHECK(CompressionBudget::from_rate(1000, 5.0).budget_tokens == 200);
    CHECK(CompressionBudget::from_rate(1001, 5.0).budget_tokens == 200);
    CHECK(CompressionBudget::from_rate(10, 1.000001).budget_tokens == 9);
    CHECK_THROWS_AS(CompressionBudget::from_rate(10, 1.0), ValidationError);
    CHECK_THROWS_AS(CompressionBudget::from_rate(10, 0.5), ValidationError);
}

namespace {

Instance instance_for(const std::string& issue, std::vector<FaultLocation> faults)
{
    Instance inst;
    inst.instance_id = "c";
    inst.issue_text = issue;
    inst.fault_locations = std::move(faults);
    return inst;
}

} // namespace

TEST_CASE("compress bookkeeping on random contexts")
{
    std::mt19937_64 rng(23);
    HeuristicScorer scorer;
    for (int trial = 0; trial < 200; ++trial) {
        const auto files = ocd::testing::random_context(rng, 4, 40);
        const UnitTree tree("t", files);
        const auto leaves = tree.leaf_ids();
        const CodeUnit& fault = tree.unit(leaves[rng() % leaves.size()]);
        const auto inst = instance_for("value is wrong for x1 and helper", {{fault.path, fault.span.start_line, {}}});
        CompressionOptions opts;
        opts.rate = std::uniform_real_distribution<double>(1.5, 8.0)(rng);
        const auto res = compress(inst, tree, scorer, opts);
        const auto& st = res.stats;
        std::string whole;
        for (const auto& f : files) {
            whole += "### FILE: " + f.path + "\n" + f.text;
            if (!f.text.empty() && f.text.back() != '\n')
                whole += "\n";
        }
        const std::size_t initial = default_token_counter().count(whole);
        CHECK(st.initial_tokens == initial);
        CHECK(st.budget_tokens == CompressionBudget::from_rate(initial, opts.rate).budget_tokens);
        CHECK(st.compressed_tokens == default_token_counter().count(res.text));
        if (st.compressed_tokens > 0)
            CHECK(st.achieved_rate == static_cast<double>(st.initial_tokens) / static_cast<double>(st.compressed_tokens));
        if (st.selected_segment_ids.size() >= 2)
            CHECK(st.compressed_tokens <= st.budget_tokens + 32);
        for (const auto& id : st.selected_segment_ids)
            CHECK(std::find(leaves.begin(), leaves.end(), id) != leaves.end());
        CHECK(st.latency_seconds >= 0.0);
        CHECK(res.warnings.empty());
    }
}

TEST_CASE("rate 5 on a 1000-token context")
{
    std::string text;
    for (int i = 0; i < 50; ++i) {
        std::string body = "def f" + std::to_string(i) + "():\n    return " + std::to_string(i) + "\n";
        body.resize(78, ' ');
        text += body + "\n\n";
    }
    const UnitTree tree("t", {{"m.py", text}});
    const std::size_t initial = default_token_counter().count("### FILE: m.py\n" + text);
    const auto inst = instance_for("f7 is wrong", {{"m.py", 8 * 2 + 1, {}}});
    HeuristicScorer scorer;
    const auto res = compress(inst, tree, scorer, {});
    CHECK(res.stats.initial_tokens == initial);
    CHECK(res.stats.budget_tokens == initial / 5);
    CHECK(res.stats.compressed_tokens <= res.stats.budget_tokens);
    CHECK(res.stats.achieved_rate >= 5.0);
    CHECK(res.stats.selected_segment_ids.size() >= 2);
}

TEST_CASE("the lexically matching segment is selected first")
{
    const std::string text = "def alpha():\n    return 1\n\n\ndef parse_header(raw):\n    return raw.split()\n\n\n"
                             "def gamma():\n    return 3\n\n\ndef delta():\n    return 4\n";
    const UnitTree tree("t", {{"m.py", text}});
    const auto inst = instance_for("parse_header crashes on raw input", {});
    const auto inputs = segment_inputs(tree, inst);
    HeuristicScorer scorer;
    const auto scoredv = score_segments(build_query(inst.issue_text, {}), inputs, scorer, WindowConfig{});
    const CodeUnit* target = tree.innermost_at("m.py", 5);
    const auto best = std::max_element(scoredv.begin(), scoredv.end(),
                                       [](const auto& a, const auto& b) { return a.score < b.score; });
    CHECK(best->unit_id == target->id);

    CompressionOptions opts;
    opts.rate = 3.0;
    const auto res = compress(inst, tree, scorer, opts);
    REQUIRE_FALSE(res.stats.selected_segment_ids.empty());
    CHECK(std::count(res.stats.selected_segment_ids.begin(), res.stats.selected_segment_ids.end(), target->id) == 1);
}

TEST_CASE("near-1 rate keeps everything")
{
    const UnitTree tree("t", {{"m.py", "def f():\n    return 1\n\n\ndef g():\n    return 2\n"}});
    HeuristicScorer scorer;
    CompressionOptions opts;
    opts.rate = 1.000001;
    const auto res = compress(instance_for("f", {}), tree, scorer, opts);
    CHECK(res.stats.achieved_rate == doctest::Approx(1.0).epsilon(0.1));
    CHECK(res.stats.selected_segment_ids.size() >= 1);
    opts.rate = 1.0;
    CHECK_THROWS_AS(compress(instance_for("f", {}), tree, scorer, opts), ValidationError);
}

TEST_CASE("compress is deterministic and the stats serialize")
{
    const auto files = ocd::testing::fixture_files();
    const UnitTree tree("t", files);
    HeuristicScorer scorer;
    const auto inst = instance_for("Figure dpi doubles after __setstate__", {{"figure.py", 3, std::nullopt}});
    const auto a = compress(inst, tree, scorer, {});
    const auto b = compress(inst, tree, scorer, {});
    CHECK(a.text == b.text);
    CHECK(a.stats.selected_segment_ids == b.stats.selected_segment_ids);
    const auto j = to_json(a.stats);
    for (const char* key : {"initial_tokens", "compressed_tokens", "achieved_rate", "latency_seconds",
                            "selected_segment_ids"})
        CHECK(j.contains(key));
}

TEST_CASE("fault segments are flagged")
{
    const std::string text = "def f():\n    return 1\n\n\ndef g():\n    return 2\n";
    const UnitTree tree("t", {{"m.py", text}});
    const auto inputs = segment_inputs(tree, instance_for("x", {{"m.py", 6, std::nullopt}}));
    REQUIRE(inputs.size() == 2);
    CHECK_FALSE(inputs[0].content.encloses_fault);
    CHECK(inputs[1].content.encloses_fault);
    CHECK(inputs[0].order < inputs[1].order);
}
