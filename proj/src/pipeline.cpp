#include "ocd/pipeline.hpp"

#include "ocd/errors.hpp"
#include "ocd/ga_search.hpp"
#include "ocd/hdd.hpp"
#include "ocd/llm_oracle.hpp"
#include "ocd/priority.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

namespace ocd {

std::unique_ptr<Oracle> make_oracle(const Instance& instance, const UnitTree& tree, const RunConfig& config,
                                    const DistillOptions& options)
{
    if (options.oracle == OracleKind::llm) {
        if (!instance.gold_patch_path || !instance.coverage_report_path || !instance.test_command)
            throw ValidationError(instance.instance_id
                                  + ": the llm oracle needs gold_patch_path, coverage_report_path and test_command");
        const auto logs = std::filesystem::path(config.paths.traces) / "samples";
        return std::make_unique<LlmOracle>(LlmEndpoint::from_env(), config.oracle, logs);
    }
    UnitSet required = resolve_refs(tree, instance.mock_required);
    if (!instance.mock_distractors.empty())
        return std::make_unique<DistractorMockOracle>(std::move(required), resolve_refs(tree, instance.mock_distractors));
    return std::make_unique<MockOracle>(std::move(required));
}

namespace {

std::unique_ptr<std::ofstream> open_trace(const RunConfig& config, const DistillOptions& options,
                                          const std::string& instance_id, const char* suffix)
{
    if (!options.trace)
        return nullptr;
    const std::filesystem::path dir(config.paths.traces);
    std::filesystem::create_directories(dir);
    auto out = std::make_unique<std::ofstream>(dir / (instance_id + suffix), std::ios::binary | std::ios::trunc);
    if (!*out)
        throw ValidationError("cannot write trace in " + dir.string());
    return out;
}

} // namespace

DistillOutcome distill_instance(const Instance& instance, const RunConfig& config, const DistillOptions& options)
{
    const UnitTree tree = build_tree(instance);

    PatchInfo patch;
    if (instance.gold_patch_path)
        patch = parse_patch(read_file(*instance.gold_patch_path));
    CoverageReport cov;
    if (instance.coverage_report_path)
        cov = load_coverage(*instance.coverage_report_path);
    const PriorityMap phi = compute_priorities(tree, patch, cov, config.weights);

    auto oracle = make_oracle(instance, tree, config, options);
    OracleSession session(*oracle, tree, &instance, config.oracle);

    DistillOutcome out;
    DistilledInstance& rec = out.record;
    rec.instance_id = instance.instance_id;
    rec.repo = instance.repo;
    rec.issue_text = instance.issue_text;
    rec.fault_locations = instance.fault_locations;
    rec.context_segments = segment_records(tree);
    rec.provenance.skip_ga = options.skip_ga;

    auto ga_trace = open_trace(config, options, instance.instance_id, ".ga.jsonl");
    auto hdd_trace = open_trace(config, options, instance.instance_id, ".hdd.jsonl");

    std::optional<UnitSet> start;
    if (options.skip_ga) {
        const UnitSet all(tree.leaf_ids().begin(), tree.leaf_ids().end());
        try {
            if (session.evaluate(all).sufficient)
                start = all;
        } catch (const BudgetExhausted&) {
            out.budget_exhausted = true;
        }
    } else {
        GAResult ga = run_ga(tree, phi, patch, session, config.ga, ga_trace.get());
        rec.provenance.ga_generations = ga.generation + 1;
        rec.provenance.phase1_success = ga.genome.has_value();
        out.budget_exhausted = ga.budget_exhausted;
        if (ga.genome)
            start = std::move(ga.leaves);
    }

    if (start) {
        MinimizationResult m = minimize(*start, session, phi, hdd_trace.get());
        rec.minimal_leaf_ids = std::move(m.retained_leaf_ids);
        rec.one_minimal_certified = m.one_minimal_certified;
        rec.provenance.phase2_passes = m.passes_completed;
        rec.status = m.budget_exhausted ? DistillStatus::partial : DistillStatus::minimized;
        out.budget_exhausted = out.budget_exhausted || m.budget_exhausted;
    }
    rec.oracle_calls = session.invocations();
    return out;
}

std::vector<DistillOutcome> distill_batch(const std::vector<Instance>& instances, const RunConfig& config,
                                          const DistillOptions& options)
{
    std::vector<DistillOutcome> results(instances.size());
    std::vector<std::exception_ptr> errors(instances.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) {
            try {
                results[i] = distill_instance(instances[i], config, options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n = std::min<std::size_t>(std::max<std::size_t>(1, config.parallelism), instances.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

std::vector<std::filesystem::path> instance_files(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw ValidationError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<AblationRow> run_ablation(const std::vector<Instance>& instances, const RunConfig& config,
                                      OracleKind oracle)
{
    DistillOptions with{oracle, false, false};
    DistillOptions without{oracle, true, false};
    const auto a = distill_batch(instances, config, with);
    const auto b = distill_batch(instances, config, without);
    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        AblationRow r;
        r.instance_id = instances[i].instance_id;
        r.with_ga = a[i].record.status;
        r.without_ga = b[i].record.status;
        r.calls_with_ga = a[i].record.oracle_calls;
        r.calls_without_ga = b[i].record.oracle_calls;
        r.size_with_ga = a[i].record.minimal_leaf_ids.size();
        r.size_without_ga = b[i].record.minimal_leaf_ids.size();
        rows.push_back(std::move(r));
    }
    return rows;
}

nlohmann::ordered_json ablation_report(const std::vector<AblationRow>& rows)
{
    nlohmann::ordered_json j;
    std::size_t ok_with = 0, ok_without = 0;
    j["instances"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        const bool sw = r.with_ga != DistillStatus::unminimized;
        const bool so = r.without_ga != DistillStatus::unminimized;
        ok_with += sw;
        ok_without += so;
        j["instances"].push_back({{"instance_id", r.instance_id},
                                  {"with_ga", {{"success", sw},
                                               {"status", to_string(r.with_ga)},
                                               {"oracle_calls", r.calls_with_ga},
                                               {"minimal_size", r.size_with_ga}}},
                                  {"without_ga", {{"success", so},
                                                  {"status", to_string(r.without_ga)},
                                                  {"oracle_calls", r.calls_without_ga},
                                                  {"minimal_size", r.size_without_ga}}}});
    }
    j["success_with_ga"] = ok_with;
    j["success_without_ga"] = ok_without;
    return j;
}

CompressionResult compress_instance(const Instance& instance, Scorer& scorer, const RunConfig& config)
{
    const UnitTree tree = build_tree(instance);
    CompressionOptions opts;
    opts.rate = config.compression.rate;
    opts.windows = {config.compression.window_tokens, config.compression.stride_tokens};
    opts.counter = make_token_counter(config.compression.token_counter);
    return compress(instance, tree, scorer, opts);
}

} // namespace ocd
