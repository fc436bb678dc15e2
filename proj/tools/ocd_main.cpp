// ocd: segment, distill, compress, export and stats over instance and corpus files.
//
// Exit codes: 0 success, 2 usage or validation error, 3 partial or degraded
// result, 4 external service failure.

#include "ocd/compressor.hpp"
#include "ocd/config.hpp"
#include "ocd/dataset.hpp"
#include "ocd/errors.hpp"
#include "ocd/instance.hpp"
#include "ocd/pipeline.hpp"
#include "ocd/remote_scorer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kPartial = 3;
constexpr int kExternal = 4;

struct Globals
{
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallelism;
    bool no_trace = false;
    std::vector<std::string> overrides;
};

ocd::RunConfig load_config(const Globals& g)
{
    ocd::RunConfig cfg = g.config_file.empty() ? ocd::RunConfig{} : ocd::RunConfig::load(g.config_file);
    for (const auto& o : g.overrides)
        cfg.apply_override(o);
    if (g.seed)
        cfg.ga.rng_seed = *g.seed;
    if (g.parallelism)
        cfg.parallelism = *g.parallelism;
    cfg.validate();
    return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ocd::ValidationError("cannot write " + path.string());
    out << text;
}

void emit(const std::string& out_path, const std::string& text)
{
    if (out_path.empty() || out_path == "-")
        std::cout << text;
    else
        write_text(out_path, text);
}

int cmd_segment(const Globals& g, const std::string& instance_file, const std::string& out)
{
    load_config(g);
    const auto instance = ocd::load_instance(instance_file);
    const auto tree = ocd::build_tree(instance);
    emit(out, ocd::segment_dump_jsonl(tree));
    return kOk;
}

struct DistillArgs
{
    std::string instance_file;
    std::string batch_dir;
    std::string oracle = "mock";
    std::string out;
    std::string ablation;
    bool skip_ga = false;
};

int cmd_distill(const Globals& g, const DistillArgs& a)
{
    const auto cfg = load_config(g);
    if (a.instance_file.empty() == a.batch_dir.empty())
        throw ocd::ValidationError("distill takes exactly one of an instance file or --batch <dir>");

    std::vector<ocd::Instance> instances;
    if (!a.batch_dir.empty()) {
        for (const auto& f : ocd::instance_files(a.batch_dir))
            instances.push_back(ocd::load_instance(f));
    } else {
        instances.push_back(ocd::load_instance(a.instance_file));
    }

    ocd::DistillOptions opts;
    opts.oracle = a.oracle == "llm" ? ocd::OracleKind::llm : ocd::OracleKind::mock;
    opts.skip_ga = a.skip_ga;
    opts.trace = !g.no_trace;

    if (!a.ablation.empty()) {
        const auto rows = ocd::run_ablation(instances, cfg, opts.oracle);
        write_text(a.ablation, ocd::ablation_report(rows).dump(2) + "\n");
        for (const auto& r : rows)
            std::cout << r.instance_id << "\twith_ga=" << ocd::to_string(r.with_ga)
                      << "\twithout_ga=" << ocd::to_string(r.without_ga) << "\n";
        return kOk;
    }

    const auto outcomes = ocd::distill_batch(instances, cfg, opts);
    const std::string corpus = a.out.empty() ? cfg.paths.corpus : a.out;
    bool partial = false;
    for (const auto& o : outcomes) {
        ocd::append_corpus(o.record, corpus);
        partial = partial || o.budget_exhausted;
        std::cout << o.record.instance_id << "\t" << ocd::to_string(o.record.status)
                  << "\tretained=" << o.record.minimal_leaf_ids.size() << "/" << o.record.context_segments.size()
                  << "\toracle_calls=" << o.record.oracle_calls
                  << "\tcertified=" << (o.record.one_minimal_certified ? "yes" : "no") << "\n";
    }
    if (partial) {
        std::cerr << "oracle budget exhausted; partial results recorded\n";
        return kPartial;
    }
    return kOk;
}

int cmd_compress(const Globals& g, const std::string& instance_file, std::optional<double> rate,
                 const std::string& scorer_name, const std::string& out)
{
    auto cfg = load_config(g);
    if (rate) {
        if (!(*rate > 1.0))
            throw ocd::ValidationError("--rate must be > 1");
        cfg.compression.rate = *rate;
    }
    const auto instance = ocd::load_instance(instance_file);

    std::unique_ptr<ocd::Scorer> scorer;
    if (scorer_name == "remote")
        scorer = std::make_unique<ocd::RemoteScorer>(ocd::RemoteScorer::url_from_env());
    else
        scorer = std::make_unique<ocd::HeuristicScorer>();

    const auto result = ocd::compress_instance(instance, *scorer, cfg);
    const std::filesystem::path target =
        out.empty() ? std::filesystem::path(cfg.paths.output) / (instance.instance_id + ".txt")
                    : std::filesystem::path(out);
    write_text(target, result.text);
    write_text(target.string() + ".stats.json", ocd::to_json(result.stats).dump(2) + "\n");
    std::cout << target.string() << "\tinitial=" << result.stats.initial_tokens
              << "\tcompressed=" << result.stats.compressed_tokens << "\trate=" << result.stats.achieved_rate << "\n";
    for (const auto& w : result.warnings)
        std::cerr << "warning: " << w << "\n";
    return result.warnings.empty() ? kOk : kPartial;
}

int cmd_export(const Globals& g, const std::string& corpus_file, const std::string& out)
{
    load_config(g);
    const auto corpus = ocd::load_corpus(corpus_file);
    ocd::ExportResult res;
    try {
        res = ocd::export_triples(corpus);
    } catch (const ocd::ValidationError& e) {
        std::cerr << "ocd export: " << e.what() << "\n";
        return kPartial;
    }
    if (out.empty() || out == "-") {
        ocd::write_triples(std::cout, res.triples);
    } else {
        std::ostringstream ss;
        ocd::write_triples(ss, res.triples);
        write_text(out, ss.str());
        write_text(out + ".meta.json", res.metadata().dump(2) + "\n");
    }
    return kOk;
}

int cmd_stats(const Globals& g, const std::string& corpus_file, const std::string& out)
{
    load_config(g);
    const auto corpus = ocd::load_corpus(corpus_file);
    emit(out, ocd::to_json(ocd::compute_stats(corpus)).dump(2) + "\n");
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Oracle-guided context distillation and compression"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_file, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "GA random seed");
    app.add_option("--parallelism", g.parallelism, "instances processed concurrently");
    app.add_flag("--no-trace", g.no_trace, "do not write search traces");
    app.add_option("--set", g.overrides, "override a config value: section.key=value");

    std::string instance_file, out, corpus_file;

    auto* seg = app.add_subcommand("segment", "dump the leaf segments of an instance as JSONL");
    seg->add_option("instance", instance_file, "instance JSON")->required();
    seg->add_option("--out", out, "output file (default stdout)");

    DistillArgs dargs;
    auto* dist = app.add_subcommand("distill", "minimize instance contexts and append them to the corpus");
    dist->add_option("instance", dargs.instance_file, "instance JSON");
    dist->add_option("--batch", dargs.batch_dir, "directory of instance JSON files");
    dist->add_option("--oracle", dargs.oracle, "mock or llm")->check(CLI::IsMember({"mock", "llm"}));
    dist->add_option("--out", dargs.out, "corpus JSONL (default paths.corpus)");
    dist->add_flag("--skip-ga", dargs.skip_ga, "minimize the full context without Phase I");
    dist->add_option("--ablation", dargs.ablation, "run with and without Phase I and write a JSON report");

    std::optional<double> rate;
    std::string scorer = "heuristic";
    auto* comp = app.add_subcommand("compress", "compress an instance context to a token budget");
    comp->add_option("instance", instance_file, "instance JSON")->required();
    comp->add_option("--rate", rate, "target compression rate (> 1)");
    comp->add_option("--scorer", scorer, "heuristic or remote")->check(CLI::IsMember({"heuristic", "remote"}));
    comp->add_option("--out", out, "compressed context file");

    auto* exp = app.add_subcommand("export", "write (query, segment, label) training triples");
    exp->add_option("corpus", corpus_file, "corpus JSONL")->required();
    exp->add_option("--out", out, "triples JSONL (default stdout)");

    auto* sts = app.add_subcommand("stats", "corpus statistics as JSON");
    sts->add_option("corpus", corpus_file, "corpus JSONL")->required();
    sts->add_option("--out", out, "report file (default stdout)");

    // Global flags may also follow the subcommand name.
    for (auto* sub : {seg, dist, comp, exp, sts})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*seg)
            return cmd_segment(g, instance_file, out);
        if (*dist)
            return cmd_distill(g, dargs);
        if (*comp)
            return cmd_compress(g, instance_file, rate, scorer, out);
        if (*exp)
            return cmd_export(g, corpus_file, out);
        if (*sts)
            return cmd_stats(g, corpus_file, out);
    } catch (const ocd::ValidationError& e) {
        std::cerr << "ocd: " << e.what() << "\n";
        return kUsage;
    } catch (const ocd::ExternalServiceError& e) {
        std::cerr << "ocd: " << e.what() << "\n";
        return kExternal;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "ocd: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "ocd: internal error: " << e.what() << "\n";
        return 1;
    }
    return kUsage;
}
