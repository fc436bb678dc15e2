#include "ocd/config.hpp"

#include "ocd/compressor.hpp"
#include "ocd/errors.hpp"
#include "ocd/instance.hpp"
#include "ocd/tokens.hpp"

namespace ocd {

void RunConfig::validate() const
{
    weights.validate();
    ga.validate();
    oracle.validate();
    if (!(compression.rate > 1.0))
        throw ValidationError("compression.rate must be > 1");
    WindowConfig{compression.window_tokens, compression.stride_tokens}.validate();
    make_token_counter(compression.token_counter);
    if (parallelism < 1)
        throw ValidationError("parallelism must be >= 1");
    for (const auto* p : {&paths.corpus, &paths.traces, &paths.output})
        if (p->empty())
            throw ValidationError("paths entries must not be empty");
}

nlohmann::ordered_json RunConfig::to_json() const
{
    nlohmann::ordered_json j;
    j["weights"] = {{"w_p", weights.w_p}, {"w_c", weights.w_c}, {"w_s", weights.w_s}};
    j["ga"] = {{"population_size", ga.population_size},
               {"max_generations", ga.max_generations},
               {"mutation_rate", ga.mutation_rate},
               {"tournament_size", ga.tournament_size},
               {"elite_fraction", ga.elite_fraction},
               {"rng_seed", ga.rng_seed}};
    j["oracle"] = {{"samples_n", oracle.samples_n},
                   {"pass_threshold", oracle.pass_threshold},
                   {"timeout_seconds", oracle.timeout_seconds},
                   {"cache_enabled", oracle.cache_enabled},
                   {"temperature", oracle.temperature},
                   {"max_tokens", oracle.max_tokens},
                   {"max_evaluations", oracle.max_evaluations}};
    j["compression"] = {{"rate", compression.rate},
                        {"window_tokens", compression.window_tokens},
                        {"stride_tokens", compression.stride_tokens},
                        {"token_counter", compression.token_counter}};
    j["parallelism"] = parallelism;
    j["paths"] = {{"corpus", paths.corpus}, {"traces", paths.traces}, {"output", paths.output}};
    return j;
}

namespace {

bool same_kind(const nlohmann::json& schema, const nlohmann::json& value)
{
    if (schema.is_boolean())
        return value.is_boolean();
    if (schema.is_number_unsigned())
        return value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0);
    if (schema.is_number())
        return value.is_number();
    if (schema.is_string())
        return value.is_string();
    return false;
}

// Overlays `doc` onto `base` (the defaults), rejecting keys the defaults lack.
void overlay(nlohmann::json& base, const nlohmann::json& doc, const std::string& where)
{
    if (!doc.is_object())
        throw ValidationError("config" + (where.empty() ? std::string() : " key '" + where + "'")
                              + " must be an object");
    for (const auto& [key, value] : doc.items()) {
        const std::string name = where.empty() ? key : where + "." + key;
        if (!base.contains(key))
            throw ValidationError("unknown config key '" + name + "'");
        auto& slot = base[key];
        if (slot.is_object()) {
            overlay(slot, value, name);
        } else {
            if (!same_kind(slot, value))
                throw ValidationError("config key '" + name + "' has the wrong type");
            slot = value;
        }
    }
}

RunConfig from_checked(const nlohmann::json& j)
{
    RunConfig c;
    const auto& w = j.at("weights");
    c.weights = {w.at("w_p"), w.at("w_c"), w.at("w_s")};
    const auto& g = j.at("ga");
    c.ga.population_size = g.at("population_size");
    c.ga.max_generations = g.at("max_generations");
    c.ga.mutation_rate = g.at("mutation_rate");
    c.ga.tournament_size = g.at("tournament_size");
    c.ga.elite_fraction = g.at("elite_fraction");
    c.ga.rng_seed = g.at("rng_seed");
    const auto& o = j.at("oracle");
    c.oracle.samples_n = o.at("samples_n");
    c.oracle.pass_threshold = o.at("pass_threshold");
    c.oracle.timeout_seconds = o.at("timeout_seconds");
    c.oracle.cache_enabled = o.at("cache_enabled");
    c.oracle.temperature = o.at("temperature");
    c.oracle.max_tokens = o.at("max_tokens");
    c.oracle.max_evaluations = o.at("max_evaluations");
    const auto& k = j.at("compression");
    c.compression.rate = k.at("rate");
    c.compression.window_tokens = k.at("window_tokens");
    c.compression.stride_tokens = k.at("stride_tokens");
    c.compression.token_counter = k.at("token_counter");
    c.parallelism = j.at("parallelism");
    const auto& p = j.at("paths");
    c.paths.corpus = p.at("corpus");
    c.paths.traces = p.at("traces");
    c.paths.output = p.at("output");
    return c;
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& doc)
{
    nlohmann::json merged = nlohmann::json::parse(RunConfig{}.to_json().dump());
    overlay(merged, doc, "");
    RunConfig c = from_checked(merged);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& file)
{
    const std::string text = read_file(file);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + file.string() + ": " + e.what());
    }
    return from_json(doc);
}

void RunConfig::apply_override(std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ValidationError("--set expects key=value, got '" + std::string(assignment) + "'");
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));

    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;

    // Build the nested object {"a": {"b": value}} and overlay it.
    nlohmann::json doc = value;
    std::string_view rest = key;
    std::vector<std::string> parts;
    while (true) {
        auto dot = rest.find('.');
        parts.emplace_back(rest.substr(0, dot));
        if (dot == std::string_view::npos)
            break;
        rest.remove_prefix(dot + 1);
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it)
        doc = nlohmann::json{{*it, doc}};

    nlohmann::json merged = nlohmann::json::parse(to_json().dump());
    overlay(merged, doc, "");
    RunConfig c = from_checked(merged);
    c.validate();
    *this = std::move(c);
}

} // namespace ocd
