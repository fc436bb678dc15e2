#include "fixtures.hpp"

#include "ocd/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef OCD_FIXTURE_DIR
#error "OCD_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace ocd::testing {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi)
{
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string simple_statement(std::mt19937_64& rng, const std::string& indent, std::size_t& counter)
{
    const std::size_t k = counter++;
    switch (pick(rng, 0, 5)) {
    case 0: return indent + "v" + std::to_string(k) + " = " + std::to_string(k) + "\n";
    case 1: return indent + "print(\"value # \", v" + std::to_string(k) + ")\n";
    case 2: return indent + "items = [\n" + indent + "    1,\n" + indent + "    2,\n" + indent + "]\n";
    case 3: return indent + "text = '''multi\nline ''' + 'x'\n";
    case 4: return indent + "total = helper(a,\n" + indent + "               b)\n";
    default: return indent + "pass  # nothing\n";
    }
}

std::string compound_statement(std::mt19937_64& rng, const std::string& indent, std::size_t& counter)
{
    const std::string inner = indent + "    ";
    std::string s;
    switch (pick(rng, 0, 4)) {
    case 0:
        s = indent + "if a > " + std::to_string(counter++) + ":\n" + simple_statement(rng, inner, counter);
        if (pick(rng, 0, 1))
            s += indent + "else:\n" + simple_statement(rng, inner, counter);
        return s;
    case 1: return indent + "for i in range(3):\n" + simple_statement(rng, inner, counter);
    case 2: return indent + "while a < 0:\n" + inner + "a += 1\n";
    case 3:
        return indent + "try:\n" + simple_statement(rng, inner, counter) + indent + "except ValueError:\n" + inner
               + "raise\n";
    default: return indent + "with open(path) as fh:\n" + inner + "data = fh.read()\n";
    }
}

std::string function_def(std::mt19937_64& rng, const std::string& indent, const std::string& name,
                         bool method, std::size_t& counter)
{
    std::string s;
    if (pick(rng, 0, 4) == 0)
        s += indent + "@decorator\n";
    s += indent + "def " + name + "(" + (method ? "self, a" : "a, b=None") + "):\n";
    const std::string body = indent + "    ";
    if (pick(rng, 0, 2) == 0) {
        // Single group: the function stays one leaf.
        const std::size_t n = pick(rng, 1, 3);
        for (std::size_t i = 0; i < n; ++i)
            s += simple_statement(rng, body, counter);
        return s;
    }
    const std::size_t groups = pick(rng, 2, 4);
    bool last_simple = false;
    for (std::size_t g = 0; g < groups; ++g) {
        if (!last_simple && pick(rng, 0, 1)) {
            s += simple_statement(rng, body, counter);
            last_simple = true;
        } else {
            s += compound_statement(rng, body, counter);
            last_simple = false;
        }
    }
    return s;
}

} // namespace

std::string random_python_file(std::mt19937_64& rng, std::size_t max_items)
{
    std::size_t counter = 0;
    std::string out;
    if (pick(rng, 0, 2) == 0)
        out += "\"\"\"Module docstring.\"\"\"\n";
    if (pick(rng, 0, 1))
        out += "import os\nfrom sys import path as sys_path\n";
    const std::size_t items = pick(rng, 1, max_items);
    for (std::size_t i = 0; i < items; ++i) {
        if (!out.empty())
            out += pick(rng, 0, 3) == 0 ? "\n# section\n\n" : "\n\n";
        const std::string name = "f" + std::to_string(i);
        switch (pick(rng, 0, 3)) {
        case 0: out += simple_statement(rng, "", counter); break;
        case 1:
        case 2: out += function_def(rng, "", name, false, counter); break;
        default: {
            out += "class C" + std::to_string(i) + "(Base):\n";
            if (pick(rng, 0, 1))
                out += "    \"\"\"Doc.\"\"\"\n";
            out += "    attr: int = 1\n";
            const std::size_t methods = pick(rng, 0, 3);
            for (std::size_t m = 0; m < methods; ++m) {
                out += "\n";
                out += function_def(rng, "    ", "m" + std::to_string(m), true, counter);
            }
            if (methods > 0 && pick(rng, 0, 3) == 0)
                out += "\n    tail = 2\n";
        }
        }
    }
    if (pick(rng, 0, 3) == 0)
        out += "\n# trailing comment\n";
    return out;
}

std::vector<SourceFile> random_context(std::mt19937_64& rng, std::size_t max_files, std::size_t max_leaves)
{
    for (;;) {
        std::vector<SourceFile> files;
        const std::size_t n = pick(rng, 1, max_files);
        for (std::size_t i = 0; i < n; ++i)
            files.push_back({"pkg/mod" + std::to_string(i) + ".py", random_python_file(rng, 3)});
        const UnitTree tree("probe", files);
        if (!tree.leaf_ids().empty() && tree.leaf_ids().size() <= max_leaves)
            return files;
    }
}

std::vector<SourceFile> level_context(Level level, std::size_t n)
{
    std::vector<SourceFile> files;
    std::string text;
    switch (level) {
    case Level::file:
        for (std::size_t i = 0; i < n; ++i)
            files.push_back({"f" + std::to_string(i) + ".py",
                             "def g" + std::to_string(i) + "():\n    return " + std::to_string(i) + "\n"});
        return files;
    case Level::function:
        for (std::size_t i = 0; i < n; ++i)
            text += "def g" + std::to_string(i) + "():\n    return " + std::to_string(i) + "\n";
        break;
    case Level::block:
        text = "def f(a):\n";
        for (std::size_t i = 0; i < n; ++i)
            text += "    if a > " + std::to_string(i) + ":\n        a = " + std::to_string(i) + "\n";
        break;
    }
    files.push_back({"m.py", text});
    return files;
}

std::string fixture(const std::string& name)
{
    std::ifstream in(std::filesystem::path(OCD_FIXTURE_DIR) / name, std::ios::binary);
    if (!in)
        throw std::runtime_error("missing fixture " + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<SourceFile> fixture_files()
{
    std::vector<SourceFile> out;
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(OCD_FIXTURE_DIR))
        if (e.path().extension() == ".py")
            paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths)
        out.push_back({p.filename().string(), fixture(p.filename().string())});
    return out;
}

bool covers(const UnitSet& s, const UnitSet& required)
{
    for (const auto& r : required)
        if (!s.count(r))
            return false;
    return true;
}

bool one_minimal(const UnitSet& s, const std::function<bool(const UnitSet&)>& sufficient)
{
    for (const auto& x : s) {
        UnitSet smaller = s;
        smaller.erase(x);
        if (sufficient(smaller))
            return false;
    }
    return true;
}

std::vector<UnitId> ancestors(const UnitTree& tree, const UnitId& id)
{
    std::vector<UnitId> out;
    const CodeUnit* u = &tree.unit(id);
    while (u->parent_id) {
        out.push_back(*u->parent_id);
        u = &tree.unit(*u->parent_id);
    }
    return out;
}

UnitSet random_subset(std::mt19937_64& rng, const std::vector<UnitId>& ids, double p)
{
    std::bernoulli_distribution coin(p);
    UnitSet out;
    for (const auto& id : ids)
        if (coin(rng))
            out.insert(id);
    return out;
}

std::filesystem::path write_instance(const std::filesystem::path& dir, const std::string& instance_id,
                                     const std::vector<SourceFile>& files, const nlohmann::json& extra)
{
    const auto repo = dir / (instance_id + "-repo");
    nlohmann::json doc;
    doc["instance_id"] = instance_id;
    doc["issue_text"] = "Something is wrong in " + instance_id;
    doc["fault_location"] = nlohmann::json::array();
    doc["context_files"] = nlohmann::json::array();
    for (const auto& f : files) {
        const auto target = repo / f.path;
        std::filesystem::create_directories(target.parent_path());
        std::ofstream(target, std::ios::binary) << f.text;
        doc["context_files"].push_back({{"path", f.path}});
    }
    doc["repo_root"] = repo.filename().string();
    for (const auto& [k, v] : extra.items())
        doc[k] = v;
    const auto file = dir / (instance_id + ".json");
    std::ofstream(file, std::ios::binary) << doc.dump(2);
    return file;
}

const std::vector<PriorityCase>& priority_table()
{
    // ln 2 = 0.6931471805599453, ln 4 = 1.3862943611198906, ln 8 = 2.0794415416798357,
    // ln 11 = 2.3978952727983707, ln 101 = 4.6151205168412594
    static const std::vector<PriorityCase> table = {
        {1, 1, 1, true, 3, 0.5, 2.8862943611198906},
        {1, 1, 1, false, 0, 0.0, 0.0},
        {2, 0, 0, true, 5, 1.0, 2.0},
        {2, 1, 1, true, 0, 0.0, 2.0},
        {2, 1, 1, false, 1, 0.0, 0.6931471805599453},
        {2, 1, 1, true, 10, 0.25, 4.6478952727983707},
        {0.5, 2, 3, false, 7, 1.0 / 3.0, 5.1588830833596714},
        {1, 0.5, 0, true, 100, 0.9, 3.3075602584206297},
        {0, 0, 4, false, 0, 0.75, 3.0},
        {3, 3, 3, true, 3, 1.0, 10.158883083359672},
    };
    return table;
}

ScratchDir::ScratchDir()
{
    std::string tmpl = (std::filesystem::temp_directory_path() / "ocd-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data()))
        throw std::runtime_error("mkdtemp failed");
    m_path = tmpl;
}

ScratchDir::~ScratchDir()
{
    std::error_code ec;
    std::filesystem::remove_all(m_path, ec);
}

} // namespace ocd::testing
