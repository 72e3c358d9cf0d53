#include "rd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "rd/errors.hpp"
#include "rd/hash.hpp"
#include "rd/inference.hpp"
#include "rd/io.hpp"
#include "rd/mock_tools.hpp"
#include "rd/parallel.hpp"
#include "rd/sequence.hpp"
#include "rd/tasks.hpp"

namespace rd::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// configuration

namespace {

Json interpolate_env(const Json& j) {
    static const std::regex kVar(R"(\$\{([A-Za-z_][A-Za-z0-9_]*)\})");
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        std::string out;
        auto begin = std::sregex_iterator(s.begin(), s.end(), kVar);
        std::size_t last = 0;
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            const char* value = std::getenv(m[1].str().c_str());
            if (!value) throw Error("environment variable " + m[1].str() + " is not set");
            out += s.substr(last, static_cast<std::size_t>(m.position(0)) - last);
            out += value;
            last = static_cast<std::size_t>(m.position(0) + m.length(0));
        }
        out += s.substr(last);
        return out;
    }
    if (j.is_object()) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = interpolate_env(it.value());
        return out;
    }
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& v : j) out.push_back(interpolate_env(v));
        return out;
    }
    return j;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return fs::weakly_canonical(path.is_absolute() ? path : fs::absolute(base / path));
}

ToolConfig tool_from_json(const Json& j) {
    ToolConfig t;
    t.configured = true;
    const auto mode = j.value("mode", std::string("mock"));
    if (mode != "mock" && mode != "http") throw Error("tool mode must be mock or http, got '" + mode + "'");
    t.mock = mode == "mock";
    t.endpoint = j.value("endpoint", std::string());
    t.api_key_env = j.value("api_key_env", std::string());
    t.policy.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    t.policy.max_retries = j.value("max_retries", 3);
    t.policy.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", 250));
    t.policy.max_backoff = std::chrono::milliseconds(j.value("max_backoff_ms", 8000));
    return t;
}

Json tool_json(const ToolConfig& t) {
    Json j;
    j["mode"] = t.mock ? "mock" : "http";
    if (!t.mock) {
        j["endpoint"] = t.endpoint;
        j["api_key_env"] = t.api_key_env;
        j["timeout_ms"] = t.policy.timeout.count();
        j["max_retries"] = t.policy.max_retries;
        j["backoff_ms"] = t.policy.initial_backoff.count();
        j["max_backoff_ms"] = t.policy.max_backoff.count();
    }
    return j;
}

}  // namespace

const ToolConfig& PipelineConfig::tool(const std::string& name) const {
    static const ToolConfig kDefault;
    auto it = tools.find(name);
    return it == tools.end() ? kDefault : it->second;
}

bool PipelineConfig::any_mock() const {
    for (const char* name : kToolNames)
        if (tool(name).mock) return true;
    return false;
}

Json PipelineConfig::effective() const {
    Json j;
    Json ds = Json::array();
    for (const auto& d : datasets)
        ds.push_back(Json{{"path", d.path.string()}, {"subset", d.subset}, {"flow", tools::to_string(d.flow)}});
    j["datasets"] = std::move(ds);
    j["tool_seed"] = tool_seed;
    Json t;
    for (const char* name : kToolNames) t[name] = tool_json(tool(name));
    t["plot_to_table_configured"] = tool("plot_to_table").configured;
    j["tools"] = std::move(t);
    j["filter"] = Json{{"lambda", filter.boost_factor},
                       {"space", filter::to_string(filter.space)},
                       {"seed", balance_seed},
                       {"filter_whole_images", filter_whole_images}};
    j["crop_mode"] = crop::to_string(crop_mode);
    j["token_counter"] = token_counter;
    j["folds"] = Json{{"per_subset", folds_per_subset}, {"seed", fold_seed}};
    j["max_program_attempts"] = max_program_attempts;
    Json task_names = Json::array();
    for (auto k : tasks) task_names.push_back(task_file_stem(k));
    j["tasks"] = std::move(task_names);
    return j;
}

PipelineConfig load_config(const fs::path& path) {
    Json raw;
    try {
        raw = interpolate_env(Json::parse(io::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + path.string() + " is not valid JSON: " + e.what());
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    PipelineConfig c;
    try {
        for (const auto& d : raw.at("datasets")) {
            DatasetConfig dc;
            dc.path = resolve(base, d.at("path").get<std::string>());
            dc.subset = d.value("subset", dc.path.stem().string());
            dc.flow = tools::flow_from_string(d.value("flow", std::string("text-evidence")));
            c.datasets.push_back(std::move(dc));
        }
        c.output_dir = resolve(base, raw.value("output_dir", std::string("rd_out")));
        if (raw.contains("fixtures")) c.fixtures = resolve(base, raw.at("fixtures").get<std::string>());
        const auto seed = raw.value("seed", std::uint64_t{0});
        c.tool_seed = raw.value("tool_seed", seed);
        if (raw.contains("tools"))
            for (auto it = raw.at("tools").begin(); it != raw.at("tools").end(); ++it) {
                if (std::find_if(std::begin(kToolNames), std::end(kToolNames),
                                 [&](const char* n) { return it.key() == n; }) == std::end(kToolNames))
                    throw Error("unknown tool '" + it.key() + "'");
                c.tools[it.key()] = tool_from_json(it.value());
            }
        if (raw.contains("templates")) {
            const auto& t = raw.at("templates");
            if (t.contains("summarizer")) c.summarizer_template = resolve(base, t.at("summarizer").get<std::string>());
            if (t.contains("programmer")) c.programmer_template = resolve(base, t.at("programmer").get<std::string>());
        }
        c.balance_seed = seed;
        if (raw.contains("filter")) {
            const auto& f = raw.at("filter");
            c.filter.boost_factor = f.value("lambda", 2.0);
            c.filter.space = filter::score_space_from_string(f.value("space", std::string("probability")));
            c.balance_seed = f.value("seed", seed);
            c.filter_whole_images = f.value("filter_whole_images", false);
        }
        c.crop_mode = crop::crop_mode_from_string(raw.value("crop_mode", std::string("verbatim")));
        c.token_counter = raw.value("token_counter", std::string("whitespace"));
        c.concurrency = raw.value("concurrency", std::size_t{4});
        c.fold_seed = seed;
        if (raw.contains("folds")) {
            c.folds_per_subset = raw.at("folds").value("per_subset", std::size_t{3});
            c.fold_seed = raw.at("folds").value("seed", seed);
        }
        c.max_program_attempts = raw.value("max_program_attempts", 3);
        if (raw.contains("tasks")) {
            c.tasks.clear();
            for (const auto& t : raw.at("tasks")) c.tasks.push_back(task_from_cli(t.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
    return c;
}

void force_mock(PipelineConfig& config) {
    for (const char* name : kToolNames) {
        auto& t = config.tools[name];
        t.mock = true;
    }
}

void override_seed(PipelineConfig& config, std::uint64_t seed) {
    config.tool_seed = seed;
    config.balance_seed = seed;
    config.fold_seed = seed;
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Crop: return "crop";
        case Stage::GenerateRationales: return "generate-rationales";
        case Stage::Filter: return "filter";
        case Stage::BuildTasks: return "build-tasks";
    }
    return "?";
}

Stage stage_from_string(std::string_view s) {
    for (auto st : kAllStages)
        if (to_string(st) == s) return st;
    throw Error("unknown stage '" + std::string(s) + "'");
}

std::string_view task_file_stem(TaskKind kind) {
    switch (kind) {
        case TaskKind::QRA: return "qra";
        case TaskKind::APR: return "apr";
        case TaskKind::QRACI: return "qraci";
        case TaskKind::APRCI: return "apraci";
        case TaskKind::QID: return "qid";
        case TaskKind::AnsOnly: return "ans-only";
    }
    return "?";
}

TaskKind task_from_cli(std::string_view name) {
    for (auto k : {TaskKind::QRA, TaskKind::APR, TaskKind::QRACI, TaskKind::APRCI, TaskKind::QID, TaskKind::AnsOnly})
        if (task_file_stem(k) == name) return k;
    if (name == "aprci") return TaskKind::APRCI;
    throw Error("unknown task '" + std::string(name) + "' (expected qra, apr, qraci, apraci, qid, ans-only)");
}

fs::path Layout::task_file(TaskKind kind) const {
    return root / "tasks" / (std::string(task_file_stem(kind)) + ".jsonl");
}

fs::path Layout::manifest(Stage s) const { return root / "manifests" / (std::string(to_string(s)) + ".json"); }

// ---------------------------------------------------------------------------
// validation

namespace {

void check_template(const fs::path& path, const char* role, int shots, std::initializer_list<const char*> required,
                    std::vector<std::string>& diags) {
    if (path.empty()) {
        diags.push_back(std::string(role) + " template is not configured");
        return;
    }
    if (!fs::exists(path)) {
        diags.push_back(std::string(role) + " template " + path.string() + " does not exist");
        return;
    }
    tools::PromptTemplate t;
    try {
        t = tools::load_template(path);
    } catch (const Error& e) {
        diags.push_back(e.what());
        return;
    }
    if (t.shot_count != shots)
        diags.push_back(std::string(role) + " template '" + t.name + "' has shot_count " + std::to_string(t.shot_count) +
                        ", expected " + std::to_string(shots));
    const auto names = tools::placeholders(t);
    for (const char* r : required)
        if (!names.count(r)) diags.push_back(std::string(role) + " template '" + t.name + "' lacks {" + r + "}");
    for (const auto& n : names)
        if (std::find_if(required.begin(), required.end(), [&](const char* r) { return n == r; }) == required.end())
            diags.push_back(std::string(role) + " template '" + t.name + "' uses unbound placeholder {" + n + "}");
}

}  // namespace

std::vector<std::string> validate(const PipelineConfig& config) {
    std::vector<std::string> diags;
    if (config.datasets.empty()) diags.push_back("no datasets configured");

    bool any_text = false;
    bool any_program = false;
    std::map<std::string, std::size_t> subset_sizes;
    std::set<std::string> ids;
    for (const auto& d : config.datasets) {
        any_text = any_text || d.flow == tools::Flow::TextEvidence;
        any_program = any_program || d.flow == tools::Flow::TableProgram;
        if (!fs::exists(d.path)) {
            diags.push_back("dataset " + d.path.string() + " does not exist");
            continue;
        }
        std::vector<QAExample> examples;
        try {
            examples = io::read_examples(d.path);
        } catch (const Error& e) {
            diags.push_back(e.what());
            continue;
        }
        subset_sizes[d.subset] += examples.size();
        for (const auto& e : examples) {
            if (!ids.insert(e.example_id).second) diags.push_back("duplicate example id " + e.example_id);
            if (d.flow == tools::Flow::TableProgram && !e.structured_table && !config.tool("plot_to_table").configured)
                diags.push_back("example " + e.example_id + " uses the table-program flow but has no structured_table "
                                "and no plot_to_table tool is configured");
        }
    }

    if (any_text) check_template(config.summarizer_template, "summarizer", tools::kSummarizerShots,
                                 {"question", "answer", "ocr"}, diags);
    if (any_program) check_template(config.programmer_template, "programmer", tools::kProgrammerShots,
                                    {"question", "answer", "ocr", "table"}, diags);

    if (config.any_mock() && !config.fixtures.empty() && !fs::exists(config.fixtures))
        diags.push_back("fixtures file " + config.fixtures.string() + " does not exist");
    for (const char* name : kToolNames) {
        const auto& t = config.tool(name);
        if (t.mock) continue;
        if (t.endpoint.empty()) diags.push_back(std::string("tool ") + name + " uses http mode without an endpoint");
        if (!t.api_key_env.empty() && !std::getenv(t.api_key_env.c_str()))
            diags.push_back(std::string("tool ") + name + " credential variable " + t.api_key_env + " is not set");
        if (t.policy.max_retries < 0) diags.push_back(std::string("tool ") + name + " has negative max_retries");
    }

    try {
        config.filter.validate();
    } catch (const Error& e) {
        diags.push_back(e.what());
    }
    try {
        seq::make_counter(config.token_counter);
    } catch (const Error& e) {
        diags.push_back(e.what());
    }
    if (config.concurrency == 0) diags.push_back("concurrency must be at least 1");
    if (config.max_program_attempts < 1) diags.push_back("max_program_attempts must be at least 1");
    if (std::find(config.tasks.begin(), config.tasks.end(), TaskKind::APR) != config.tasks.end()) {
        for (const auto& [subset, n] : subset_sizes)
            if (n < config.folds_per_subset)
                diags.push_back("subset '" + subset + "' has " + std::to_string(n) + " example(s), fewer than " +
                                std::to_string(config.folds_per_subset) + " folds");
    }
    return diags;
}

// ---------------------------------------------------------------------------
// stage machinery

namespace {

struct Dataset {
    std::vector<QAExample> examples;
    std::map<std::string, tools::Flow> flow_by_id;
};

Dataset load_datasets(const PipelineConfig& config) {
    Dataset ds;
    for (const auto& d : config.datasets) {
        for (auto& e : io::read_examples(d.path)) {
            e.subset = d.subset;
            if (!ds.flow_by_id.emplace(e.example_id, d.flow).second)
                throw Error("duplicate example id " + e.example_id);
            ds.examples.push_back(std::move(e));
        }
    }
    std::sort(ds.examples.begin(), ds.examples.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
    return ds;
}

std::string parent_id(const std::string& id) { return id.substr(0, id.find("#c")); }

struct StageIO {
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    Json config;
};

std::string rel(const Layout& layout, const fs::path& p) {
    auto r = p.lexically_relative(layout.root);
    return (r.empty() || r.native().starts_with("..")) ? p.string() : r.string();
}

Json input_hashes(const StageIO& io) {
    Json j = Json::object();
    for (const auto& p : io.inputs) j[p.string()] = fs::exists(p) ? sha256_file(p) : std::string("missing");
    return j;
}

bool up_to_date(const Layout& layout, Stage stage, const StageIO& io) {
    const auto path = layout.manifest(stage);
    if (!fs::exists(path)) return false;
    Json m;
    try {
        m = Json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception&) {
        return false;
    }
    if (m.value("config_hash", std::string()) != sha256_hex(io.config.dump())) return false;
    if (m.value("inputs", Json::object()) != input_hashes(io)) return false;
    const auto outputs = m.value("outputs", Json::object());
    if (outputs.size() != io.outputs.size()) return false;
    for (const auto& p : io.outputs) {
        const auto key = rel(layout, p);
        if (!outputs.contains(key) || !fs::exists(p) || outputs.at(key) != sha256_file(p)) return false;
    }
    return true;
}

void write_manifest(const Layout& layout, Stage stage, const StageIO& io, const Json& counts) {
    Json m;
    m["stage"] = to_string(stage);
    m["config_hash"] = sha256_hex(io.config.dump());
    m["inputs"] = input_hashes(io);
    Json outs = Json::object();
    for (const auto& p : io.outputs) outs[rel(layout, p)] = sha256_file(p);
    m["outputs"] = std::move(outs);
    m["counts"] = counts;
    io::write_lines(layout.manifest(stage), {m.dump(2)});
}

fs::path partial(const fs::path& p) { return fs::path(p.string() + ".partial"); }

/// Stages write every output to "<file>.partial" and promote them together.
class StageWriter {
public:
    void add(fs::path path, std::vector<std::string> lines) { files_.emplace_back(std::move(path), std::move(lines)); }

    void commit() {
        for (const auto& [path, lines] : files_) io::write_lines(partial(path), lines);
        for (const auto& [path, lines] : files_) fs::rename(partial(path), path);
    }

    /// Leaves whatever was produced under ".partial" names.
    void keep_partial() {
        for (const auto& [path, lines] : files_) io::write_lines(partial(path), lines);
    }

private:
    std::vector<std::pair<fs::path, std::vector<std::string>>> files_;
};

std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        return ex.what();
    } catch (...) {
        return "unknown error";
    }
}

struct Tooling {
    std::optional<tools::MockTools> mocks;
    std::shared_ptr<tools::CallLimiter> limiter;
    tools::Toolset toolset;
    std::function<std::shared_ptr<tools::StudentRationaleClient>(std::size_t)> student;
};

tools::Endpoint endpoint_for(const std::string& name, const ToolConfig& t,
                             const std::shared_ptr<tools::CallLimiter>& limiter) {
    tools::Endpoint e;
    e.tool = name;
    e.url = t.endpoint;
    e.limiter = limiter;
    if (!t.api_key_env.empty()) {
        const char* key = std::getenv(t.api_key_env.c_str());
        if (!key) throw ToolFailure(name, "credential variable " + t.api_key_env + " is not set", 0);
        e.headers["Authorization"] = std::string("Bearer ") + key;
    }
    return e;
}

Tooling make_tooling(const PipelineConfig& config) {
    Tooling t;
    t.limiter = std::make_shared<tools::CallLimiter>(config.concurrency);
    if (config.any_mock())
        t.mocks = config.fixtures.empty() ? tools::MockTools(Json::object(), config.tool_seed)
                                          : tools::MockTools::load(config.fixtures, config.tool_seed);

    auto pick = [&](const char* name, auto mock_fn, auto http_fn) {
        const auto& tc = config.tool(name);
        return tc.mock ? mock_fn() : http_fn(endpoint_for(name, tc, t.limiter), tc.policy);
    };
    using namespace tools;
    t.toolset.ocr = pick("ocr", [&] { return t.mocks->ocr(); },
                         [](Endpoint e, RetryPolicy p) -> std::shared_ptr<OcrClient> {
                             return std::make_shared<HttpOcrClient>(std::move(e), p);
                         });
    t.toolset.summarizer = pick("summarizer", [&] { return t.mocks->summarizer(); },
                                [](Endpoint e, RetryPolicy p) -> std::shared_ptr<SummarizerClient> {
                                    return std::make_shared<HttpSummarizerClient>(std::move(e), p);
                                });
    t.toolset.programmer = pick("programmer", [&] { return t.mocks->programmer(); },
                                [](Endpoint e, RetryPolicy p) -> std::shared_ptr<ProgrammerClient> {
                                    return std::make_shared<HttpProgrammerClient>(std::move(e), p);
                                });
    if (config.tool("plot_to_table").configured)
        t.toolset.plot_to_table = pick("plot_to_table", [&] { return t.mocks->plot_to_table(); },
                                       [](Endpoint e, RetryPolicy p) -> std::shared_ptr<PlotToTableClient> {
                                           return std::make_shared<HttpPlotToTableClient>(std::move(e), p);
                                       });
    t.toolset.verifier = pick("verifier", [&] { return t.mocks->verifier(); },
                              [](Endpoint e, RetryPolicy p) -> std::shared_ptr<VerifierClient> {
                                  return std::make_shared<HttpVerifierClient>(std::move(e), p);
                              });

    const auto& student = config.tool("student");
    if (student.mock) {
        t.student = [mocks = *t.mocks](std::size_t fold) { return mocks.student("fold-" + std::to_string(fold)); };
    } else {
        t.student = [&config, limiter = t.limiter](std::size_t fold) -> std::shared_ptr<StudentRationaleClient> {
            const auto& sc = config.tool("student");
            auto e = endpoint_for("student", sc, limiter);
            const auto at = e.url.find("{fold}");
            if (at != std::string::npos) e.url.replace(at, 6, std::to_string(fold));
            return std::make_shared<HttpStudentClient>(std::move(e), sc.policy);
        };
    }
    return t;
}

std::vector<fs::path> dataset_paths(const PipelineConfig& config) {
    std::vector<fs::path> out;
    for (const auto& d : config.datasets) out.push_back(d.path);
    return out;
}

std::vector<fs::path> aux_inputs(const PipelineConfig& config) {
    std::vector<fs::path> out;
    if (config.any_mock() && !config.fixtures.empty()) out.push_back(config.fixtures);
    return out;
}

Json subset(const Json& j, std::initializer_list<const char*> keys) {
    Json out;
    for (const char* k : keys) out[k] = j.at(k);
    return out;
}

// --- crop ------------------------------------------------------------------

StageIO crop_io(const PipelineConfig& config, const Layout& layout) {
    return {dataset_paths(config), {layout.crops()}, subset(config.effective(), {"datasets", "crop_mode"})};
}

Json run_crop(const PipelineConfig& config, const Layout& layout) {
    const auto ds = load_datasets(config);
    std::vector<std::string> lines;
    for (const auto& e : ds.examples) {
        const auto plan = crop::plan_crops(e.image.height, e.image.width, config.crop_mode);
        for (const auto& child : crop::apply_plan(e, plan)) lines.push_back(to_json(child).dump());
    }
    std::sort(lines.begin(), lines.end());
    StageWriter w;
    const auto n = lines.size();
    w.add(layout.crops(), std::move(lines));
    w.commit();
    return Json{{"examples", ds.examples.size()}, {"crops", n}};
}

// --- generate-rationales ------------------------------------------------------

StageIO generate_io(const PipelineConfig& config, const Layout& layout) {
    StageIO io;
    io.inputs = dataset_paths(config);
    io.inputs.push_back(layout.crops());
    for (const auto& p : {config.summarizer_template, config.programmer_template})
        if (!p.empty()) io.inputs.push_back(p);
    for (const auto& p : aux_inputs(config)) io.inputs.push_back(p);
    io.outputs = {layout.rationales()};
    Json eff = config.effective();
    Json tools_cfg = eff.at("tools");
    tools_cfg.erase("verifier");
    tools_cfg.erase("student");
    io.config = subset(eff, {"datasets", "tool_seed", "token_counter", "max_program_attempts"});
    io.config["tools"] = tools_cfg;
    return io;
}

Json rationale_record(const QAExample& example, bool is_crop, const Rationale& r, bool flagged) {
    Json j;
    j["example_id"] = example.example_id;
    j["is_crop"] = is_crop;
    j["flagged"] = flagged;
    j["example"] = to_json(example);
    j["rationale"] = to_json(r);
    return j;
}

Json run_generate(const PipelineConfig& config, const Layout& layout) {
    const auto ds = load_datasets(config);
    const auto crops = io::read_examples(layout.crops());
    auto tooling = make_tooling(config);
    const auto counter = seq::make_counter(config.token_counter);

    tools::Templates templates;
    if (!config.summarizer_template.empty()) templates.summarizer = tools::load_template(config.summarizer_template);
    if (!config.programmer_template.empty()) templates.programmer = tools::load_template(config.programmer_template);

    std::map<std::string, const QAExample*> parents;
    for (const auto& e : ds.examples) parents[e.example_id] = &e;

    struct Item {
        QAExample example;
        bool is_crop;
        tools::Flow flow;
    };
    std::vector<Item> items;
    for (const auto& e : ds.examples) items.push_back({e, false, ds.flow_by_id.at(e.example_id)});
    for (const auto& c : crops) {
        const auto pid = parent_id(c.example_id);
        auto it = parents.find(pid);
        if (it == parents.end()) throw Error("crop " + c.example_id + " has no parent example");
        Item item{c, true, ds.flow_by_id.at(pid)};
        // Without a Plot-to-Table tool a crop reuses its parent's table.
        if (item.flow == tools::Flow::TableProgram && !item.example.structured_table && !tooling.toolset.plot_to_table)
            item.example.structured_table = it->second->structured_table;
        items.push_back(std::move(item));
    }

    tools::GenerateOptions options;
    options.max_program_attempts = config.max_program_attempts;
    options.counter = counter.get();

    std::vector<std::optional<std::string>> lines(items.size());
    std::vector<char> flagged(items.size(), 0);
    auto errors = parallel_for(items.size(), config.concurrency, [&](std::size_t i) {
        const auto& item = items[i];
        try {
            auto r = tools::generate_rationale(item.example, item.flow, tooling.toolset, templates, options);
            lines[i] = rationale_record(item.example, item.is_crop, r, false).dump();
        } catch (const tools::InvalidProgram& e) {
            spdlog::warn("{}", e.what());
            flagged[i] = 1;
            lines[i] = rationale_record(item.example, item.is_crop, Rationale::table_program(e.table(), ""), true).dump();
        }
    });

    std::vector<std::string> out;
    std::string first_error;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (errors[i] && first_error.empty()) first_error = items[i].example.example_id + ": " + describe(errors[i]);
        if (lines[i]) out.push_back(*lines[i]);
    }
    std::sort(out.begin(), out.end());
    StageWriter w;
    const auto n = out.size();
    w.add(layout.rationales(), std::move(out));
    if (!first_error.empty()) {
        w.keep_partial();
        throw StageFailure(std::string(to_string(Stage::GenerateRationales)), first_error);
    }
    w.commit();
    return Json{{"rationales", n}, {"flagged", std::count(flagged.begin(), flagged.end(), 1)}};
}

// --- filter ----------------------------------------------------------------------

StageIO filter_io(const PipelineConfig& config, const Layout& layout) {
    StageIO io;
    io.inputs = {layout.rationales()};
    for (const auto& p : aux_inputs(config)) io.inputs.push_back(p);
    io.outputs = {layout.categorized(), layout.balanced(), layout.balance_report()};
    if (config.filter_whole_images) io.outputs.push_back(layout.whole_categorized());
    Json eff = config.effective();
    io.config = subset(eff, {"tool_seed", "filter", "token_counter"});
    io.config["verifier"] = eff.at("tools").at("verifier");
    return io;
}

struct RationaleLine {
    QAExample example;
    bool is_crop = false;
    bool flagged = false;
    Rationale rationale;
};

std::vector<RationaleLine> read_rationales(const fs::path& path) {
    std::vector<RationaleLine> out;
    io::for_each_line(path, [&](std::string_view line, std::size_t number) {
        try {
            const auto j = Json::parse(line);
            out.push_back({example_from_json(j.at("example")), j.at("is_crop").get<bool>(), j.at("flagged").get<bool>(),
                           rationale_from_json(j.at("rationale"))});
        } catch (const MalformedRecord& e) {
            throw MalformedRecord(number, path.string() + ": " + e.reason());
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, path.string() + ": " + e.what());
        }
    });
    return out;
}

std::vector<filter::CategorizedExample> read_categorized(const fs::path& path) {
    std::vector<filter::CategorizedExample> out;
    io::for_each_line(path, [&](std::string_view line, std::size_t number) {
        try {
            out.push_back(filter::categorized_from_json(Json::parse(line)));
        } catch (const MalformedRecord& e) {
            throw MalformedRecord(number, path.string() + ": " + e.reason());
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, path.string() + ": " + e.what());
        }
    });
    return out;
}

std::vector<std::string> dump_sorted(const std::vector<filter::CategorizedExample>& items) {
    std::vector<std::string> lines;
    for (const auto& c : items) lines.push_back(filter::to_json(c).dump());
    std::sort(lines.begin(), lines.end());
    return lines;
}

Json run_filter(const PipelineConfig& config, const Layout& layout) {
    const auto entries = read_rationales(layout.rationales());
    auto tooling = make_tooling(config);
    const auto counter = seq::make_counter(config.token_counter);

    std::vector<const RationaleLine*> crops, wholes;
    std::size_t skipped_flagged = 0;
    for (const auto& e : entries) {
        if (e.flagged) {
            ++skipped_flagged;
            continue;
        }
        if (e.is_crop)
            crops.push_back(&e);
        else if (config.filter_whole_images)
            wholes.push_back(&e);
    }

    auto categorize_all = [&](const std::vector<const RationaleLine*>& in, std::vector<std::string>& failures) {
        std::vector<std::optional<filter::CategorizedExample>> slots(in.size());
        auto errors = parallel_for(in.size(), config.concurrency, [&](std::size_t i) {
            slots[i] = filter::categorize(in[i]->example, in[i]->rationale, *tooling.toolset.verifier, config.filter,
                                          counter.get());
        });
        std::vector<filter::CategorizedExample> out;
        for (std::size_t i = 0; i < in.size(); ++i) {
            if (errors[i]) failures.push_back(describe(errors[i]));
            if (slots[i]) out.push_back(std::move(*slots[i]));
        }
        return out;
    };

    std::vector<std::string> failures;
    auto categorized = categorize_all(crops, failures);
    auto whole = categorize_all(wholes, failures);

    StageWriter w;
    w.add(layout.categorized(), dump_sorted(categorized));
    if (!failures.empty()) {
        w.keep_partial();
        throw StageFailure(std::string(to_string(Stage::Filter)), failures.front());
    }
    const std::size_t n_categorized = categorized.size();
    auto balanced = filter::balance(std::move(categorized), config.balance_seed);
    w.add(layout.balanced(), dump_sorted(balanced.kept));
    w.add(layout.balance_report(), {filter::to_json(balanced.report).dump(2)});
    if (config.filter_whole_images) w.add(layout.whole_categorized(), dump_sorted(whole));
    w.commit();

    Json counts = filter::to_json(balanced.report);
    counts["categorized"] = n_categorized;
    counts["kept"] = balanced.kept.size();
    counts["skipped_flagged"] = skipped_flagged;
    return counts;
}

// --- build-tasks -------------------------------------------------------------------

StageIO build_io(const PipelineConfig& config, const Layout& layout) {
    StageIO io;
    io.inputs = dataset_paths(config);
    io.inputs.push_back(layout.rationales());
    io.inputs.push_back(layout.balanced());
    if (config.filter_whole_images) io.inputs.push_back(layout.whole_categorized());
    for (const auto& p : aux_inputs(config)) io.inputs.push_back(p);
    for (auto k : config.tasks) io.outputs.push_back(layout.task_file(k));
    if (std::find(config.tasks.begin(), config.tasks.end(), TaskKind::APR) != config.tasks.end())
        io.outputs.push_back(layout.folds());
    Json eff = config.effective();
    io.config = subset(eff, {"datasets", "tool_seed", "token_counter", "folds", "tasks"});
    io.config["student"] = eff.at("tools").at("student");
    io.config["filter_whole_images"] = config.filter_whole_images;
    return io;
}

std::vector<std::string> dump_records(const std::vector<TaskRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(serialize_record(r));
    return lines;
}

Json fold_plan_json(const tasks::FoldPlan& plan) {
    Json j;
    j["folds_per_subset"] = plan.folds_per_subset;
    j["seed"] = plan.seed;
    j["fold_subset"] = plan.fold_subset;
    Json a = Json::object();
    for (const auto& [id, f] : plan.assignment) a[id] = f;
    j["assignment"] = std::move(a);
    return j;
}

Json run_build(const PipelineConfig& config, const Layout& layout) {
    const auto ds = load_datasets(config);
    const auto counter = seq::make_counter(config.token_counter);

    tasks::RationaleMap whole;
    for (auto& e : read_rationales(layout.rationales()))
        if (!e.is_crop) whole[e.example.example_id] = {std::move(e.rationale), e.flagged};
    if (config.filter_whole_images) {
        for (const auto& c : read_categorized(layout.whole_categorized()))
            if (c.category != filter::Category::Useful) whole[c.example_id].flagged = true;
    }

    const auto balanced = read_categorized(layout.balanced());

    StageWriter w;
    Json counts = Json::object();
    for (auto kind : config.tasks) {
        std::vector<TaskRecord> records;
        switch (kind) {
            case TaskKind::QRA: records = tasks::build_qra(ds.examples, whole, counter.get()); break;
            case TaskKind::APR: {
                std::map<std::string, std::vector<std::string>> by_subset;
                for (const auto& e : ds.examples) by_subset[e.subset].push_back(e.example_id);
                const auto plan = tasks::plan_folds(by_subset, config.folds_per_subset, config.fold_seed);
                auto tooling = make_tooling(config);
                const auto students = tasks::make_fold_students(plan, tooling.student);
                records = tasks::build_apr(ds.examples, students, plan, counter.get());
                w.add(layout.folds(), {fold_plan_json(plan).dump(2)});
                break;
            }
            case TaskKind::QRACI: records = tasks::build_qraci(balanced, counter.get()); break;
            case TaskKind::APRCI: records = tasks::build_apraci(balanced, counter.get()); break;
            case TaskKind::QID: records = tasks::build_qid(ds.examples, counter.get()); break;
            case TaskKind::AnsOnly: records = tasks::build_ans_only(ds.examples, counter.get()); break;
        }
        counts[std::string(task_file_stem(kind))] = records.size();
        w.add(layout.task_file(kind), dump_records(records));
    }
    w.commit();
    return counts;
}

StageIO stage_io(Stage s, const PipelineConfig& config, const Layout& layout) {
    switch (s) {
        case Stage::Crop: return crop_io(config, layout);
        case Stage::GenerateRationales: return generate_io(config, layout);
        case Stage::Filter: return filter_io(config, layout);
        case Stage::BuildTasks: return build_io(config, layout);
    }
    throw Error("unknown stage");
}

Json run_stage(Stage s, const PipelineConfig& config, const Layout& layout) {
    switch (s) {
        case Stage::Crop: return run_crop(config, layout);
        case Stage::GenerateRationales: return run_generate(config, layout);
        case Stage::Filter: return run_filter(config, layout);
        case Stage::BuildTasks: return run_build(config, layout);
    }
    throw Error("unknown stage");
}

}  // namespace

std::vector<StageOutcome> run(const PipelineConfig& config, const std::vector<Stage>& stages) {
    const Layout layout{config.output_dir};
    fs::create_directories(layout.root);

    std::vector<Stage> ordered;
    for (auto s : kAllStages)
        if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);

    std::vector<StageOutcome> outcomes;
    for (auto stage : ordered) {
        const auto name = std::string(to_string(stage));
        const auto io = stage_io(stage, config, layout);
        if (up_to_date(layout, stage, io)) {
            spdlog::info("[{}] up to date, skipping", name);
            outcomes.push_back({stage, true, Json::object()});
            continue;
        }
        spdlog::info("[{}] running", name);
        const auto t0 = std::chrono::steady_clock::now();
        Json counts;
        try {
            for (const auto& p : io.outputs) fs::remove(partial(p));
            counts = run_stage(stage, config, layout);
        } catch (const StageFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw StageFailure(name, e.what());
        }
        write_manifest(layout, stage, io, counts);
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
        spdlog::info("[{}] done in {} ms: {}", name, ms, counts.dump());
        outcomes.push_back({stage, false, std::move(counts)});
    }
    return outcomes;
}

// ---------------------------------------------------------------------------
// stand-alone commands

std::size_t crop_file(const fs::path& input, const fs::path& output, crop::CropMode mode) {
    std::vector<std::string> lines;
    for (const auto& e : io::read_examples(input)) {
        for (const auto& child : crop::apply_plan(e, crop::plan_crops(e.image.height, e.image.width, mode)))
            lines.push_back(to_json(child).dump());
    }
    std::sort(lines.begin(), lines.end());
    io::write_lines(output, lines);
    return lines.size();
}

VoteSummary vote_file(const fs::path& input, const fs::path& output, bool use_calculator) {
    std::map<std::string, std::vector<ScoredHypothesis>> by_example;
    io::for_each_line(input, [&](std::string_view line, std::size_t number) {
        try {
            const auto j = Json::parse(line);
            by_example[j.at("example_id").get<std::string>()].push_back(
                {j.at("decoded").get<std::string>(), j.at("prob").get<double>()});
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, input.string() + ": " + e.what());
        }
    });

    VoteSummary summary;
    std::vector<std::string> lines;
    for (const auto& [id, hyps] : by_example) {
        ++summary.examples;
        Json j;
        j["example_id"] = id;
        try {
            auto v = inference::vote(hyps, {use_calculator});
            j["answer"] = v.answer;
            j["aggregate_prob"] = v.aggregate_prob;
        } catch (const AllNone&) {
            ++summary.all_none;
            spdlog::warn("{}: every hypothesis answers None", id);
            j["answer"] = nullptr;
            j["aggregate_prob"] = 0.0;
        }
        lines.push_back(j.dump());
    }
    io::write_lines(output, lines);
    return summary;
}

metrics::MetricReport eval_files(metrics::Metric metric, const fs::path& predictions, const fs::path& gold,
                                 const std::optional<fs::path>& output) {
    std::map<std::string, std::string> preds;
    io::for_each_line(predictions, [&](std::string_view line, std::size_t number) {
        try {
            const auto j = Json::parse(line);
            const auto& a = j.contains("answer") ? j.at("answer") : j.at("prediction");
            preds[j.at("example_id").get<std::string>()] = a.is_null() ? std::string() : a.get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, predictions.string() + ": " + e.what());
        }
    });

    std::vector<std::string> ids, pred_list;
    std::vector<std::vector<std::string>> gold_list;
    io::for_each_line(gold, [&](std::string_view line, std::size_t number) {
        try {
            const auto j = Json::parse(line);
            ids.push_back(j.at("example_id").get<std::string>());
            gold_list.push_back(j.at("gold_answers").get<std::vector<std::string>>());
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, gold.string() + ": " + e.what());
        }
    });
    std::size_t missing = 0;
    for (const auto& id : ids) {
        auto it = preds.find(id);
        if (it == preds.end()) ++missing;
        pred_list.push_back(it == preds.end() ? std::string() : it->second);
    }
    if (missing) spdlog::warn("{} gold example(s) have no prediction and score 0", missing);

    auto report = metrics::evaluate(metric, pred_list, gold_list);
    if (output) {
        Json j;
        j["metric"] = metrics::to_string(metric);
        j["mean"] = report.mean;
        j["example_ids"] = ids;
        j["per_example"] = report.per_example;
        io::write_lines(*output, {j.dump(2)});
    }
    return report;
}

}  // namespace rd::pipeline
