// rd: dataset construction and evaluation for rationale distillation.
//
//   rd run --config cfg.json [--mock] [--seed N]
//   rd crop --input examples.jsonl --output crops.jsonl --mode full-coverage
//   rd vote --input beams.jsonl --output answers.jsonl --calculator
//   rd eval --metric anls --predictions answers.jsonl --gold dev.jsonl
//   rd dsl exec "Div(25, 5)"

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rd/errors.hpp"
#include "rd/pipeline.hpp"
#include "rd/program.hpp"

namespace pl = rd::pipeline;

namespace {

constexpr int kExitStageFailure = 1;
constexpr int kExitInvalid = 2;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool mock = false;
    bool verbose = false;
};

struct StageOverrides {
    std::optional<std::string> mode;
    std::optional<double> lambda;
    std::optional<std::string> space;
    std::optional<std::uint64_t> filter_seed;
    std::vector<std::string> tasks;
};

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) out.push_back(part);
    }
    return out;
}

pl::PipelineConfig load(const Globals& g, const StageOverrides& o) {
    if (g.config.empty()) throw rd::Error("--config is required");
    auto config = pl::load_config(g.config);
    if (g.mock) pl::force_mock(config);
    if (g.seed) pl::override_seed(config, *g.seed);
    if (!g.out.empty()) config.output_dir = g.out;
    if (o.mode) config.crop_mode = rd::crop::crop_mode_from_string(*o.mode);
    if (o.lambda) config.filter.boost_factor = *o.lambda;
    if (o.space) config.filter.space = rd::filter::score_space_from_string(*o.space);
    if (o.filter_seed) config.balance_seed = *o.filter_seed;
    if (!o.tasks.empty()) {
        config.tasks.clear();
        for (const auto& t : split_list(o.tasks)) config.tasks.push_back(pl::task_from_cli(t));
    }
    return config;
}

int report_invalid(const std::vector<std::string>& diags) {
    for (const auto& d : diags) std::cerr << "invalid: " << d << '\n';
    return kExitInvalid;
}

int run_stages(const Globals& g, const StageOverrides& o, const std::vector<pl::Stage>& stages) {
    pl::PipelineConfig config;
    try {
        config = load(g, o);
    } catch (const rd::Error& e) {
        return report_invalid({e.what()});
    }
    if (auto diags = pl::validate(config); !diags.empty()) return report_invalid(diags);
    try {
        for (const auto& outcome : pl::run(config, stages))
            std::cout << pl::to_string(outcome.stage) << ": "
                      << (outcome.skipped ? std::string("up to date") : outcome.counts.dump()) << '\n';
    } catch (const rd::StageFailure& e) {
        std::cerr << e.what() << '\n';
        return kExitStageFailure;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rationale distillation dataset toolkit"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config, "pipeline config (JSON)");
    app.add_option("--seed", g.seed, "override every seed in the config");
    app.add_option("--out", g.out, "override the config's output_dir");
    app.add_flag("--mock", g.mock, "use fixture-driven mock tools");
    app.add_flag("-v,--verbose", g.verbose, "debug logging");

    StageOverrides o;
    std::string input, output, gold, metric = "anls", dsl_action, dsl_source;
    bool calculator = false;
    std::vector<std::string> run_stage_names;

    auto* crop = app.add_subcommand("crop", "split tall or wide images into overlapping windows");
    crop->add_option("--mode", o.mode, "verbatim or full-coverage");
    crop->add_option("--input", input, "examples file; with --output, runs without a config");
    crop->add_option("--output", output, "crop examples file");

    auto* gen = app.add_subcommand("generate-rationales", "call the rationale tools for images and crops");
    auto* filter = app.add_subcommand("filter", "categorize crop rationales with the verifier and rebalance");
    filter->add_option("--lambda", o.lambda, "boost factor");
    filter->add_option("--space", o.space, "probability or log");
    filter->add_option("--seed", o.filter_seed, "balance seed");

    auto* build = app.add_subcommand("build-tasks", "write task files");
    build->add_option("--tasks", o.tasks, "comma separated: qra,apr,qraci,apraci,qid,ans-only");

    auto* vote = app.add_subcommand("vote", "aggregate beam hypotheses per example");
    vote->add_option("--input", input, "hypotheses (example_id, decoded, prob)")->required();
    vote->add_option("--output", output, "answers file")->required();
    vote->add_flag("--calculator", calculator, "execute predicted programs");

    auto* eval = app.add_subcommand("eval", "score predictions");
    eval->add_option("--metric", metric, "anls or ra")->check(CLI::IsMember({"anls", "ra"}));
    eval->add_option("--predictions", input, "answers (example_id, answer)")->required();
    eval->add_option("--gold", gold, "gold examples (example_id, gold_answers)")->required();
    eval->add_option("--output", output, "metric report");

    auto* dsl = app.add_subcommand("dsl", "parse, print or execute one program");
    dsl->add_option("action", dsl_action, "exec or print")->required()->check(CLI::IsMember({"exec", "print"}));
    dsl->add_option("source", dsl_source, "program source")->required();

    auto* validate = app.add_subcommand("validate", "check a config without running anything");

    auto* run = app.add_subcommand("run", "run every stage, skipping the ones already up to date");
    run->add_option("--stages", run_stage_names, "subset of stages to run");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_default_logger(spdlog::stderr_color_mt("rd"));
    spdlog::set_pattern("%^%l%$ %v");

    try {
        if (crop->parsed()) {
            if (!input.empty() || !output.empty()) {
                if (input.empty() || output.empty()) return report_invalid({"crop needs both --input and --output"});
                const auto mode = rd::crop::crop_mode_from_string(o.mode.value_or("verbatim"));
                std::cout << "crops: " << pl::crop_file(input, output, mode) << '\n';
                return 0;
            }
            return run_stages(g, o, {pl::Stage::Crop});
        }
        if (gen->parsed()) return run_stages(g, o, {pl::Stage::GenerateRationales});
        if (filter->parsed()) return run_stages(g, o, {pl::Stage::Filter});
        if (build->parsed()) return run_stages(g, o, {pl::Stage::BuildTasks});
        if (run->parsed()) {
            std::vector<pl::Stage> stages(std::begin(pl::kAllStages), std::end(pl::kAllStages));
            if (!run_stage_names.empty()) {
                stages.clear();
                for (const auto& s : split_list(run_stage_names)) stages.push_back(pl::stage_from_string(s));
            }
            return run_stages(g, o, stages);
        }
        if (validate->parsed()) {
            const auto config = load(g, o);
            const auto diags = pl::validate(config);
            if (!diags.empty()) return report_invalid(diags);
            std::cout << "ok\n";
            return 0;
        }
        if (vote->parsed()) {
            const auto s = pl::vote_file(input, output, calculator);
            std::cout << "examples: " << s.examples << ", all None: " << s.all_none << '\n';
            return 0;
        }
        if (eval->parsed()) {
            std::optional<std::filesystem::path> out;
            if (!output.empty()) out = output;
            const auto report = pl::eval_files(rd::metrics::metric_from_string(metric), input, gold, out);
            std::printf("%s: %.4f over %zu examples\n", metric.c_str(), report.mean, report.per_example.size());
            return 0;
        }
        if (dsl->parsed()) {
            const auto program = rd::dsl::parse(dsl_source);
            if (dsl_action == "print") {
                std::cout << rd::dsl::print(program) << '\n';
                return 0;
            }
            const auto result = rd::dsl::render(rd::dsl::execute(program));
            std::cout << (result ? *result : std::string("<passthrough>")) << '\n';
            return 0;
        }
    } catch (const rd::StageFailure& e) {
        std::cerr << e.what() << '\n';
        return kExitStageFailure;
    } catch (const rd::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStageFailure;
    }
    return 0;
}
