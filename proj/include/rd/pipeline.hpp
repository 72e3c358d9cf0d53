#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rd/crop.hpp"
#include "rd/data_model.hpp"
#include "rd/filter.hpp"
#include "rd/http.hpp"
#include "rd/metrics.hpp"
#include "rd/tools.hpp"

namespace rd::pipeline {

struct DatasetConfig {
    std::filesystem::path path;
    std::string subset;
    tools::Flow flow = tools::Flow::TextEvidence;
};

struct ToolConfig {
    bool mock = true;
    std::string endpoint;      // http mode; "{fold}" is replaced for student endpoints
    std::string api_key_env;   // sent as a bearer token when set
    tools::RetryPolicy policy;
    bool configured = false;   // present in the config file
};

inline constexpr const char* kToolNames[] = {"ocr", "summarizer", "programmer", "plot_to_table", "verifier", "student"};

struct PipelineConfig {
    std::vector<DatasetConfig> datasets;
    std::filesystem::path output_dir;
    std::filesystem::path fixtures;
    std::uint64_t tool_seed = 0;
    std::map<std::string, ToolConfig> tools;
    std::filesystem::path summarizer_template;
    std::filesystem::path programmer_template;
    filter::FilterConfig filter;
    std::uint64_t balance_seed = 0;
    bool filter_whole_images = false;
    crop::CropMode crop_mode = crop::CropMode::Verbatim;
    std::string token_counter = "whitespace";
    std::size_t concurrency = 4;
    std::uint64_t fold_seed = 0;
    std::size_t folds_per_subset = 3;
    int max_program_attempts = 3;
    std::vector<TaskKind> tasks{TaskKind::QRA, TaskKind::APR, TaskKind::QRACI, TaskKind::APRCI, TaskKind::QID,
                                TaskKind::AnsOnly};

    const ToolConfig& tool(const std::string& name) const;
    bool any_mock() const;
    /// Effective settings as JSON, used for manifest hashing.
    Json effective() const;
};

/// Loads a JSON config. "${VAR}" inside string values is replaced from the
/// environment; relative paths resolve against the config file's directory.
PipelineConfig load_config(const std::filesystem::path& path);

/// Forces every tool onto the fixture-driven mocks.
void force_mock(PipelineConfig& config);
/// Overrides the tool, balance and fold seeds.
void override_seed(PipelineConfig& config, std::uint64_t seed);

/// Problems that would stop a run; empty when the config is usable.
std::vector<std::string> validate(const PipelineConfig& config);

enum class Stage { Crop, GenerateRationales, Filter, BuildTasks };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);
inline constexpr Stage kAllStages[] = {Stage::Crop, Stage::GenerateRationales, Stage::Filter, Stage::BuildTasks};

/// Task names used on the command line and as output file stems.
std::string_view task_file_stem(TaskKind kind);
TaskKind task_from_cli(std::string_view name);

struct StageOutcome {
    Stage stage;
    bool skipped = false;
    Json counts;
};

/// Output locations inside the run directory.
struct Layout {
    std::filesystem::path root;
    std::filesystem::path crops() const { return root / "crops.jsonl"; }
    std::filesystem::path rationales() const { return root / "rationales.jsonl"; }
    std::filesystem::path categorized() const { return root / "categorized.jsonl"; }
    std::filesystem::path whole_categorized() const { return root / "whole_categorized.jsonl"; }
    std::filesystem::path balanced() const { return root / "balanced.jsonl"; }
    std::filesystem::path balance_report() const { return root / "balance_report.json"; }
    std::filesystem::path task_file(TaskKind kind) const;
    std::filesystem::path folds() const { return root / "tasks" / "folds.json"; }
    std::filesystem::path manifest(Stage s) const;
};

/// Runs the given stages in dependency order, skipping any stage whose
/// manifest matches its current inputs, config and outputs. Throws StageFailure;
/// outputs of a failed stage are left with a ".partial" suffix.
std::vector<StageOutcome> run(const PipelineConfig& config, const std::vector<Stage>& stages);

// Stand-alone file commands.

/// Reads QA examples, writes their crops sorted by id. Returns the crop count.
std::size_t crop_file(const std::filesystem::path& input, const std::filesystem::path& output, crop::CropMode mode);

struct VoteSummary {
    std::size_t examples = 0;
    std::size_t all_none = 0;
};

/// Reads {"example_id", "decoded", "prob"} lines and writes one
/// {"example_id", "answer", "aggregate_prob"} line per example.
VoteSummary vote_file(const std::filesystem::path& input, const std::filesystem::path& output, bool use_calculator);

/// Scores {"example_id", "answer"} predictions against gold examples.
metrics::MetricReport eval_files(metrics::Metric metric, const std::filesystem::path& predictions,
                                 const std::filesystem::path& gold, const std::optional<std::filesystem::path>& output);

}  // namespace rd::pipeline
