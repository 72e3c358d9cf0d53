#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rd {

using Json = nlohmann::ordered_json;

/// The literal answer given to crops that cannot support the gold answer.
inline constexpr std::string_view kNoneAnswer = "None";

std::string_view trim(std::string_view s);

/// Exact match against the None sentinel after trimming surrounding whitespace.
bool is_none_answer(std::string_view answer);

enum class Axis { Height, Width };

std::string_view to_string(Axis axis);
Axis axis_from_string(std::string_view s);

struct Crop {
    Axis axis = Axis::Height;
    std::int64_t start = 0;
    std::int64_t end = 0;

    bool operator==(const Crop&) const = default;
};

/// Image geometry plus an opaque reference. No pixels are stored.
struct ImageRef {
    std::string id;
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::optional<Crop> crop;
    std::string source_uri;

    /// Throws InvalidGeometry when the extents or crop rectangle are out of range.
    void validate() const;

    bool operator==(const ImageRef&) const = default;
};

struct OcrBox {
    std::string text;
    std::int64_t x0 = 0;
    std::int64_t y0 = 0;
    std::int64_t x1 = 0;
    std::int64_t y1 = 0;

    bool operator==(const OcrBox&) const = default;
};

using Table = std::vector<std::vector<std::string>>;

struct QAExample {
    std::string example_id;
    ImageRef image;
    std::string question;
    std::vector<std::string> gold_answers;
    std::string ocr_text;
    std::optional<std::vector<OcrBox>> ocr_boxes;
    std::optional<Table> structured_table;
    // Dataset subset the example belongs to; fold planning is per subset.
    std::string subset = "default";

    /// The first gold answer; filtering treats it as the single answer.
    const std::string& canonical_answer() const { return gold_answers.front(); }

    /// Ingest-time validation: non-empty golds, no None gold, boxes within bounds.
    void validate() const;

    bool operator==(const QAExample&) const = default;
};

struct TextEvidence {
    std::string evidence;
    bool operator==(const TextEvidence&) const = default;
};

struct TableProgram {
    Table table;
    std::string program_source;
    bool operator==(const TableProgram&) const = default;
};

enum class Origin { Tool, Student };

struct Rationale {
    std::variant<TextEvidence, TableProgram> body;
    Origin origin = Origin::Tool;

    static Rationale text(std::string evidence, Origin origin = Origin::Tool);
    static Rationale table_program(Table table, std::string program_source, Origin origin = Origin::Tool);

    bool is_text() const { return std::holds_alternative<TextEvidence>(body); }
    bool is_table_program() const { return std::holds_alternative<TableProgram>(body); }

    bool operator==(const Rationale&) const = default;
};

enum class TaskKind { QRA, APR, QRACI, APRCI, QID, AnsOnly };

std::string_view to_string(TaskKind kind);
/// Accepts the serialized names (QRA, APR, QRACI, APRCI, QID, ANS_ONLY).
std::optional<TaskKind> task_kind_from_string(std::string_view s);
/// True for tasks whose decoder input is empty.
bool has_empty_decoder_input(TaskKind kind);

/// One emitted training line. Construction enforces the decoder input/output invariants.
class TaskRecord {
public:
    TaskRecord(TaskKind task, std::string example_id, ImageRef image,
               std::string decoder_input, std::string decoder_output);

    TaskKind task() const { return task_; }
    const std::string& example_id() const { return example_id_; }
    const ImageRef& image() const { return image_; }
    const std::string& decoder_input() const { return decoder_input_; }
    const std::string& decoder_output() const { return decoder_output_; }

    bool operator==(const TaskRecord&) const = default;

private:
    TaskKind task_;
    std::string example_id_;
    ImageRef image_;
    std::string decoder_input_;
    std::string decoder_output_;
};

struct ScoredHypothesis {
    std::string decoded;
    double prob = 0.0;
};

std::string serialize_record(const TaskRecord& record);
/// Inverse of serialize_record. `line_number` is only used for error reporting.
TaskRecord parse_record(std::string_view line, std::size_t line_number = 1);

// JSON mappings shared by the file-based stages.
Json to_json(const ImageRef& image);
Json to_json(const QAExample& example);
Json to_json(const Rationale& rationale);
Json to_json(const Table& table);

ImageRef image_from_json(const Json& j);
QAExample example_from_json(const Json& j);
Rationale rationale_from_json(const Json& j);
Table table_from_json(const Json& j);

}  // namespace rd
