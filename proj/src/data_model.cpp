#include "rd/data_model.hpp"

#include "rd/errors.hpp"

namespace rd {

namespace {

[[noreturn]] void schema_error(const std::string& reason) { throw MalformedRecord(0, reason); }

const Json& require(const Json& j, const char* key) {
    if (!j.is_object()) schema_error("expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema_error(std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string()) schema_error(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t require_int(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_integer()) schema_error(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::vector<std::string> string_list(const Json& v, const char* key) {
    if (!v.is_array()) schema_error(std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_string()) schema_error(std::string("field '") + key + "' must contain strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

void reject_unknown_fields(const Json& j, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) schema_error("expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (auto a : allowed) known = known || it.key() == a;
        if (!known) schema_error("unknown field '" + it.key() + "'");
    }
}

}  // namespace

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\n\r\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool is_none_answer(std::string_view answer) { return trim(answer) == kNoneAnswer; }

std::string_view to_string(Axis axis) { return axis == Axis::Height ? "height" : "width"; }

Axis axis_from_string(std::string_view s) {
    if (s == "height") return Axis::Height;
    if (s == "width") return Axis::Width;
    schema_error("unknown crop axis '" + std::string(s) + "'");
}

void ImageRef::validate() const {
    if (height <= 0 || width <= 0)
        throw InvalidGeometry("image " + id + " has non-positive extent " + std::to_string(height) + "x" +
                              std::to_string(width));
    if (crop) {
        // Crop coordinates are relative to the root image, whose extent along the
        // crop axis is not recorded here; only the ordering can be checked.
        if (crop->start < 0 || crop->start >= crop->end)
            throw InvalidGeometry("image " + id + " has an empty or negative crop window");
        const auto along = crop->axis == Axis::Height ? height : width;
        if (crop->end - crop->start != along)
            throw InvalidGeometry("image " + id + " crop length does not match its extent");
    }
}

void QAExample::validate() const {
    image.validate();
    if (gold_answers.empty()) throw MalformedRecord(0, "example " + example_id + " has no gold answers");
    for (const auto& g : gold_answers)
        if (is_none_answer(g))
            throw MalformedRecord(0, "example " + example_id + " uses the reserved answer 'None'");
    if (ocr_boxes) {
        for (const auto& b : *ocr_boxes) {
            if (b.x0 < 0 || b.y0 < 0 || b.x1 > image.width || b.y1 > image.height || b.x0 > b.x1 || b.y0 > b.y1)
                throw MalformedRecord(0, "example " + example_id + " has an OCR box outside the image");
        }
    }
}

Rationale Rationale::text(std::string evidence, Origin origin) {
    return Rationale{TextEvidence{std::move(evidence)}, origin};
}

Rationale Rationale::table_program(Table table, std::string program_source, Origin origin) {
    return Rationale{TableProgram{std::move(table), std::move(program_source)}, origin};
}

std::string_view to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::QRA: return "QRA";
        case TaskKind::APR: return "APR";
        case TaskKind::QRACI: return "QRACI";
        case TaskKind::APRCI: return "APRCI";
        case TaskKind::QID: return "QID";
        case TaskKind::AnsOnly: return "ANS_ONLY";
    }
    return "?";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s) {
    for (auto k : {TaskKind::QRA, TaskKind::APR, TaskKind::QRACI, TaskKind::APRCI, TaskKind::QID, TaskKind::AnsOnly})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

bool has_empty_decoder_input(TaskKind kind) {
    return kind == TaskKind::QRA || kind == TaskKind::QRACI || kind == TaskKind::QID || kind == TaskKind::AnsOnly;
}

TaskRecord::TaskRecord(TaskKind task, std::string example_id, ImageRef image, std::string decoder_input,
                       std::string decoder_output)
    : task_(task), example_id_(std::move(example_id)), image_(std::move(image)),
      decoder_input_(std::move(decoder_input)), decoder_output_(std::move(decoder_output)) {
    if (has_empty_decoder_input(task_) != decoder_input_.empty())
        throw std::invalid_argument(std::string(to_string(task_)) + " record " + example_id_ +
                                    (decoder_input_.empty() ? " requires" : " forbids") + " a decoder input");
    if (decoder_output_.empty())
        throw std::invalid_argument(std::string(to_string(task_)) + " record " + example_id_ +
                                    " has an empty decoder output");
}

Json to_json(const ImageRef& image) {
    Json j;
    j["id"] = image.id;
    j["height"] = image.height;
    j["width"] = image.width;
    if (image.crop) {
        Json c;
        c["axis"] = to_string(image.crop->axis);
        c["start"] = image.crop->start;
        c["end"] = image.crop->end;
        j["crop"] = std::move(c);
    }
    j["source_uri"] = image.source_uri;
    return j;
}

ImageRef image_from_json(const Json& j) {
    reject_unknown_fields(j, {"id", "height", "width", "crop", "source_uri"});
    ImageRef image;
    image.id = require_string(j, "id");
    image.height = require_int(j, "height");
    image.width = require_int(j, "width");
    if (auto it = j.find("crop"); it != j.end() && !it->is_null()) {
        reject_unknown_fields(*it, {"axis", "start", "end"});
        Crop c;
        c.axis = axis_from_string(require_string(*it, "axis"));
        c.start = require_int(*it, "start");
        c.end = require_int(*it, "end");
        image.crop = c;
    }
    image.source_uri = j.contains("source_uri") ? require_string(j, "source_uri") : std::string();
    return image;
}

Json to_json(const Table& table) {
    Json rows = Json::array();
    for (const auto& row : table) rows.push_back(row);
    return rows;
}

Table table_from_json(const Json& j) {
    if (!j.is_array()) schema_error("table must be an array of rows");
    Table table;
    for (const auto& row : j) table.push_back(string_list(row, "table"));
    return table;
}

Json to_json(const QAExample& example) {
    Json j;
    j["example_id"] = example.example_id;
    j["subset"] = example.subset;
    j["image"] = to_json(example.image);
    j["question"] = example.question;
    j["gold_answers"] = example.gold_answers;
    j["ocr_text"] = example.ocr_text;
    if (example.ocr_boxes) {
        Json boxes = Json::array();
        for (const auto& b : *example.ocr_boxes)
            boxes.push_back(Json{{"text", b.text}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
        j["ocr_boxes"] = std::move(boxes);
    }
    if (example.structured_table) j["structured_table"] = to_json(*example.structured_table);
    return j;
}

QAExample example_from_json(const Json& j) {
    reject_unknown_fields(
        j, {"example_id", "subset", "image", "question", "gold_answers", "ocr_text", "ocr_boxes", "structured_table"});
    QAExample ex;
    ex.example_id = require_string(j, "example_id");
    if (j.contains("subset")) ex.subset = require_string(j, "subset");
    ex.image = image_from_json(require(j, "image"));
    ex.question = require_string(j, "question");
    ex.gold_answers = string_list(require(j, "gold_answers"), "gold_answers");
    ex.ocr_text = j.contains("ocr_text") ? require_string(j, "ocr_text") : std::string();
    if (auto it = j.find("ocr_boxes"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) schema_error("ocr_boxes must be an array");
        std::vector<OcrBox> boxes;
        for (const auto& b : *it) {
            boxes.push_back(OcrBox{require_string(b, "text"), require_int(b, "x0"), require_int(b, "y0"),
                                   require_int(b, "x1"), require_int(b, "y1")});
        }
        ex.ocr_boxes = std::move(boxes);
    }
    if (auto it = j.find("structured_table"); it != j.end() && !it->is_null())
        ex.structured_table = table_from_json(*it);
    return ex;
}

Json to_json(const Rationale& rationale) {
    Json j;
    if (const auto* t = std::get_if<TextEvidence>(&rationale.body)) {
        j["kind"] = "text_evidence";
        j["evidence"] = t->evidence;
    } else {
        const auto& p = std::get<TableProgram>(rationale.body);
        j["kind"] = "table_program";
        j["table"] = to_json(p.table);
        j["program_source"] = p.program_source;
    }
    j["origin"] = rationale.origin == Origin::Tool ? "tool" : "student";
    return j;
}

Rationale rationale_from_json(const Json& j) {
    const auto kind = require_string(j, "kind");
    const auto origin_name = require_string(j, "origin");
    Origin origin;
    if (origin_name == "tool")
        origin = Origin::Tool;
    else if (origin_name == "student")
        origin = Origin::Student;
    else
        schema_error("unknown rationale origin '" + origin_name + "'");

    if (kind == "text_evidence") {
        reject_unknown_fields(j, {"kind", "evidence", "origin"});
        return Rationale::text(require_string(j, "evidence"), origin);
    }
    if (kind == "table_program") {
        reject_unknown_fields(j, {"kind", "table", "program_source", "origin"});
        return Rationale::table_program(table_from_json(require(j, "table")), require_string(j, "program_source"),
                                        origin);
    }
    schema_error("unknown rationale kind '" + kind + "'");
}

std::string serialize_record(const TaskRecord& record) {
    Json j;
    j["task"] = to_string(record.task());
    j["example_id"] = record.example_id();
    j["image"] = to_json(record.image());
    j["decoder_input"] = record.decoder_input();
    j["decoder_output"] = record.decoder_output();
    return j.dump();
}

TaskRecord parse_record(std::string_view line, std::size_t line_number) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord(line_number, std::string("invalid JSON: ") + e.what());
    }
    try {
        reject_unknown_fields(j, {"task", "example_id", "image", "decoder_input", "decoder_output"});
        const auto task_name = require_string(j, "task");
        auto task = task_kind_from_string(task_name);
        if (!task) schema_error("unknown task '" + task_name + "'");
        return TaskRecord(*task, require_string(j, "example_id"), image_from_json(require(j, "image")),
                          require_string(j, "decoder_input"), require_string(j, "decoder_output"));
    } catch (const MalformedRecord& e) {
        throw MalformedRecord(line_number, e.reason());
    } catch (const std::invalid_argument& e) {
        throw MalformedRecord(line_number, e.what());
    }
}

}  // namespace rd
