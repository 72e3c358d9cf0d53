#include "rd/io.hpp"

#include <fstream>
#include <sstream>

#include "rd/errors.hpp"

namespace rd::io {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        fn(line, number);
    }
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::vector<Json> out;
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, path.string() + ": " + e.what());
        }
    });
    return out;
}

std::vector<QAExample> read_examples(const std::filesystem::path& path) {
    std::vector<QAExample> out;
    for_each_line(path, [&](std::string_view line, std::size_t number) {
        try {
            auto ex = example_from_json(Json::parse(line));
            ex.validate();
            out.push_back(std::move(ex));
        } catch (const MalformedRecord& e) {
            throw MalformedRecord(number, path.string() + ": " + e.reason());
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(number, path.string() + ": " + e.what());
        } catch (const InvalidGeometry& e) {
            throw MalformedRecord(number, path.string() + ": " + e.what());
        }
    });
    return out;
}

std::vector<TaskRecord> read_records(const std::filesystem::path& path) {
    std::vector<TaskRecord> out;
    for_each_line(path, [&](std::string_view line, std::size_t number) { out.push_back(parse_record(line, number)); });
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rd::io
