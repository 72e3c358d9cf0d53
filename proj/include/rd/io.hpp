#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "rd/data_model.hpp"

namespace rd::io {

/// Calls `fn(line, line_number)` for every non-empty line; line numbers start at 1.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

/// Parses every line as JSON; schema errors are re-raised as MalformedRecord with the line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Reads and validates a QA example file.
std::vector<QAExample> read_examples(const std::filesystem::path& path);

std::vector<TaskRecord> read_records(const std::filesystem::path& path);

/// Writes LF-terminated lines, creating parent directories.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::string read_file(const std::filesystem::path& path);

}  // namespace rd::io
