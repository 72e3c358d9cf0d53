#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "rd/data_model.hpp"

namespace rd::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("rd-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline QAExample make_example(std::string id, std::int64_t h = 400, std::int64_t w = 400,
                              std::string question = "What is X?", std::string answer = "42") {
    QAExample e;
    e.example_id = id;
    e.image.id = std::move(id);
    e.image.height = h;
    e.image.width = w;
    e.question = std::move(question);
    e.gold_answers = {std::move(answer)};
    return e;
}

inline std::filesystem::path data_dir() { return RD_DATA_DIR; }

}  // namespace rd::testing
