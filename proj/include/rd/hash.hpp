#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

namespace rd {

/// FNV-1a over the parts with a separator byte between them. Stable across
/// platforms and runs, unlike std::hash.
std::uint64_t stable_hash(std::initializer_list<std::string_view> parts);

/// Maps a hash onto [0, 1).
double unit_interval(std::uint64_t h);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace rd
