#include "rd/hash.hpp"

#include <array>
#include <cstdio>

#include <openssl/evp.h>

#include "rd/errors.hpp"
#include "rd/io.hpp"

namespace rd {

std::uint64_t stable_hash(std::initializer_list<std::string_view> parts) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    };
    for (auto p : parts) {
        for (char c : p) mix(static_cast<unsigned char>(c));
        mix(0x1f);
    }
    // final avalanche so nearby inputs spread over the whole range
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

double unit_interval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(io::read_file(path)); }

}  // namespace rd
