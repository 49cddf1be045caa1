#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmvr/core.hpp"

namespace mmvr::io {

using nlohmann::json;

// Columnar binary container: magic, little-endian u32 header length, JSON
// header, then a flat little-endian float64 payload. All on-disk artifacts
// (data cubes, point cloud frames, calibration tables, checkpoints) share it.
inline constexpr char kMagic[4] = {'M', 'M', 'V', 'R'};

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

inline bool host_is_little_endian() {
    std::uint32_t one = 1;
    unsigned char c;
    std::memcpy(&c, &one, 1);
    return c == 1;
}
}  // namespace detail

inline void write_container(const std::string& path, const json& header,
                            const std::vector<double>& payload) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kMagic, 4);
    std::string h = header.dump();
    detail::put_u32(os, static_cast<std::uint32_t>(h.size()));
    os.write(h.data(), std::streamsize(h.size()));
    if (detail::host_is_little_endian()) {
        os.write(reinterpret_cast<const char*>(payload.data()),
                 std::streamsize(payload.size() * sizeof(double)));
    } else {
        for (double d : payload) {
            unsigned char b[8];
            std::uint64_t u;
            std::memcpy(&u, &d, 8);
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
            os.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

struct Container {
    json header;
    std::vector<double> payload;
};

inline Container read_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad container magic in " + path);
    std::uint32_t hlen = detail::get_u32(is);
    std::string h(hlen, '\0');
    is.read(h.data(), hlen);
    Container c;
    c.header = json::parse(h);
    // Remainder of the file is the payload.
    std::vector<char> rest((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (rest.size() % sizeof(double) != 0)
        throw std::runtime_error("payload size not a multiple of 8 in " + path);
    c.payload.resize(rest.size() / sizeof(double));
    if (detail::host_is_little_endian()) {
        std::memcpy(c.payload.data(), rest.data(), rest.size());
    } else {
        for (std::size_t i = 0; i < c.payload.size(); ++i) {
            std::uint64_t u = 0;
            for (int j = 0; j < 8; ++j)
                u |= std::uint64_t(static_cast<unsigned char>(rest[i * 8 + j])) << (8 * j);
            std::memcpy(&c.payload[i], &u, 8);
        }
    }
    return c;
}

inline std::uint64_t file_hash(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for hash: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        h = fnv1a(buf, std::size_t(is.gcount()), h);
    }
    return h;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(text.data(), std::streamsize(text.size()));
}

inline std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// Simple "key = value" config file: one pair per line, '#' comments.
inline std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string k = trim(line.substr(0, eq));
        std::string v = trim(line.substr(eq + 1));
        if (!k.empty()) out.emplace_back(k, v);
    }
    return out;
}

}  // namespace mmvr::io
