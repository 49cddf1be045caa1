#pragma once

#include <string>

#include "mmvr/io.hpp"
#include "mmvr/nn/layers.hpp"

namespace mmvr::nn {

inline constexpr int kCheckpointVersion = 1;

// Named parameter blocks with shapes, plus caller metadata (label registry,
// mixture weights, layout library, ...) carried in the JSON header.
inline void save_checkpoint(const std::string& path, const ParamStore& params,
                            const io::json& meta, std::uint64_t config_hash,
                            std::uint64_t seed) {
    io::json header;
    header["kind"] = "checkpoint";
    header["version"] = kCheckpointVersion;
    header["config_hash"] = hex64(config_hash);
    header["seed"] = seed;
    header["meta"] = meta;
    std::vector<double> payload;
    io::json blocks = io::json::array();
    for (const auto& [name, t] : params.blocks) {
        io::json b;
        b["name"] = name;
        b["shape"] = t.shape;
        b["offset"] = payload.size();
        blocks.push_back(b);
        payload.insert(payload.end(), t.v.begin(), t.v.end());
    }
    header["blocks"] = blocks;
    io::write_container(path, header, payload);
}

struct Checkpoint {
    ParamStore params;
    io::json meta;
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    io::Container c = io::read_container(path);
    if (c.header.value("kind", "") != "checkpoint")
        throw std::runtime_error("not a checkpoint: " + path);
    if (c.header.value("version", 0) != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    Checkpoint ck;
    ck.meta = c.header.value("meta", io::json::object());
    ck.seed = c.header.value("seed", std::uint64_t(0));
    ck.config_hash = c.header.value("config_hash", "");
    for (const auto& b : c.header.at("blocks")) {
        std::vector<int> shape = b.at("shape").get<std::vector<int>>();
        std::size_t off = b.at("offset").get<std::size_t>();
        long n = Tensor::numel_of(shape);
        if (off + std::size_t(n) > c.payload.size())
            throw std::runtime_error("checkpoint payload truncated in " + path);
        Tensor t(shape, std::vector<double>(c.payload.begin() + long(off),
                                            c.payload.begin() + long(off) + n));
        ck.params.define(b.at("name").get<std::string>(), std::move(t));
    }
    return ck;
}

}  // namespace mmvr::nn
