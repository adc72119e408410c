#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bridgesr/errors.hpp"
#include "bridgesr/network.hpp"

// Checkpoint container: magic "BSRK", u32 version, length-prefixed config text,
// then named tensors as (u16 name len, name, u8 ndims, u32 dims, f32 data),
// all little-endian.
namespace bridgesr {

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw DataError("checkpoint: truncated file");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace detail

struct CheckpointTensor {
    std::vector<int> shape;
    std::vector<float> data;
};

struct Checkpoint {
    uint32_t version = 1;
    std::string config_text;
    std::vector<std::pair<std::string, CheckpointTensor>> tensors;

    const CheckpointTensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
};

inline void save_checkpoint(const std::string& path, const std::string& config_text,
                            const TinyWaveNet& net, const std::vector<NamedTensor>& extra = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot open for write: " + path);
    os.write("BSRK", 4);
    detail::put<uint32_t>(os, 1);
    detail::put<uint32_t>(os, uint32_t(config_text.size()));
    os.write(config_text.data(), std::streamsize(config_text.size()));
    detail::put<uint32_t>(os, uint32_t(net.entries().size() + extra.size()));
    auto put_tensor = [&os](const std::string& name, const std::vector<int>& shape,
                            const std::vector<double>& data) {
        detail::put<uint16_t>(os, uint16_t(name.size()));
        os.write(name.data(), std::streamsize(name.size()));
        detail::put<uint8_t>(os, uint8_t(shape.size()));
        for (int d : shape) detail::put<uint32_t>(os, uint32_t(d));
        for (double v : data) detail::put<float>(os, float(v));
    };
    for (const auto& e : net.entries()) put_tensor(e.name, e.shape, e.data);
    for (const auto& t : extra) put_tensor(t.name, t.shape, t.data);
    if (!os) throw DataError("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "BSRK", 4) != 0) throw DataError("checkpoint: bad magic");
    Checkpoint ck;
    ck.version = detail::get<uint32_t>(is);
    if (ck.version != 1) throw DataError("checkpoint: unsupported version");
    const uint32_t clen = detail::get<uint32_t>(is);
    ck.config_text.resize(clen);
    is.read(ck.config_text.data(), clen);
    if (!is) throw DataError("checkpoint: truncated config");
    const uint32_t nt = detail::get<uint32_t>(is);
    for (uint32_t i = 0; i < nt; ++i) {
        const uint16_t nl = detail::get<uint16_t>(is);
        std::string name(nl, '\0');
        is.read(name.data(), nl);
        if (!is) throw DataError("checkpoint: truncated tensor name");
        CheckpointTensor t;
        const uint8_t nd = detail::get<uint8_t>(is);
        size_t count = 1;
        for (uint8_t d = 0; d < nd; ++d) {
            t.shape.push_back(int(detail::get<uint32_t>(is)));
            count *= size_t(t.shape.back());
        }
        t.data.resize(count);
        for (size_t j = 0; j < count; ++j) t.data[j] = detail::get<float>(is);
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

inline void load_into(TinyWaveNet& net, const Checkpoint& ck) {
    for (auto& e : net.entries()) {
        const CheckpointTensor* t = ck.find(e.name);
        if (!t) throw DataError("checkpoint: missing tensor " + e.name);
        if (t->shape != e.shape || t->data.size() != e.data.size())
            throw DataError("checkpoint: shape mismatch for " + e.name);
        for (size_t i = 0; i < e.data.size(); ++i) e.data[i] = double(t->data[i]);
    }
}

} // namespace bridgesr
