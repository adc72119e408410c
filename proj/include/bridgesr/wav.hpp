#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bridgesr/errors.hpp"

namespace bridgesr {

struct AudioBuffer {
    std::vector<double> samples;
    double rate = 48000.0;

    void validate() const {
        if (!(rate > 0.0)) throw DataError("audio buffer: rate must be positive");
        for (double s : samples)
            if (!std::isfinite(s)) throw DataError("audio buffer: non-finite sample");
    }
};

enum class WavEncoding { Pcm16, Pcm24, Float32 };

namespace wavdetail {

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& bytes, size_t off) {
    T v;
    std::memcpy(&v, bytes.data() + off, sizeof(T));
    return v;
}

} // namespace wavdetail

inline AudioBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_wav: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    using wavdetail::get;
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
        throw DataError("read_wav: not a RIFF/WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    size_t data_off = 0, data_size = 0;
    bool have_data = false;

    size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const std::string id = bytes.substr(off, 4);
        const uint32_t size = get<uint32_t>(bytes, off + 4);
        const size_t body = off + 8;
        if (body + size > bytes.size()) throw DataError("read_wav: truncated chunk '" + id + "' in " + path);
        if (id == "fmt ") {
            if (size < 16) throw DataError("read_wav: malformed fmt chunk in " + path);
            format = get<uint16_t>(bytes, body);
            channels = get<uint16_t>(bytes, body + 2);
            sample_rate = get<uint32_t>(bytes, body + 4);
            bits = get<uint16_t>(bytes, body + 14);
            have_fmt = true;
        } else if (id == "data") {
            data_off = body;
            data_size = size;
            have_data = true;
        }
        off = body + size + (size & 1);
    }
    if (!have_fmt || !have_data) throw DataError("read_wav: missing fmt or data chunk in " + path);
    if (channels == 0 || sample_rate == 0) throw DataError("read_wav: malformed fmt chunk in " + path);

    const bool pcm16 = format == 1 && bits == 16;
    const bool pcm24 = format == 1 && bits == 24;
    const bool f32 = format == 3 && bits == 32;
    if (!pcm16 && !pcm24 && !f32)
        throw DataError("read_wav: unsupported codec (format " + std::to_string(format) + ", " +
                        std::to_string(bits) + " bit) in " + path);

    const size_t bytes_per = bits / 8;
    const size_t frame = bytes_per * channels;
    if (data_size % frame != 0) throw DataError("read_wav: data size not a whole number of frames in " + path);

    AudioBuffer buf;
    buf.rate = double(sample_rate);
    const size_t n = data_size / frame;
    buf.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t p = data_off + i * frame; // first channel
        if (pcm16) {
            buf.samples[i] = double(get<int16_t>(bytes, p)) / 32768.0;
        } else if (pcm24) {
            int32_t v = (uint8_t(bytes[p])) | (uint8_t(bytes[p + 1]) << 8) | (uint8_t(bytes[p + 2]) << 16);
            if (v & 0x800000) v -= 0x1000000;
            buf.samples[i] = double(v) / 8388608.0;
        } else {
            buf.samples[i] = double(get<float>(bytes, p));
        }
    }
    return buf;
}

inline void write_wav(const std::string& path, const AudioBuffer& buf, WavEncoding enc = WavEncoding::Float32) {
    buf.validate();
    using wavdetail::put;
    const uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : enc == WavEncoding::Pcm24 ? 24 : 32;
    const uint16_t format = enc == WavEncoding::Float32 ? 3 : 1;
    const uint32_t rate = uint32_t(std::llround(buf.rate));
    const uint32_t data_size = uint32_t(buf.samples.size() * (bits / 8));

    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    put<uint32_t>(out, 36 + data_size);
    out += "WAVEfmt ";
    put<uint32_t>(out, 16);
    put<uint16_t>(out, format);
    put<uint16_t>(out, 1);
    put<uint32_t>(out, rate);
    put<uint32_t>(out, rate * (bits / 8));
    put<uint16_t>(out, uint16_t(bits / 8));
    put<uint16_t>(out, bits);
    out += "data";
    put<uint32_t>(out, data_size);

    for (double s : buf.samples) {
        if (enc == WavEncoding::Pcm16) {
            long v = std::llround(s * 32768.0);
            v = std::min(32767l, std::max(-32768l, v));
            put<int16_t>(out, int16_t(v));
        } else if (enc == WavEncoding::Pcm24) {
            long v = std::llround(s * 8388608.0);
            v = std::min(8388607l, std::max(-8388608l, v));
            const uint32_t u = uint32_t(v) & 0xFFFFFF;
            out.push_back(char(u & 0xFF));
            out.push_back(char((u >> 8) & 0xFF));
            out.push_back(char((u >> 16) & 0xFF));
        } else {
            put<float>(out, float(s));
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_wav: cannot open " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw DataError("write_wav: write failed for " + path);
}

} // namespace bridgesr
