#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "raqam/errors.hpp"

namespace raqam {

// Mono audio, samples nominally in [-1, 1].
//
// 16-bit scaling is asymmetric on purpose (it mirrors common toolkit
// behaviour): the reader divides by 32768, the writer stores
// round(sample * 32767) clamped to int16. The pair write(read(f)) == f is
// exact for any sample magnitude <= 0.5 (i.e. |int16| <= 16384), which the
// bundled corpus generator guarantees by construction.
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate_hz = 0;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

inline std::int16_t quantize_sample(double s) {
    double v = std::round(s * 32767.0);
    if (v > 32767.0) v = 32767.0;
    if (v < -32768.0) v = -32768.0;
    return static_cast<std::int16_t>(v);
}

namespace detail {

inline std::uint32_t u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

// Reads a PCM WAV file. Only 16-bit mono PCM is accepted; unknown chunks
// before/after the data chunk are skipped (RIFF chunks are word-aligned, so
// an odd-sized chunk carries one pad byte).
inline AudioBuffer read_wav(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) throw NotFound("no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());

    auto read_bytes = [&](unsigned char* dst, std::size_t n) -> bool {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        return static_cast<std::size_t>(in.gcount()) == n;
    };

    unsigned char hdr[12];
    if (!read_bytes(hdr, 12) || std::memcmp(hdr, "RIFF", 4) != 0 || std::memcmp(hdr + 8, "WAVE", 4) != 0)
        throw MalformedWav("not a RIFF/WAVE file: " + path.string());

    bool have_fmt = false, have_data = false;
    int sample_rate = 0;
    std::vector<unsigned char> data;

    unsigned char ch[8];
    while (read_bytes(ch, 8)) {
        const std::uint32_t size = detail::u32le(ch + 4);
        if (std::memcmp(ch, "fmt ", 4) == 0) {
            if (size < 16) throw MalformedWav("fmt chunk too small: " + path.string());
            std::vector<unsigned char> fmt(size);
            if (!read_bytes(fmt.data(), size)) throw MalformedWav("truncated fmt chunk: " + path.string());
            const std::uint16_t audio_format = detail::u16le(fmt.data());
            const std::uint16_t channels = detail::u16le(fmt.data() + 2);
            const std::uint16_t bits = detail::u16le(fmt.data() + 14);
            sample_rate = static_cast<int>(detail::u32le(fmt.data() + 4));
            if (audio_format != 1) throw Unsupported("non-PCM wav (format tag " + std::to_string(audio_format) + "): " + path.string());
            if (channels != 1) throw Unsupported("expected mono, got " + std::to_string(channels) + " channels: " + path.string());
            if (bits != 16) throw Unsupported("expected 16-bit samples, got " + std::to_string(bits) + ": " + path.string());
            have_fmt = true;
        } else if (std::memcmp(ch, "data", 4) == 0) {
            data.resize(size);
            if (!read_bytes(data.data(), size)) throw MalformedWav("truncated data chunk: " + path.string());
            have_data = true;
        } else {
            // unknown chunk: skip payload (+ pad byte when odd)
            in.seekg(static_cast<std::streamoff>(size + (size & 1)), std::ios::cur);
            if (!in) throw MalformedWav("truncated chunk '" + std::string(ch, ch + 4) + "': " + path.string());
            continue;
        }
        if ((size & 1) != 0) in.seekg(1, std::ios::cur);
    }

    if (!have_fmt) throw MalformedWav("missing fmt chunk: " + path.string());
    if (!have_data) throw MalformedWav("missing data chunk: " + path.string());
    if (data.size() % 2 != 0) throw MalformedWav("odd data byte count: " + path.string());
    if (data.empty()) throw MalformedWav("empty data chunk: " + path.string());
    if (sample_rate <= 0) throw MalformedWav("bad sample rate: " + path.string());

    AudioBuffer buf;
    buf.sample_rate_hz = sample_rate;
    buf.samples.resize(data.size() / 2);
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
        const std::int16_t v = static_cast<std::int16_t>(detail::u16le(data.data() + 2 * i));
        buf.samples[i] = static_cast<double>(v) / 32768.0;
    }
    return buf;
}

// Writes a canonical 44-byte-header PCM16 mono WAV.
inline void write_wav(const AudioBuffer& buf, const std::filesystem::path& path) {
    if (buf.sample_rate_hz <= 0) throw ConfigInvalid("write_wav: sample rate must be positive");
    if (buf.samples.empty()) throw ConfigInvalid("write_wav: no samples");

    std::string bytes;
    const std::uint32_t data_size = static_cast<std::uint32_t>(buf.samples.size() * 2);
    bytes.reserve(44 + data_size);
    bytes += "RIFF";
    detail::put_u32le(bytes, 36 + data_size);
    bytes += "WAVE";
    bytes += "fmt ";
    detail::put_u32le(bytes, 16);
    detail::put_u16le(bytes, 1);  // PCM
    detail::put_u16le(bytes, 1);  // mono
    detail::put_u32le(bytes, static_cast<std::uint32_t>(buf.sample_rate_hz));
    detail::put_u32le(bytes, static_cast<std::uint32_t>(buf.sample_rate_hz * 2));  // byte rate
    detail::put_u16le(bytes, 2);   // block align
    detail::put_u16le(bytes, 16);  // bits per sample
    bytes += "data";
    detail::put_u32le(bytes, data_size);
    for (double s : buf.samples) {
        const std::int16_t q = quantize_sample(s);
        detail::put_u16le(bytes, static_cast<std::uint16_t>(q));
    }

    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace raqam
