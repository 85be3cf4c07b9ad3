#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "raqam/audio.hpp"
#include "raqam/errors.hpp"

namespace raqam {

/**
 * Mel-cepstral front end.
 *
 * Pipeline, in order:
 *   1. pre-emphasis          y[n] = x[n] - k * x[n-1]   (y[0] = x[0])
 *   2. framing               fixed-length windows on a fixed shift; the tail
 *                            that does not fill a whole frame is dropped
 *   3. Hamming window        w[n] = 0.54 - 0.46 cos(2*pi*n / (N-1))
 *   4. power spectrum        |FFT|^2 on fft_size points (zero-padded)
 *   5. mel filter bank       triangular filters, equally spaced in mel
 *   6. log                   floored at 1e-10 before the log
 *   7. DCT-II (orthonormal)  keep the first num_cepstra coefficients
 *   8. deltas (optional)     (c[t+1] - c[t-1]) / 2 with edge replication,
 *                            appended to the static coefficients
 */
struct FrontendConfig {
    double pre_emphasis = 0.97;
    double frame_length_ms = 25.0;
    double frame_shift_ms = 10.0;
    int fft_size = 512;
    int num_mel_filters = 26;
    int num_cepstra = 13;
    bool include_deltas = true;

    int frame_samples(int sample_rate_hz) const {
        return static_cast<int>(std::lround(frame_length_ms * sample_rate_hz / 1000.0));
    }
    int shift_samples(int sample_rate_hz) const {
        return static_cast<int>(std::lround(frame_shift_ms * sample_rate_hz / 1000.0));
    }
    int dim() const { return include_deltas ? 2 * num_cepstra : num_cepstra; }
};

inline void validate(const FrontendConfig& cfg, int sample_rate_hz) {
    if (!(cfg.pre_emphasis >= 0.0 && cfg.pre_emphasis < 1.0))
        throw ConfigInvalid("pre_emphasis must be in [0, 1)");
    if (cfg.frame_length_ms <= 0 || cfg.frame_shift_ms <= 0)
        throw ConfigInvalid("frame length and shift must be positive");
    if (cfg.fft_size < 2 || (cfg.fft_size & (cfg.fft_size - 1)) != 0)
        throw ConfigInvalid("fft_size must be a power of two >= 2");
    if (cfg.num_mel_filters < 1) throw ConfigInvalid("need at least one mel filter");
    if (cfg.num_cepstra < 1 || cfg.num_cepstra > cfg.num_mel_filters)
        throw ConfigInvalid("num_cepstra must be in [1, num_mel_filters]");
    if (sample_rate_hz <= 0) throw ConfigInvalid("sample rate must be positive");
    const int frame = cfg.frame_samples(sample_rate_hz);
    const int shift = cfg.shift_samples(sample_rate_hz);
    if (frame < 1 || shift < 1) throw ConfigInvalid("frame/shift shorter than one sample");
    if (shift > frame) throw ConfigInvalid("frame shift must not exceed frame length");
    if (frame > cfg.fft_size) throw ConfigInvalid("frame longer than fft_size");
}

struct FeatureSequence {
    std::vector<std::vector<double>> frames;
    double frame_shift_ms = 10.0;

    std::size_t size() const { return frames.size(); }
    std::size_t dim() const { return frames.empty() ? 0 : frames.front().size(); }
};

inline double mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_inv(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Number of whole frames in a signal: floor((len - frame) / shift) + 1.
inline std::size_t frame_count(std::size_t num_samples, std::size_t frame, std::size_t shift) {
    if (num_samples < frame) return 0;
    return (num_samples - frame) / shift + 1;
}

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

// Triangular mel filter bank over the power-spectrum bins 0..fft_size/2.
// Filter centers are equally spaced on the mel scale between 0 Hz and the
// Nyquist frequency (M+2 edge points for M filters).
struct MelFilterbank {
    std::vector<std::vector<double>> weights;  // M x (fft_size/2 + 1)
    std::vector<double> edges_hz;              // M + 2 points
};

inline MelFilterbank build_mel_filterbank(int fft_size, int sample_rate_hz, int num_filters) {
    const int bins = fft_size / 2 + 1;
    const double nyquist = sample_rate_hz / 2.0;
    MelFilterbank fb;
    fb.edges_hz.resize(static_cast<std::size_t>(num_filters) + 2);
    const double mel_hi = mel(nyquist);
    for (int i = 0; i < num_filters + 2; ++i)
        fb.edges_hz[i] = mel_inv(mel_hi * i / (num_filters + 1));
    fb.weights.assign(num_filters, std::vector<double>(bins, 0.0));
    for (int m = 0; m < num_filters; ++m) {
        const double lo = fb.edges_hz[m], mid = fb.edges_hz[m + 1], hi = fb.edges_hz[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate_hz / fft_size;
            if (f > lo && f < mid)
                fb.weights[m][k] = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                fb.weights[m][k] = (hi - f) / (hi - mid);
        }
    }
    return fb;
}

// Orthonormal DCT-II; returns the first `keep` coefficients.
inline std::vector<double> dct2_orthonormal(const std::vector<double>& x, int keep) {
    const std::size_t m = x.size();
    std::vector<double> out(static_cast<std::size_t>(keep), 0.0);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(m));
    const double norm = std::sqrt(2.0 / static_cast<double>(m));
    for (int i = 0; i < keep; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            acc += x[k] * std::cos(std::numbers::pi * i * (k + 0.5) / static_cast<double>(m));
        out[i] = (i == 0 ? norm0 : norm) * acc;
    }
    return out;
}

// Inverse of dct2_orthonormal for a full-length coefficient vector; missing
// (truncated) coefficients are treated as zero.
inline std::vector<double> idct2_orthonormal(const std::vector<double>& c, int output_size) {
    std::vector<double> out(static_cast<std::size_t>(output_size), 0.0);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(output_size));
    const double norm = std::sqrt(2.0 / static_cast<double>(output_size));
    for (int k = 0; k < output_size; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            acc += (i == 0 ? norm0 : norm) * c[i] *
                   std::cos(std::numbers::pi * static_cast<double>(i) * (k + 0.5) / output_size);
        out[k] = acc;
    }
    return out;
}

inline FeatureSequence compute_mfcc(const AudioBuffer& audio, const FrontendConfig& cfg) {
    validate(cfg, audio.sample_rate_hz);
    const int frame = cfg.frame_samples(audio.sample_rate_hz);
    const int shift = cfg.shift_samples(audio.sample_rate_hz);
    if (audio.samples.size() < static_cast<std::size_t>(frame))
        throw TooShort("audio shorter than one frame (" + std::to_string(audio.samples.size()) + " < " +
                       std::to_string(frame) + " samples)");

    // pre-emphasis
    std::vector<double> x(audio.samples.size());
    x[0] = audio.samples[0];
    for (std::size_t n = 1; n < x.size(); ++n)
        x[n] = audio.samples[n] - cfg.pre_emphasis * audio.samples[n - 1];

    std::vector<double> hamming(static_cast<std::size_t>(frame), 1.0);
    if (frame > 1)
        for (int n = 0; n < frame; ++n)
            hamming[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (frame - 1));

    const MelFilterbank fb = build_mel_filterbank(cfg.fft_size, audio.sample_rate_hz, cfg.num_mel_filters);
    const int bins = cfg.fft_size / 2 + 1;
    const std::size_t t_count = frame_count(x.size(), frame, shift);

    FeatureSequence feats;
    feats.frame_shift_ms = cfg.frame_shift_ms;
    feats.frames.reserve(t_count);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(cfg.fft_size));
    std::vector<double> power(bins), logmel(cfg.num_mel_filters);
    for (std::size_t t = 0; t < t_count; ++t) {
        const std::size_t off = t * static_cast<std::size_t>(shift);
        for (int n = 0; n < cfg.fft_size; ++n)
            spec[n] = n < frame ? std::complex<double>(x[off + n] * hamming[n], 0.0) : 0.0;
        detail::fft_radix2(spec);
        for (int k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
        for (int m = 0; m < cfg.num_mel_filters; ++m) {
            double acc = 0.0;
            for (int k = 0; k < bins; ++k) acc += fb.weights[m][k] * power[k];
            logmel[m] = std::log(std::max(acc, 1e-10));
        }
        feats.frames.push_back(dct2_orthonormal(logmel, cfg.num_cepstra));
    }

    if (cfg.include_deltas) {
        const std::size_t T = feats.frames.size();
        const int C = cfg.num_cepstra;
        std::vector<std::vector<double>> with_deltas(T);
        for (std::size_t t = 0; t < T; ++t) {
            const auto& prev = feats.frames[t == 0 ? 0 : t - 1];
            const auto& next = feats.frames[t + 1 < T ? t + 1 : T - 1];
            with_deltas[t] = feats.frames[t];
            with_deltas[t].resize(2 * static_cast<std::size_t>(C));
            for (int c = 0; c < C; ++c) with_deltas[t][C + c] = (next[c] - prev[c]) / 2.0;
        }
        feats.frames = std::move(with_deltas);
    }
    return feats;
}

}  // namespace raqam
