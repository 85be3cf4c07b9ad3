#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "raqam/audio.hpp"
#include "raqam/errors.hpp"
#include "raqam/linguist.hpp"
#include "raqam/parallel.hpp"
#include "raqam/rng.hpp"
#include "raqam/text.hpp"

namespace raqam {

struct ManifestEntry {
    std::string audio_path;  // relative to the manifest's directory
    std::string speaker_id;
    int repetition_index = 1;
    std::vector<std::string> transcript;
};

struct CorpusManifest {
    std::filesystem::path base_dir;
    std::vector<ManifestEntry> entries;

    std::filesystem::path resolve(const ManifestEntry& e) const { return base_dir / e.audio_path; }
};

// Manifest line: `<relative-path>TAB<speaker>TAB<repetition>TAB<word word ...>`.
// '#' lines and blanks are skipped. Every transcript word must be in the
// lexicon; paths must be unique within one manifest.
inline CorpusManifest load_manifest(const std::filesystem::path& path, const Lexicon& lexicon) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open manifest: " + path.string());
    CorpusManifest m;
    m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::set<std::string> seen_paths;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto loc = [&] { return path.string() + ":" + std::to_string(lineno); };
        const auto fields = detail::split(detail::trim(line), '\t');
        if (fields.size() != 4)
            throw ParseError(loc() + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
        ManifestEntry e;
        e.audio_path = detail::trim(fields[0]);
        e.speaker_id = detail::trim(fields[1]);
        if (e.audio_path.empty()) throw ParseError(loc() + ": empty audio path");
        if (e.speaker_id.empty()) throw ParseError(loc() + ": empty speaker id");
        e.repetition_index = detail::parse_int(detail::trim(fields[2]), "repetition index at " + loc());
        if (e.repetition_index < 1) throw ParseError(loc() + ": repetition index must be >= 1");
        e.transcript = detail::tokens(fields[3]);
        if (e.transcript.empty()) throw ParseError(loc() + ": empty transcript");
        for (const auto& w : e.transcript)
            if (!lexicon.contains(w)) throw UnknownWord(loc() + ": transcript word not in lexicon: " + w);
        if (!seen_paths.insert(e.audio_path).second)
            throw DuplicatePath(loc() + ": duplicate audio path " + e.audio_path);
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw ParseError("manifest has no entries: " + path.string());
    return m;
}

inline void save_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& e : m.entries) {
        out << e.audio_path << '\t' << e.speaker_id << '\t' << e.repetition_index << '\t';
        for (std::size_t i = 0; i < e.transcript.size(); ++i) out << (i ? " " : "") << e.transcript[i];
        out << '\n';
    }
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Deterministic corpus synthesis
// ---------------------------------------------------------------------------

struct SynthSpec {
    std::vector<std::string> words;
    int speakers = 6;
    int repetitions = 5;
    std::uint64_t seed = 42;
    int sample_rate_hz = 16000;
    std::string speaker_prefix = "S";  // speaker ids are <prefix>1..<prefix>N
};

struct SynthSegment {
    std::string phone;
    std::size_t num_samples = 0;
};

namespace detail {

// Two-formant table; each phone gets a distinct (f1, f2) cell so phones stay
// separable after the per-speaker warp (max ±8%, below the grid spacing).
inline void phone_formants(const std::string& phone, double& f1, double& f2) {
    struct Row { const char* p; double f1, f2; };
    static const Row rows[] = {
        {"W", 320, 1500},  {"H", 480, 1500},  {"D", 660, 1500},  {"Q", 860, 1500},  {"TH", 1080, 1500},
        {"N", 320, 2000},  {"Y", 480, 2000},  {"L", 660, 2000},  {"R", 860, 2000},  {"B", 1080, 2000},
        {"KH", 320, 2600}, {"M", 480, 2600},  {"S", 660, 2600},  {"T", 860, 2600},  {"F", 1080, 2600},
        {"AA", 320, 3300}, {"IH", 660, 3300}, {"IY", 1080, 3300},
    };
    for (const auto& r : rows) {
        if (phone == r.p) {
            f1 = r.f1;
            f2 = r.f2;
            return;
        }
    }
    // unknown phones get a stable hash-derived cell
    const std::uint64_t h = fnv1a64(phone);
    f1 = 320.0 + 40.0 * static_cast<double>(h % 20);
    f2 = 1500.0 + 45.0 * static_cast<double>((h >> 8) % 40);
}

inline std::uint64_t entry_seed(const SynthSpec& spec, const std::string& word, const std::string& speaker,
                                int repetition) {
    return mix64(spec.seed, fnv1a64(word + "|" + speaker + "|" + std::to_string(repetition)));
}

constexpr double kAmp1 = 0.28;
constexpr double kAmp2 = 0.18;
constexpr double kSnrDb = 25.0;
constexpr double kSilNoise = 0.002;
constexpr double kClamp = 0.49;  // keeps every sample int16-roundtrip-stable

}  // namespace detail

// Formant warp for a speaker, in [0.92, 1.08). Depends only on the speaker
// id, never on the corpus seed: the same id is the same voice everywhere.
inline double speaker_warp(const std::string& speaker_id) {
    Rng r(mix64(fnv1a64(speaker_id)));
    return 0.92 + 0.16 * r.uniform();
}

// The phone-by-phone rendering plan (durations drawn per segment from the
// entry's RNG stream): leading/trailing silence around the word's phones.
inline std::vector<SynthSegment> plan_utterance(const SynthSpec& spec, const Lexicon& lexicon,
                                                const std::string& word, const std::string& speaker_id,
                                                int repetition) {
    const auto& entry = lexicon.at(word);
    const std::uint64_t seed = detail::entry_seed(spec, word, speaker_id, repetition);
    std::vector<std::string> phones;
    phones.reserve(entry.phones.size() + 2);
    phones.push_back(kSilPhone);
    phones.insert(phones.end(), entry.phones.begin(), entry.phones.end());
    phones.push_back(kSilPhone);

    std::vector<SynthSegment> plan;
    plan.reserve(phones.size());
    for (std::size_t i = 0; i < phones.size(); ++i) {
        Rng r(mix64(seed, i));
        const bool sil = phones[i] == kSilPhone;
        const double dur = sil ? r.uniform(0.08, 0.12) : r.uniform(0.08, 0.16);
        plan.push_back({phones[i], static_cast<std::size_t>(std::llround(dur * spec.sample_rate_hz))});
    }
    return plan;
}

// Renders one utterance: per phone, two warped formant sines under a
// raised-cosine edge envelope plus weak broadband noise (25 dB SNR against
// the tone RMS); silence segments are low-level noise only.
inline AudioBuffer render_utterance(const SynthSpec& spec, const Lexicon& lexicon, const std::string& word,
                                    const std::string& speaker_id, int repetition) {
    if (spec.sample_rate_hz <= 0) throw ConfigInvalid("sample rate must be positive");
    const auto plan = plan_utterance(spec, lexicon, word, speaker_id, repetition);
    const std::uint64_t seed = detail::entry_seed(spec, word, speaker_id, repetition);
    const double warp = speaker_warp(speaker_id);
    const double tone_rms = std::sqrt(detail::kAmp1 * detail::kAmp1 / 2 + detail::kAmp2 * detail::kAmp2 / 2);
    const double noise_sigma = tone_rms / std::pow(10.0, detail::kSnrDb / 20.0);

    AudioBuffer buf;
    buf.sample_rate_hz = spec.sample_rate_hz;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        Rng r(mix64(seed, i));
        (void)r.uniform();  // duration draw, already consumed by the plan
        const std::size_t n = plan[i].num_samples;
        if (plan[i].phone == kSilPhone) {
            for (std::size_t k = 0; k < n; ++k)
                buf.samples.push_back(std::clamp(detail::kSilNoise * r.gauss(), -detail::kClamp, detail::kClamp));
            continue;
        }
        double f1 = 0, f2 = 0;
        detail::phone_formants(plan[i].phone, f1, f2);
        f1 *= warp;
        f2 *= warp;
        const double ph1 = r.uniform(0.0, 2.0 * std::numbers::pi);
        const double ph2 = r.uniform(0.0, 2.0 * std::numbers::pi);
        const std::size_t ramp = std::min<std::size_t>(n / 4, static_cast<std::size_t>(spec.sample_rate_hz / 100));
        for (std::size_t k = 0; k < n; ++k) {
            double env = 1.0;
            if (ramp > 0) {
                if (k < ramp) env = 0.5 * (1.0 - std::cos(std::numbers::pi * (k + 1.0) / ramp));
                else if (n - 1 - k < ramp) env = 0.5 * (1.0 - std::cos(std::numbers::pi * (n - k) / ramp));
            }
            const double t = static_cast<double>(k) / spec.sample_rate_hz;
            const double tone = detail::kAmp1 * std::sin(2.0 * std::numbers::pi * f1 * t + ph1) +
                                detail::kAmp2 * std::sin(2.0 * std::numbers::pi * f2 * t + ph2);
            buf.samples.push_back(std::clamp(env * tone + noise_sigma * r.gauss(), -detail::kClamp, detail::kClamp));
        }
    }
    return buf;
}

// Generates speakers x words x repetitions single-word WAVs under out_dir and
// returns the matching manifest (not yet written to disk). Entry order is
// speaker-major, then spec.words order, then repetition. Rendering is
// byte-identical for any job count because every entry derives its own RNG.
inline CorpusManifest synth_corpus(const SynthSpec& spec, const Lexicon& lexicon,
                                   const std::filesystem::path& out_dir, int jobs = 1) {
    if (spec.words.empty()) throw ConfigInvalid("synth spec has no words");
    if (spec.speakers < 1) throw ConfigInvalid("synth spec needs at least one speaker");
    if (spec.repetitions < 1) throw ConfigInvalid("synth spec needs at least one repetition");
    if (spec.sample_rate_hz <= 0) throw ConfigInvalid("sample rate must be positive");
    for (const auto& w : spec.words)
        if (!lexicon.contains(w)) throw UnknownWord("synth word not in lexicon: " + w);

    CorpusManifest m;
    m.base_dir = out_dir;
    for (int s = 1; s <= spec.speakers; ++s) {
        const std::string speaker = spec.speaker_prefix + std::to_string(s);
        for (const auto& word : spec.words) {
            for (int rep = 1; rep <= spec.repetitions; ++rep) {
                ManifestEntry e;
                e.audio_path = speaker + "/" + word + "_" + std::to_string(rep) + ".wav";
                e.speaker_id = speaker;
                e.repetition_index = rep;
                e.transcript = {word};
                m.entries.push_back(std::move(e));
            }
        }
    }

    parallel_for(m.entries.size(), jobs, [&](std::size_t i) {
        const auto& e = m.entries[i];
        const AudioBuffer buf = render_utterance(spec, lexicon, e.transcript[0], e.speaker_id, e.repetition_index);
        write_wav(buf, out_dir / e.audio_path);
    });
    return m;
}

}  // namespace raqam
