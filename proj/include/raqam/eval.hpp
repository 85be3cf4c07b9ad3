#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "raqam/acoustic.hpp"
#include "raqam/corpus.hpp"
#include "raqam/decoder.hpp"
#include "raqam/errors.hpp"
#include "raqam/graph.hpp"
#include "raqam/parallel.hpp"

namespace raqam {

struct WordAlignment {
    int hits = 0;
    int substitutions = 0;
    int deletions = 0;
    int insertions = 0;
    int reference_length = 0;

    int errors() const { return substitutions + deletions + insertions; }
};

// Minimum-edit-distance word alignment. Among minimum-cost alignments the
// tie-break prefers more hits, then fewer insertions, so the reported counts
// are deterministic. The counts satisfy
//   hits + substitutions + deletions  == |ref|
//   hits + substitutions + insertions == |hyp|
inline WordAlignment levenshtein_align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    const int R = static_cast<int>(ref.size()), H = static_cast<int>(hyp.size());
    using Cell = std::tuple<int, int, int>;  // (edits, -hits, insertions), lexicographic
    std::vector<std::vector<Cell>> dp(R + 1, std::vector<Cell>(H + 1));
    for (int j = 0; j <= H; ++j) dp[0][j] = {j, 0, j};
    for (int i = 1; i <= R; ++i) dp[i][0] = {i, 0, 0};
    for (int i = 1; i <= R; ++i) {
        for (int j = 1; j <= H; ++j) {
            const bool match = ref[i - 1] == hyp[j - 1];
            Cell diag = dp[i - 1][j - 1];
            if (match)
                std::get<1>(diag) -= 1;
            else
                std::get<0>(diag) += 1;
            Cell del = dp[i - 1][j];
            std::get<0>(del) += 1;
            Cell ins = dp[i][j - 1];
            std::get<0>(ins) += 1;
            std::get<2>(ins) += 1;
            dp[i][j] = std::min({diag, del, ins});
        }
    }
    const auto [edits, neg_hits, insertions] = dp[R][H];
    WordAlignment a;
    a.reference_length = R;
    a.hits = -neg_hits;
    a.insertions = insertions;
    a.substitutions = H - a.hits - a.insertions;
    a.deletions = R - a.hits - a.substitutions;
    (void)edits;
    return a;
}

// ---------------------------------------------------------------------------
// Isolated-word evaluation
// ---------------------------------------------------------------------------

struct SpeakerScore {
    int correct = 0;
    int total = 0;

    double ratio_percent() const { return total > 0 ? 100.0 * correct / total : 0.0; }
};

struct EvalReport {
    std::map<std::string, SpeakerScore> per_speaker;
    // (speaker, repetition) cells, for the per-test table breakdown
    std::map<std::pair<std::string, int>, SpeakerScore> per_test;
    int correct_total = 0;
    int utterance_total = 0;

    // Mean of the per-speaker ratios (each speaker weighted equally).
    double mean_ratio_percent() const {
        if (per_speaker.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& [id, s] : per_speaker) acc += s.ratio_percent();
        return acc / static_cast<double>(per_speaker.size());
    }
};

// Truncates (never rounds) a percentage to two decimals: 86.666.. -> "86.66".
inline std::string format_percent_truncated(double percent) {
    if (percent < 0.0) percent = 0.0;
    const long long hundredths = static_cast<long long>(std::floor(percent * 100.0 + 1e-9));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", hundredths / 100, hundredths % 100);
    return buf;
}

// Decodes every manifest entry against an isolated-word graph over the whole
// lexicon and scores exact word matches, grouped per speaker and per
// repetition. Transcripts must be single words. A failed decode counts as an
// error for its speaker (and is reported on *log when given) instead of
// aborting the run.
inline EvalReport evaluate_isolated(const CorpusManifest& manifest, const AcousticModel& model,
                                    const Lexicon& lexicon, const DecoderConfig& cfg = {}, int jobs = 1,
                                    std::ostream* log = nullptr) {
    if (manifest.entries.empty()) throw InsufficientData("manifest has no entries");
    for (const auto& e : manifest.entries)
        if (e.transcript.size() != 1)
            throw Error("isolated-word evaluation needs single-word transcripts, got \"" + e.audio_path + "\"");

    Grammar grammar;
    grammar.kind = Grammar::Kind::isolated_word;
    grammar.vocabulary = lexicon.words();
    const SearchGraph graph = compile_graph(grammar, lexicon, model);

    struct Outcome {
        bool correct = false;
        std::string message;  // non-empty on failure
    };
    std::vector<Outcome> outcomes(manifest.entries.size());
    parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        try {
            const FeatureSequence feats = compute_mfcc(read_wav(manifest.resolve(e)), model.frontend);
            const SymbolSequence symbols = quantize(feats, model.codebook);
            const Hypothesis hyp = decode(symbols, graph, cfg);
            outcomes[i].correct = hyp.words.size() == 1 && hyp.words[0] == e.transcript[0];
        } catch (const Error& err) {
            outcomes[i].message = err.what();
        }
    });

    EvalReport report;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        auto& spk = report.per_speaker[e.speaker_id];
        auto& cell = report.per_test[{e.speaker_id, e.repetition_index}];
        ++spk.total;
        ++cell.total;
        ++report.utterance_total;
        if (outcomes[i].correct) {
            ++spk.correct;
            ++cell.correct;
            ++report.correct_total;
        } else if (!outcomes[i].message.empty() && log) {
            *log << e.audio_path << ": " << outcomes[i].message << '\n';
        }
    }
    return report;
}

// Renders the recognition-ratio table: one row per speaker, one column per
// repetition ("test"), a mean column, and a closing mean row.
inline void render_table(const EvalReport& report, std::ostream& out) {
    std::vector<int> reps;
    for (const auto& [key, cell] : report.per_test)
        if (std::find(reps.begin(), reps.end(), key.second) == reps.end()) reps.push_back(key.second);
    std::sort(reps.begin(), reps.end());

    out << "Speaker";
    for (int r : reps) out << "\tTest " << r;
    out << "\tRecognition ratio\n";
    for (const auto& [id, score] : report.per_speaker) {
        out << id;
        for (int r : reps) {
            auto it = report.per_test.find({id, r});
            if (it == report.per_test.end())
                out << "\t-";
            else
                out << '\t' << it->second.correct << '/' << it->second.total;
        }
        out << '\t' << format_percent_truncated(score.ratio_percent()) << "%\n";
    }
    out << "Mean recognition ratio\t" << format_percent_truncated(report.mean_ratio_percent()) << "%\n";
}

// Machine-readable scores: `speaker TAB correct TAB total TAB ratio`, closed
// by a MEAN line carrying the overall totals and the mean speaker ratio.
inline void write_tsv(const EvalReport& report, std::ostream& out) {
    for (const auto& [id, score] : report.per_speaker)
        out << id << '\t' << score.correct << '\t' << score.total << '\t'
            << format_percent_truncated(score.ratio_percent()) << '\n';
    out << "MEAN\t" << report.correct_total << '\t' << report.utterance_total << '\t'
        << format_percent_truncated(report.mean_ratio_percent()) << '\n';
}

}  // namespace raqam
