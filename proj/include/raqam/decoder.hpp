#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "raqam/errors.hpp"
#include "raqam/graph.hpp"
#include "raqam/vq.hpp"

namespace raqam {

struct DecoderConfig {
    // Log-domain beam: tokens worse than (frame best - beam_width) die. The
    // default is wide enough to be exact on any graph this toolkit builds.
    double beam_width = 1e30;
    // Keep at most this many emitting tokens per frame (unset = unlimited).
    std::optional<int> max_active;
    // Added once per word end; negative values discourage word insertions.
    double word_insertion_penalty = 0.0;
    // Record the per-frame emitting node for the best path (costs memory).
    bool record_alignment = false;
};

inline void validate(const DecoderConfig& cfg) {
    if (!(cfg.beam_width > 0.0)) throw ConfigInvalid("beam_width must be positive");
    if (cfg.max_active && *cfg.max_active < 1) throw ConfigInvalid("max_active must be >= 1 when set");
    if (!std::isfinite(cfg.word_insertion_penalty)) throw ConfigInvalid("word_insertion_penalty must be finite");
}

struct Hypothesis {
    std::vector<std::string> words;
    double log_score = -std::numeric_limits<double>::infinity();
    // One emitting node id per frame; filled when record_alignment is on.
    std::vector<int> state_alignment;
};

namespace detail {

// Immutable backpointer arenas: cons cells indexed by position, -1 = nil.
struct HistoryArena {
    std::vector<std::pair<int, int>> cells;  // (payload, parent)

    int push(int payload, int parent) {
        cells.emplace_back(payload, parent);
        return static_cast<int>(cells.size()) - 1;
    }

    std::vector<int> unwind(int head) const {
        std::vector<int> out;
        for (int i = head; i >= 0; i = cells[i].second) out.push_back(cells[i].first);
        std::reverse(out.begin(), out.end());
        return out;
    }
};

struct Token {
    double score = -std::numeric_limits<double>::infinity();
    int words = -1;  // history arena head
    int align = -1;  // alignment arena head

    bool alive() const { return score > -std::numeric_limits<double>::infinity(); }
};

}  // namespace detail

// Time-synchronous Viterbi over the compiled graph.
//
// Each frame: propagate along arcs out of live emitting nodes, close over
// non-emitting nodes in topological order, then charge the frame's symbol on
// every emitting node reached; ties between equal-scoring tokens keep the
// lowest node id (slot order), so results are deterministic. After the last
// frame one more arc/epsilon relaxation reaches the final nodes.
inline Hypothesis decode(const SymbolSequence& obs, const SearchGraph& g, const DecoderConfig& cfg = {}) {
    validate(cfg);
    if (obs.symbols.empty()) throw EmptyObservation("empty observation sequence");
    for (int s : obs.symbols)
        if (s < 0 || s >= g.alphabet_size)
            throw SymbolOutOfRange("symbol " + std::to_string(s) + " outside alphabet of size " +
                                   std::to_string(g.alphabet_size));

    const int N = static_cast<int>(g.nodes.size());
    detail::HistoryArena words, aligns;
    std::vector<detail::Token> cur(N), next(N);

    // relax `tok` along the arc to node v with the given weight; word-end
    // nodes extend word history and charge the insertion penalty
    auto relax = [&](std::vector<detail::Token>& layer, const detail::Token& tok, int v, double w) {
        if (!tok.alive() || w == kLogZero) return;
        detail::Token cand = tok;
        cand.score += w;
        const bool word_end = !g.nodes[v].emitting && g.nodes[v].word >= 0;
        if (word_end) cand.score += cfg.word_insertion_penalty;
        if (cand.score > layer[v].score) {
            if (word_end) cand.words = words.push(g.nodes[v].word, cand.words);
            layer[v] = cand;
        }
    };

    auto epsilon_pass = [&](std::vector<detail::Token>& layer) {
        for (int u : g.epsilon_order) {
            if (!layer[u].alive()) continue;
            for (const auto& a : g.arcs[u]) relax(layer, layer[u], a.to, a.weight);
        }
    };

    const std::size_t T = obs.symbols.size();
    for (std::size_t t = 0; t < T; ++t) {
        std::fill(next.begin(), next.end(), detail::Token{});
        if (t == 0) {
            next[g.start_node] = detail::Token{0.0, -1, -1};
            if (g.nodes[g.start_node].word >= 0) throw Error("start node must not be a word end");
        } else {
            for (int u = 0; u < N; ++u) {
                if (!g.nodes[u].emitting || !cur[u].alive()) continue;
                for (const auto& a : g.arcs[u]) relax(next, cur[u], a.to, a.weight);
            }
        }
        epsilon_pass(next);

        // consume the frame on every emitting node reached
        const int sym = obs.symbols[t];
        double best = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < N; ++v) {
            if (!g.nodes[v].emitting) {
                next[v] = detail::Token{};  // non-emitting tokens do not carry across frames
                continue;
            }
            if (!next[v].alive()) continue;
            const double le = g.nodes[v].log_emis[sym];
            if (le == kLogZero) {
                next[v] = detail::Token{};
                continue;
            }
            next[v].score += le;
            if (cfg.record_alignment) next[v].align = aligns.push(v, next[v].align);
            best = std::max(best, next[v].score);
        }
        if (best == -std::numeric_limits<double>::infinity()) throw NoSurvivingPath("all paths died at frame " + std::to_string(t));

        // beam pruning
        const double floor_score = best - cfg.beam_width;
        int live = 0;
        for (int v = 0; v < N; ++v) {
            if (!next[v].alive()) continue;
            if (next[v].score < floor_score)
                next[v] = detail::Token{};
            else
                ++live;
        }
        // histogram pruning
        if (cfg.max_active && live > *cfg.max_active) {
            std::vector<std::pair<double, int>> ranked;  // (-score, node)
            ranked.reserve(live);
            for (int v = 0; v < N; ++v)
                if (next[v].alive()) ranked.emplace_back(-next[v].score, v);
            std::nth_element(ranked.begin(), ranked.begin() + (*cfg.max_active - 1), ranked.end());
            const auto cut = ranked[*cfg.max_active - 1];
            for (int v = 0; v < N; ++v) {
                if (!next[v].alive()) continue;
                const std::pair<double, int> key(-next[v].score, v);
                if (cut < key) next[v] = detail::Token{};
            }
        }
        std::swap(cur, next);
    }

    // final relaxation: arcs out of emitting nodes + epsilon closure, no emission
    std::fill(next.begin(), next.end(), detail::Token{});
    for (int u = 0; u < N; ++u) {
        if (!g.nodes[u].emitting || !cur[u].alive()) continue;
        for (const auto& a : g.arcs[u]) relax(next, cur[u], a.to, a.weight);
    }
    epsilon_pass(next);

    const detail::Token* winner = nullptr;
    for (int f : g.final_nodes) {
        if (!next[f].alive()) continue;
        if (!winner || next[f].score > winner->score) winner = &next[f];
    }
    if (!winner) throw NoSurvivingPath("no final node reachable after the last frame");

    Hypothesis hyp;
    hyp.log_score = winner->score;
    for (int w : words.unwind(winner->words)) hyp.words.push_back(g.vocabulary[w]);
    if (cfg.record_alignment) hyp.state_alignment = aligns.unwind(winner->align);
    return hyp;
}

// Forced alignment: Viterbi over the linear graph for `words`, with the
// per-frame emitting node recorded. Uses an exact (unpruned) search.
inline Hypothesis align(const SymbolSequence& obs, const std::vector<std::string>& words, const Lexicon& lexicon,
                        const AcousticModel& model) {
    const SearchGraph g = compile_alignment_graph(words, lexicon, model);
    DecoderConfig cfg;
    cfg.record_alignment = true;
    return decode(obs, g, cfg);
}

}  // namespace raqam
