#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "raqam/acoustic.hpp"
#include "raqam/errors.hpp"
#include "raqam/linguist.hpp"

namespace raqam {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Flat decoding network compiled from a grammar, a lexicon and an acoustic
// model. Emitting nodes carry a log-emission table copied from their HMM
// state; non-emitting nodes (start, branch point, word ends, final) glue the
// word chains together. Word-end nodes carry the index of the word they
// complete, which is where the decoder reads hypotheses from.
//
// Weights are log probabilities. Zero-probability transitions get no arc at
// all rather than a -inf arc.
struct SearchGraph {
    struct Node {
        bool emitting = false;
        std::string phone;               // emitting nodes: source phone label
        int hmm_state = -1;              // emitting nodes: state within the phone
        int word = -1;                   // word-end nodes: completed vocabulary index
        std::vector<double> log_emis;    // emitting nodes: K log-probabilities
    };
    struct Arc {
        int to = -1;
        double weight = 0.0;  // log probability
    };

    std::vector<Node> nodes;
    std::vector<std::vector<Arc>> arcs;  // outgoing, by source node
    int start_node = 0;
    std::vector<int> final_nodes;
    std::vector<std::string> vocabulary;
    int alphabet_size = 0;
    std::vector<int> epsilon_order;  // topological order over non-emitting nodes

    std::size_t num_nodes() const { return nodes.size(); }

    std::size_t num_arcs() const {
        std::size_t n = 0;
        for (const auto& a : arcs) n += a.size();
        return n;
    }
};

namespace detail {

class GraphBuilder {
public:
    explicit GraphBuilder(const AcousticModel& model) : model_(model) {
        g_.alphabet_size = model.alphabet_size();
    }

    int add_nonemitting() {
        g_.nodes.push_back({});
        g_.arcs.emplace_back();
        return static_cast<int>(g_.nodes.size()) - 1;
    }

    int add_word_end(int word_index) {
        const int n = add_nonemitting();
        g_.nodes[n].word = word_index;
        return n;
    }

    void arc(int from, int to, double weight) { g_.arcs[from].push_back({to, weight}); }

    // Lays down one phone HMM as emitting nodes. Entry mass is distributed by
    // the phone's pi; exits carry the per-state exit mass. Returns the pair of
    // (entry arcs, exit arcs) as (node, log weight) lists relative to this
    // phone, for the caller to wire to its surroundings.
    struct PhoneBlock {
        std::vector<std::pair<int, double>> entries;  // node, log pi
        std::vector<std::pair<int, double>> exits;    // node, log exit
    };

    PhoneBlock add_phone(const std::string& label, int word_index) {
        const DiscreteHmm& h = model_.phone(label);
        const int base = static_cast<int>(g_.nodes.size());
        for (int s = 0; s < h.num_states; ++s) {
            SearchGraph::Node n;
            n.emitting = true;
            n.phone = label;
            n.hmm_state = s;
            n.word = word_index;
            n.log_emis.resize(h.emis[s].size());
            for (std::size_t k = 0; k < h.emis[s].size(); ++k)
                n.log_emis[k] = h.emis[s][k] > 0.0 ? std::log(h.emis[s][k]) : kLogZero;
            g_.nodes.push_back(std::move(n));
            g_.arcs.emplace_back();
        }
        for (int i = 0; i < h.num_states; ++i)
            for (int j = 0; j < h.num_states; ++j)
                if (h.trans[i][j] > 0.0) arc(base + i, base + j, std::log(h.trans[i][j]));

        PhoneBlock block;
        for (int s = 0; s < h.num_states; ++s) {
            if (h.pi[s] > 0.0) block.entries.emplace_back(base + s, std::log(h.pi[s]));
            if (h.exit[s] > 0.0) block.exits.emplace_back(base + s, std::log(h.exit[s]));
        }
        if (block.entries.empty()) throw Error("phone " + label + " has no entry mass");
        if (block.exits.empty()) throw Error("phone " + label + " has no exit mass");
        return block;
    }

    // A chain of phones wired left to right (exit mass into the next phone's
    // entry distribution). Returns the chain's outermost entries/exits.
    PhoneBlock add_chain(const std::vector<std::string>& phones, int word_index) {
        PhoneBlock chain;
        for (std::size_t p = 0; p < phones.size(); ++p) {
            PhoneBlock block = add_phone(phones[p], word_index);
            if (p == 0) {
                chain.entries = block.entries;
            } else {
                for (const auto& [from, wexit] : prev_exits_)
                    for (const auto& [to, wentry] : block.entries) arc(from, to, wexit + wentry);
            }
            prev_exits_ = block.exits;
        }
        chain.exits = prev_exits_;
        return chain;
    }

    void connect(int from, const std::vector<std::pair<int, double>>& entries, double weight) {
        for (const auto& [to, wentry] : entries) arc(from, to, weight + wentry);
    }

    void connect(const std::vector<std::pair<int, double>>& exits, int to, double weight) {
        for (const auto& [from, wexit] : exits) arc(from, to, wexit + weight);
    }

    SearchGraph take() { return std::move(g_); }

private:
    const AcousticModel& model_;
    SearchGraph g_;
    std::vector<std::pair<int, double>> prev_exits_;
};

// Kahn's algorithm over the non-emitting subgraph; rejects epsilon cycles.
inline std::vector<int> epsilon_topo_order(const SearchGraph& g) {
    const int N = static_cast<int>(g.nodes.size());
    std::vector<int> indeg(N, 0);
    for (int u = 0; u < N; ++u) {
        if (g.nodes[u].emitting) continue;
        for (const auto& a : g.arcs[u])
            if (!g.nodes[a.to].emitting) ++indeg[a.to];
    }
    std::vector<int> order, queue;
    for (int u = 0; u < N; ++u)
        if (!g.nodes[u].emitting && indeg[u] == 0) queue.push_back(u);
    // process in ascending node id for determinism
    std::size_t head = 0;
    while (head < queue.size()) {
        // pick the smallest available id
        std::size_t best = head;
        for (std::size_t i = head + 1; i < queue.size(); ++i)
            if (queue[i] < queue[best]) best = i;
        std::swap(queue[head], queue[best]);
        const int u = queue[head++];
        order.push_back(u);
        for (const auto& a : g.arcs[u]) {
            if (g.nodes[a.to].emitting) continue;
            if (--indeg[a.to] == 0) queue.push_back(a.to);
        }
    }
    int ne_total = 0;
    for (int u = 0; u < N; ++u)
        if (!g.nodes[u].emitting) ++ne_total;
    if (static_cast<int>(order.size()) != ne_total)
        throw Error("search graph has a cycle of non-emitting nodes");
    return order;
}

}  // namespace detail

// Structural checks shared by all compilers; fills epsilon_order.
inline void finalize_graph(SearchGraph& g) {
    if (g.nodes.empty()) throw Error("empty search graph");
    if (g.final_nodes.empty()) throw Error("search graph has no final node");
    for (const auto& arcs : g.arcs)
        for (const auto& a : arcs) {
            if (a.to < 0 || a.to >= static_cast<int>(g.nodes.size())) throw Error("arc points outside the graph");
            if (!(a.weight <= 0.0)) throw Error("arc weight must be a log probability <= 0");
        }
    for (std::size_t u = 0; u < g.nodes.size(); ++u) {
        const auto& n = g.nodes[u];
        if (n.emitting && n.log_emis.size() != static_cast<std::size_t>(g.alphabet_size))
            throw Error("emitting node with wrong emission table size");
        if (n.word >= 0 && n.word >= static_cast<int>(g.vocabulary.size()))
            throw Error("node references a word outside the vocabulary");
    }
    g.epsilon_order = detail::epsilon_topo_order(g);
}

// Compiles the decoding network for a grammar.
//
// isolated_word:  start -> [optional SIL] -> branch -> one chain per word
//                 -> word end -> [optional SIL] -> final
// word_loop:      same, but each word end also loops back to the branch
//                 point (weight 0.5; 0.25 to final, 0.25 into closing SIL —
//                 without SIL models, 0.5 loop / 0.5 final).
//
// Branch arcs split uniformly: log(1/|vocabulary|) each. Optional silence
// enters with probability 0.5 at either end when the model has a SIL phone.
inline SearchGraph compile_graph(const Grammar& grammar, const Lexicon& lexicon, const AcousticModel& model) {
    if (grammar.vocabulary.empty()) throw ConfigInvalid("grammar has an empty vocabulary");
    for (const auto& w : grammar.vocabulary) {
        const auto& entry = lexicon.at(w);  // throws UnknownWord
        for (const auto& p : entry.phones) model.phone(p);  // throws UnknownPhone
    }

    detail::GraphBuilder b(model);
    const bool sil = model.phones.count(kSilPhone) != 0;
    const double log_half = std::log(0.5);
    const double log_quarter = std::log(0.25);
    const double log_branch = -std::log(static_cast<double>(grammar.vocabulary.size()));

    const int start = b.add_nonemitting();
    detail::GraphBuilder::PhoneBlock sil_in, sil_out;
    if (sil) sil_in = b.add_chain({kSilPhone}, -1);
    const int branch = b.add_nonemitting();

    std::vector<detail::GraphBuilder::PhoneBlock> word_blocks;
    std::vector<int> word_ends;
    for (std::size_t w = 0; w < grammar.vocabulary.size(); ++w) {
        const auto& phones = lexicon.at(grammar.vocabulary[w]).phones;
        word_blocks.push_back(b.add_chain(phones, static_cast<int>(w)));
        word_ends.push_back(b.add_word_end(static_cast<int>(w)));
    }
    if (sil) sil_out = b.add_chain({kSilPhone}, -1);
    const int final_node = b.add_nonemitting();

    if (sil) {
        b.connect(start, sil_in.entries, log_half);
        b.connect(sil_in.exits, branch, 0.0);
        b.arc(start, branch, log_half);
    } else {
        b.arc(start, branch, 0.0);
    }

    for (std::size_t w = 0; w < grammar.vocabulary.size(); ++w) {
        b.connect(branch, word_blocks[w].entries, log_branch);
        b.connect(word_blocks[w].exits, word_ends[w], 0.0);
        if (grammar.kind == Grammar::Kind::word_loop) {
            b.arc(word_ends[w], branch, log_half);
            if (sil) {
                b.arc(word_ends[w], final_node, log_quarter);
                b.connect(word_ends[w], sil_out.entries, log_quarter);
            } else {
                b.arc(word_ends[w], final_node, log_half);
            }
        } else {
            if (sil) {
                b.arc(word_ends[w], final_node, log_half);
                b.connect(word_ends[w], sil_out.entries, log_half);
            } else {
                b.arc(word_ends[w], final_node, 0.0);
            }
        }
    }
    if (sil) b.connect(sil_out.exits, final_node, 0.0);

    SearchGraph g = b.take();
    g.start_node = start;
    g.final_nodes = {final_node};
    g.vocabulary = grammar.vocabulary;
    finalize_graph(g);
    return g;
}

// Forced alignment network: the given words in order, each entered with
// weight log(1/|lexicon|), using the same junction weights as the word-loop
// compiler (so a forced path can never outscore the free loop's best path).
inline SearchGraph compile_alignment_graph(const std::vector<std::string>& words, const Lexicon& lexicon,
                                           const AcousticModel& model) {
    if (words.empty()) throw ConfigInvalid("alignment needs at least one word");
    for (const auto& w : words) {
        const auto& entry = lexicon.at(w);
        for (const auto& p : entry.phones) model.phone(p);
    }

    detail::GraphBuilder b(model);
    const bool sil = model.phones.count(kSilPhone) != 0;
    const double log_half = std::log(0.5);
    const double log_quarter = std::log(0.25);
    const double log_entry = -std::log(static_cast<double>(lexicon.size()));

    const int start = b.add_nonemitting();
    detail::GraphBuilder::PhoneBlock sil_in, sil_out;
    if (sil) sil_in = b.add_chain({kSilPhone}, -1);
    const int head = b.add_nonemitting();

    std::vector<detail::GraphBuilder::PhoneBlock> blocks;
    std::vector<int> ends;
    for (std::size_t w = 0; w < words.size(); ++w) {
        blocks.push_back(b.add_chain(lexicon.at(words[w]).phones, static_cast<int>(w)));
        ends.push_back(b.add_word_end(static_cast<int>(w)));
    }
    if (sil) sil_out = b.add_chain({kSilPhone}, -1);
    const int final_node = b.add_nonemitting();

    if (sil) {
        b.connect(start, sil_in.entries, log_half);
        b.connect(sil_in.exits, head, 0.0);
        b.arc(start, head, log_half);
    } else {
        b.arc(start, head, 0.0);
    }

    int prev = head;
    for (std::size_t w = 0; w < words.size(); ++w) {
        // entering a word costs the lexicon fan-out; between words, also the
        // loop-continue weight so forced scores stay below free-loop scores
        const double hop = (w == 0 ? 0.0 : log_half) + log_entry;
        b.connect(prev, blocks[w].entries, hop);
        b.connect(blocks[w].exits, ends[w], 0.0);
        prev = ends[w];
    }
    if (sil) {
        b.arc(prev, final_node, log_quarter);
        b.connect(prev, sil_out.entries, log_quarter);
        b.connect(sil_out.exits, final_node, 0.0);
    } else {
        b.arc(prev, final_node, log_half);
    }

    SearchGraph g = b.take();
    g.start_node = start;
    g.final_nodes = {final_node};
    g.vocabulary = words;
    finalize_graph(g);
    return g;
}

}  // namespace raqam
