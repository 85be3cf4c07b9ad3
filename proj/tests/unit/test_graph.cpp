#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <raqam/errors.hpp>
#include <raqam/graph.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

raqam::Grammar toy_grammar(raqam::Grammar::Kind kind) {
    raqam::Grammar g;
    g.kind = kind;
    g.vocabulary = fixtures::toy_lexicon().words();  // DUE, UNO
    return g;
}

// arc lookup helper; fails the test if the arc is absent
double arc_weight(const raqam::SearchGraph& g, int from, int to) {
    for (const auto& a : g.arcs[from])
        if (a.to == to) return a.weight;
    FAIL("missing arc " << from << " -> " << to);
    return 0.0;
}

bool has_arc(const raqam::SearchGraph& g, int from, int to) {
    for (const auto& a : g.arcs[from])
        if (a.to == to) return true;
    return false;
}

}  // namespace

TEST_CASE("isolated-word graph layout without silence") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    const raqam::AcousticModel model = fixtures::toy_model(false);
    const raqam::SearchGraph g =
        raqam::compile_graph(toy_grammar(raqam::Grammar::Kind::isolated_word), lex, model);

    // start, branch, 2x (two emitting states + word end), final
    REQUIRE(g.num_nodes() == 9);
    REQUIRE(g.vocabulary == std::vector<std::string>{"DUE", "UNO"});
    REQUIRE(g.final_nodes.size() == 1);
    REQUIRE(g.alphabet_size == 4);

    const double lg_half = std::log(0.5);
    // node ids follow construction order: 0 start, 1 branch, 2-3 DUE chain,
    // 4 DUE end, 5-6 UNO chain, 7 UNO end, 8 final
    REQUIRE(arc_weight(g, 0, 1) == 0.0);
    REQUIRE(arc_weight(g, 1, 2) == Catch::Approx(lg_half).margin(1e-12));  // log(1/2) + log pi[0]
    REQUIRE(arc_weight(g, 1, 5) == Catch::Approx(lg_half).margin(1e-12));
    REQUIRE(arc_weight(g, 2, 2) == Catch::Approx(lg_half).margin(1e-12));  // stay
    REQUIRE(arc_weight(g, 2, 3) == Catch::Approx(lg_half).margin(1e-12));  // advance
    REQUIRE(arc_weight(g, 3, 4) == Catch::Approx(lg_half).margin(1e-12));  // exit into word end
    REQUIRE(arc_weight(g, 4, 8) == 0.0);
    REQUIRE(arc_weight(g, 7, 8) == 0.0);
    REQUIRE_FALSE(has_arc(g, 4, 1));  // no loop back
    REQUIRE_FALSE(has_arc(g, 2, 4));  // state 0 has no exit mass

    // word metadata: emitting nodes tag their word, ends are non-emitting
    for (int n : {2, 3}) {
        REQUIRE(g.nodes[n].emitting);
        REQUIRE(g.nodes[n].phone == "PB");
        REQUIRE(g.nodes[n].word == 0);
    }
    for (int n : {5, 6}) {
        REQUIRE(g.nodes[n].phone == "PA");
        REQUIRE(g.nodes[n].word == 1);
    }
    REQUIRE(g.nodes[2].hmm_state == 0);
    REQUIRE(g.nodes[3].hmm_state == 1);
    std::vector<int> word_ends;
    for (std::size_t n = 0; n < g.num_nodes(); ++n)
        if (!g.nodes[n].emitting && g.nodes[n].word >= 0) word_ends.push_back(static_cast<int>(n));
    REQUIRE(word_ends == std::vector<int>{4, 7});

    // emission tables are the logs of the source rows
    REQUIRE(g.nodes[2].log_emis[2] == Catch::Approx(std::log(0.85)).margin(1e-12));
    REQUIRE(g.nodes[2].log_emis[0] == Catch::Approx(std::log(0.05)).margin(1e-12));
}

TEST_CASE("silence wrapping adds entry and exit chains") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    const raqam::AcousticModel model = fixtures::toy_model(true);
    const raqam::SearchGraph g =
        raqam::compile_graph(toy_grammar(raqam::Grammar::Kind::isolated_word), lex, model);

    // + one-state SIL chain on each side
    REQUIRE(g.num_nodes() == 11);
    int sil_nodes = 0;
    for (const auto& n : g.nodes)
        if (n.emitting && n.phone == "SIL") {
            ++sil_nodes;
            REQUIRE(n.word == -1);
        }
    REQUIRE(sil_nodes == 2);

    // 0 start, 1 sil_in, 2 branch; optional silence costs log 0.5 either way
    const double lg_half = std::log(0.5);
    REQUIRE(arc_weight(g, 0, 1) == Catch::Approx(lg_half).margin(1e-12));
    REQUIRE(arc_weight(g, 0, 2) == Catch::Approx(lg_half).margin(1e-12));
    REQUIRE(arc_weight(g, 1, 2) == Catch::Approx(lg_half).margin(1e-12));  // SIL exit 0.5 + 0
}

TEST_CASE("word-loop graph wires ends back to the branch point") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();

    SECTION("without silence") {
        const raqam::AcousticModel model = fixtures::toy_model(false);
        const raqam::SearchGraph g =
            raqam::compile_graph(toy_grammar(raqam::Grammar::Kind::word_loop), lex, model);
        const double lg_half = std::log(0.5);
        REQUIRE(arc_weight(g, 4, 1) == Catch::Approx(lg_half).margin(1e-12));
        REQUIRE(arc_weight(g, 4, 8) == Catch::Approx(lg_half).margin(1e-12));
    }
    SECTION("with silence") {
        const raqam::AcousticModel model = fixtures::toy_model(true);
        const raqam::SearchGraph g =
            raqam::compile_graph(toy_grammar(raqam::Grammar::Kind::word_loop), lex, model);
        // 0 start, 1 sil_in, 2 branch, 3-4 DUE, 5 end, 6-7 UNO, 8 end, 9 sil_out, 10 final
        const double lg_half = std::log(0.5);
        const double lg_quarter = std::log(0.25);
        REQUIRE(arc_weight(g, 5, 2) == Catch::Approx(lg_half).margin(1e-12));
        REQUIRE(arc_weight(g, 5, 10) == Catch::Approx(lg_quarter).margin(1e-12));
        // into closing silence: log 0.25 + log pi
        REQUIRE(arc_weight(g, 5, 9) == Catch::Approx(lg_quarter).margin(1e-12));
        REQUIRE(arc_weight(g, 9, 10) == Catch::Approx(lg_half).margin(1e-12));  // SIL exit
    }
}

TEST_CASE("epsilon order covers the non-emitting nodes topologically") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    for (bool sil : {false, true}) {
        for (auto kind : {raqam::Grammar::Kind::isolated_word, raqam::Grammar::Kind::word_loop}) {
            const raqam::AcousticModel model = fixtures::toy_model(sil);
            const raqam::SearchGraph g = raqam::compile_graph(toy_grammar(kind), lex, model);

            std::set<int> expected;
            for (std::size_t n = 0; n < g.num_nodes(); ++n)
                if (!g.nodes[n].emitting) expected.insert(static_cast<int>(n));
            REQUIRE(std::set<int>(g.epsilon_order.begin(), g.epsilon_order.end()) == expected);

            // every arc between non-emitting nodes must respect the order
            // (the word loop's back edge re-enters through emitting states)
            std::vector<int> pos(g.num_nodes(), -1);
            for (std::size_t i = 0; i < g.epsilon_order.size(); ++i) pos[g.epsilon_order[i]] = static_cast<int>(i);
            int checked = 0;
            for (int u : g.epsilon_order)
                for (const auto& a : g.arcs[u])
                    if (!g.nodes[a.to].emitting) {
                        REQUIRE(pos[u] < pos[a.to]);
                        ++checked;
                    }
            REQUIRE(checked > 0);
        }
    }
}

TEST_CASE("a cycle of non-emitting nodes is rejected") {
    raqam::SearchGraph g;
    g.nodes.resize(2);
    g.arcs.resize(2);
    g.arcs[0].push_back({1, 0.0});
    g.arcs[1].push_back({0, 0.0});
    g.final_nodes = {1};
    REQUIRE_THROWS_WITH(raqam::finalize_graph(g), Catch::Matchers::ContainsSubstring("cycle"));
}

TEST_CASE("finalize rejects malformed graphs") {
    SECTION("empty") {
        raqam::SearchGraph g;
        REQUIRE_THROWS_AS(raqam::finalize_graph(g), raqam::Error);
    }
    SECTION("no final node") {
        raqam::SearchGraph g;
        g.nodes.resize(1);
        g.arcs.resize(1);
        REQUIRE_THROWS_AS(raqam::finalize_graph(g), raqam::Error);
    }
    SECTION("arc out of range") {
        raqam::SearchGraph g;
        g.nodes.resize(1);
        g.arcs.resize(1);
        g.arcs[0].push_back({5, 0.0});
        g.final_nodes = {0};
        REQUIRE_THROWS_AS(raqam::finalize_graph(g), raqam::Error);
    }
    SECTION("positive arc weight") {
        raqam::SearchGraph g;
        g.nodes.resize(2);
        g.arcs.resize(2);
        g.arcs[0].push_back({1, 0.1});
        g.final_nodes = {1};
        REQUIRE_THROWS_AS(raqam::finalize_graph(g), raqam::Error);
    }
    SECTION("emission table size mismatch") {
        raqam::SearchGraph g;
        g.nodes.resize(1);
        g.nodes[0].emitting = true;
        g.nodes[0].log_emis = {0.0, 0.0};
        g.arcs.resize(1);
        g.final_nodes = {0};
        g.alphabet_size = 3;
        REQUIRE_THROWS_AS(raqam::finalize_graph(g), raqam::Error);
    }
    SECTION("word index outside vocabulary") {
        raqam::SearchGraph g;
        g.nodes.resize(1);
        g.nodes[0].word = 2;
        g.arcs.resize(1);
        g.final_nodes = {0};
        g.vocabulary = {"ONLY"};
        REQUIRE_THROWS_AS(raqam::finalize_graph(g), raqam::Error);
    }
}

TEST_CASE("compile rejects inconsistent inputs") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    raqam::AcousticModel model = fixtures::toy_model(false);

    raqam::Grammar empty;
    empty.vocabulary = {};
    REQUIRE_THROWS_AS(raqam::compile_graph(empty, lex, model), raqam::ConfigInvalid);

    raqam::Grammar unknown;
    unknown.vocabulary = {"TRE"};
    REQUIRE_THROWS_AS(raqam::compile_graph(unknown, lex, model), raqam::UnknownWord);

    raqam::AcousticModel missing = model;
    missing.phones.erase("PB");
    raqam::Grammar due;
    due.vocabulary = {"DUE"};
    REQUIRE_THROWS_AS(raqam::compile_graph(due, lex, missing), raqam::UnknownPhone);

    // a phone whose exit mass is all zero cannot be wired into a chain
    raqam::AcousticModel dead = model;
    dead.phones["PB"].exit = {0.0, 0.0};
    dead.phones["PB"].trans[1][1] = 1.0;
    REQUIRE_THROWS_AS(raqam::compile_graph(due, lex, dead), raqam::Error);

    REQUIRE_THROWS_AS(raqam::compile_alignment_graph({}, lex, model), raqam::ConfigInvalid);
    REQUIRE_THROWS_AS(raqam::compile_alignment_graph({"TRE"}, lex, model), raqam::UnknownWord);
}

TEST_CASE("isolated graphs accept exactly one word per utterance") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    for (bool sil : {false, true}) {
        const raqam::AcousticModel model = fixtures::toy_model(sil);
        const raqam::SearchGraph g =
            raqam::compile_graph(toy_grammar(raqam::Grammar::Kind::isolated_word), lex, model);
        const auto accepted = oracle::bf_accepted_word_sequences(g, 3);
        REQUIRE(accepted == std::vector<std::vector<int>>{{0}, {1}});
    }
}

TEST_CASE("loop graphs accept every word sequence up to the probed length") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    const raqam::AcousticModel model = fixtures::toy_model(true);
    const raqam::SearchGraph g =
        raqam::compile_graph(toy_grammar(raqam::Grammar::Kind::word_loop), lex, model);
    const auto accepted = oracle::bf_accepted_word_sequences(g, 2);
    const std::vector<std::vector<int>> expected{{0}, {0, 0}, {0, 1}, {1}, {1, 0}, {1, 1}};
    REQUIRE(accepted == expected);
}

TEST_CASE("alignment graphs accept only their word sequence") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    const raqam::AcousticModel model = fixtures::toy_model(true);
    const std::vector<std::string> words{"UNO", "UNO", "DUE"};
    const raqam::SearchGraph g = raqam::compile_alignment_graph(words, lex, model);
    REQUIRE(g.vocabulary == words);
    const auto accepted = oracle::bf_accepted_word_sequences(g, 5);
    REQUIRE(accepted == std::vector<std::vector<int>>{{0, 1, 2}});
}

TEST_CASE("digits network size matches its parts") {
    const raqam::Lexicon lex = raqam::default_lexicon();
    std::set<std::string> inventory{raqam::kSilPhone};
    for (const auto& [w, e] : lex.entries) inventory.insert(e.phones.begin(), e.phones.end());
    const raqam::AcousticModel model =
        raqam::flat_start(std::vector<std::string>(inventory.begin(), inventory.end()), 4, 3);

    const raqam::SearchGraph g = raqam::compile_graph(raqam::digits_grammar(), lex, model);

    std::size_t expected = 3;  // start, branch, final
    expected += 2 * 3;         // silence chains
    for (const auto& w : raqam::digit_words()) expected += lex.at(w).phones.size() * 3 + 1;
    REQUIRE(g.num_nodes() == expected);
    REQUIRE(g.vocabulary == raqam::digit_words());

    int word_ends = 0;
    for (const auto& n : g.nodes)
        if (!n.emitting && n.word >= 0) ++word_ends;
    REQUIRE(word_ends == 10);
}
