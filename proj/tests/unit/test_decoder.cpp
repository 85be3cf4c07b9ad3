#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include <raqam/decoder.hpp>
#include <raqam/errors.hpp>
#include <raqam/rng.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

raqam::SymbolSequence seq(std::vector<int> symbols) {
    raqam::SymbolSequence s;
    s.symbols = std::move(symbols);
    return s;
}

raqam::SearchGraph toy_graph(bool sil, raqam::Grammar::Kind kind) {
    raqam::Grammar g;
    g.kind = kind;
    g.vocabulary = fixtures::toy_lexicon().words();
    return raqam::compile_graph(g, fixtures::toy_lexicon(), fixtures::toy_model(sil));
}

}  // namespace

TEST_CASE("decoding the toy pair is exact") {
    const raqam::SearchGraph g = toy_graph(false, raqam::Grammar::Kind::isolated_word);

    // branch 0.5, advance 0.5, exit 0.5 plus two peak emissions at 0.85
    const double expected = 3.0 * std::log(0.5) + 2.0 * std::log(0.85);
    raqam::DecoderConfig cfg;
    cfg.record_alignment = true;
    const raqam::Hypothesis hyp = raqam::decode(seq({0, 1}), g, cfg);
    REQUIRE(hyp.words == std::vector<std::string>{"UNO"});
    REQUIRE(hyp.log_score == Catch::Approx(expected).margin(1e-12));
    // frames sit in UNO's two chain states (nodes 5 and 6 by construction)
    REQUIRE(hyp.state_alignment == std::vector<int>{5, 6});

    // symbols 2,3 are DUE's peaks
    const raqam::Hypothesis due = raqam::decode(seq({2, 3}), g);
    REQUIRE(due.words == std::vector<std::string>{"DUE"});
    REQUIRE(due.log_score == Catch::Approx(expected).margin(1e-12));
    REQUIRE(due.state_alignment.empty());

    const oracle::BfDecode bf = oracle::bf_decode(g, {0, 1});
    REQUIRE(bf.found);
    REQUIRE(hyp.log_score == Catch::Approx(bf.best).margin(1e-12));
    REQUIRE(bf.best_words == std::vector<std::vector<int>>{{1}});
}

TEST_CASE("unpruned decoding matches path enumeration") {
    raqam::Rng rng(3001);
    int decoded = 0, rejected = 0;
    for (int c = 0; c < 200; ++c) {
        const oracle::DecodeInstance inst = oracle::random_decode_instance(rng);
        const int T = oracle::random_int(rng, 2, 8);
        const auto obs = oracle::random_obs(rng, inst.graph.alphabet_size, T);
        const oracle::BfDecode bf = oracle::bf_decode(inst.graph, obs);

        INFO("case " << c << " T=" << T << " nodes=" << inst.graph.num_nodes());
        if (!bf.found) {
            REQUIRE_THROWS_AS(raqam::decode(seq(obs), inst.graph), raqam::NoSurvivingPath);
            ++rejected;
            continue;
        }
        const raqam::Hypothesis hyp = raqam::decode(seq(obs), inst.graph);
        REQUIRE(hyp.log_score == Catch::Approx(bf.best).epsilon(1e-9));
        std::vector<int> ids;
        for (const auto& w : hyp.words) ids.push_back(static_cast<int>(w[1] - '0'));
        REQUIRE(std::find(bf.best_words.begin(), bf.best_words.end(), ids) != bf.best_words.end());
        ++decoded;
    }
    // the generator must exercise both outcomes
    REQUIRE(decoded > 50);
    REQUIRE(rejected > 0);
}

TEST_CASE("insertion penalties are charged once per word") {
    const raqam::SearchGraph g = toy_graph(true, raqam::Grammar::Kind::word_loop);
    const std::vector<int> obs{0, 1, 2, 3};

    raqam::DecoderConfig plain;
    const raqam::Hypothesis base = raqam::decode(seq(obs), g, plain);
    REQUIRE(base.words == std::vector<std::string>{"UNO", "DUE"});

    raqam::DecoderConfig pen;
    pen.word_insertion_penalty = -0.3;
    const raqam::Hypothesis biased = raqam::decode(seq(obs), g, pen);
    // same path, two words, so exactly 0.6 cheaper
    REQUIRE(biased.words == base.words);
    REQUIRE(biased.log_score == Catch::Approx(base.log_score - 0.6).margin(1e-12));

    // and the oracle agrees under the same penalty
    const oracle::BfDecode bf = oracle::bf_decode(g, obs, -0.3);
    REQUIRE(bf.found);
    REQUIRE(biased.log_score == Catch::Approx(bf.best).epsilon(1e-9));
}

TEST_CASE("penalized decoding matches path enumeration") {
    raqam::Rng rng(3002);
    for (int c = 0; c < 60; ++c) {
        const oracle::DecodeInstance inst = oracle::random_decode_instance(rng);
        const int T = oracle::random_int(rng, 2, 6);
        const auto obs = oracle::random_obs(rng, inst.graph.alphabet_size, T);
        const double penalty = -1.5 * rng.uniform();

        raqam::DecoderConfig cfg;
        cfg.word_insertion_penalty = penalty;
        const oracle::BfDecode bf = oracle::bf_decode(inst.graph, obs, penalty);
        INFO("case " << c << " penalty=" << penalty);
        if (!bf.found) {
            REQUIRE_THROWS_AS(raqam::decode(seq(obs), inst.graph, cfg), raqam::NoSurvivingPath);
            continue;
        }
        const raqam::Hypothesis hyp = raqam::decode(seq(obs), inst.graph, cfg);
        REQUIRE(hyp.log_score == Catch::Approx(bf.best).epsilon(1e-9));
    }
}

TEST_CASE("pruning never beats the exact search") {
    raqam::Rng rng(3003);
    for (int c = 0; c < 60; ++c) {
        const oracle::DecodeInstance inst = oracle::random_decode_instance(rng);
        const int T = oracle::random_int(rng, 2, 6);
        const auto obs = oracle::random_obs(rng, inst.graph.alphabet_size, T);

        double exact;
        try {
            exact = raqam::decode(seq(obs), inst.graph).log_score;
        } catch (const raqam::NoSurvivingPath&) {
            continue;
        }

        raqam::DecoderConfig narrow;
        narrow.beam_width = 0.5 + 2.0 * rng.uniform();
        narrow.max_active = oracle::random_int(rng, 1, 4);
        try {
            const raqam::Hypothesis pruned = raqam::decode(seq(obs), inst.graph, narrow);
            REQUIRE(pruned.log_score <= exact + 1e-9);
        } catch (const raqam::NoSurvivingPath&) {
            // over-pruning may kill every path; that is acceptable
        }

        // a beam wider than any score spread changes nothing
        raqam::DecoderConfig wide;
        wide.beam_width = 1e9;
        wide.max_active = static_cast<int>(inst.graph.num_nodes());
        const raqam::Hypothesis same = raqam::decode(seq(obs), inst.graph, wide);
        REQUIRE(same.log_score == Catch::Approx(exact).margin(1e-12));
    }
}

TEST_CASE("a tight histogram prune still finds the toy answer") {
    const raqam::SearchGraph g = toy_graph(false, raqam::Grammar::Kind::isolated_word);
    raqam::DecoderConfig cfg;
    cfg.max_active = 1;
    const raqam::Hypothesis hyp = raqam::decode(seq({0, 1}), g, cfg);
    REQUIRE(hyp.words == std::vector<std::string>{"UNO"});
    REQUIRE(hyp.log_score == Catch::Approx(3.0 * std::log(0.5) + 2.0 * std::log(0.85)).margin(1e-12));
}

TEST_CASE("dead ends raise NoSurvivingPath") {
    const raqam::SearchGraph g = toy_graph(false, raqam::Grammar::Kind::isolated_word);
    // both words need two frames to reach their exit state
    REQUIRE_THROWS_AS(raqam::decode(seq({0}), g), raqam::NoSurvivingPath);

    // a symbol no state can emit kills every token at its frame
    raqam::AcousticModel mute = fixtures::toy_model(false);
    for (auto& [label, h] : mute.phones)
        for (auto& row : h.emis) {
            row[0] += row[3];
            row[3] = 0.0;
        }
    raqam::Grammar gr;
    gr.vocabulary = fixtures::toy_lexicon().words();
    const raqam::SearchGraph muted = raqam::compile_graph(gr, fixtures::toy_lexicon(), mute);
    REQUIRE_THROWS_AS(raqam::decode(seq({0, 3}), muted), raqam::NoSurvivingPath);
}

TEST_CASE("decoder input validation") {
    const raqam::SearchGraph g = toy_graph(false, raqam::Grammar::Kind::isolated_word);

    REQUIRE_THROWS_AS(raqam::decode(seq({}), g), raqam::EmptyObservation);
    REQUIRE_THROWS_AS(raqam::decode(seq({4}), g), raqam::SymbolOutOfRange);
    REQUIRE_THROWS_AS(raqam::decode(seq({-1}), g), raqam::SymbolOutOfRange);

    raqam::DecoderConfig cfg;
    cfg.beam_width = 0.0;
    REQUIRE_THROWS_AS(raqam::decode(seq({0, 1}), g, cfg), raqam::ConfigInvalid);
    cfg = {};
    cfg.max_active = 0;
    REQUIRE_THROWS_AS(raqam::decode(seq({0, 1}), g, cfg), raqam::ConfigInvalid);
    cfg = {};
    cfg.word_insertion_penalty = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(raqam::decode(seq({0, 1}), g, cfg), raqam::ConfigInvalid);
}

TEST_CASE("decoding is deterministic") {
    const raqam::SearchGraph g = toy_graph(true, raqam::Grammar::Kind::word_loop);
    const std::vector<int> obs{0, 1, 2, 3, 0, 1};
    const raqam::Hypothesis a = raqam::decode(seq(obs), g);
    const raqam::Hypothesis b = raqam::decode(seq(obs), g);
    REQUIRE(a.words == b.words);
    REQUIRE(a.log_score == b.log_score);
}

TEST_CASE("forced alignment reproduces the free decode") {
    const raqam::Lexicon lex = fixtures::toy_lexicon();
    const raqam::AcousticModel model = fixtures::toy_model(true);
    const raqam::SearchGraph loop = toy_graph(true, raqam::Grammar::Kind::word_loop);
    const std::vector<int> obs{0, 1, 2, 3};

    const raqam::Hypothesis free_run = raqam::decode(seq(obs), loop);
    const raqam::Hypothesis forced = raqam::align(seq(obs), free_run.words, lex, model);

    // the forced network carries the loop's junction weights, so the free
    // decode's own path scores identically and nothing can beat it
    REQUIRE(forced.words == free_run.words);
    REQUIRE(forced.log_score == Catch::Approx(free_run.log_score).margin(1e-9));
    REQUIRE(forced.state_alignment.size() == obs.size());
    for (int n : forced.state_alignment) REQUIRE(n >= 0);

    REQUIRE_THROWS_AS(raqam::align(seq(obs), {}, lex, model), raqam::ConfigInvalid);
}
