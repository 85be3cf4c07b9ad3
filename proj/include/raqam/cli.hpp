#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raqam/acoustic.hpp"
#include "raqam/corpus.hpp"
#include "raqam/decoder.hpp"
#include "raqam/errors.hpp"
#include "raqam/eval.hpp"
#include "raqam/graph.hpp"
#include "raqam/linguist.hpp"

namespace raqam {

// Exit codes: 0 success, 1 usage error, 2 data/processing error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

struct LexiconFlags {
    std::string lexicon_path;
    std::string phones_path;

    Lexicon lexicon() const { return lexicon_path.empty() ? default_lexicon() : load_lexicon(lexicon_path); }
    PhoneSet phone_set() const { return phones_path.empty() ? default_phone_set() : load_phone_set(phones_path); }
};

struct DecoderFlags {
    double beam_width = 1e30;
    int max_active = 0;  // 0 = unlimited
    double word_penalty = 0.0;

    DecoderConfig config() const {
        DecoderConfig cfg;
        cfg.beam_width = beam_width;
        if (max_active > 0) cfg.max_active = max_active;
        cfg.word_insertion_penalty = word_penalty;
        return cfg;
    }
};

inline void add_lexicon_flags(CLI::App* sub, LexiconFlags& f) {
    sub->add_option("--lexicon", f.lexicon_path, "Pronunciation dictionary file (default: builtin Arabic digits)");
    sub->add_option("--phones", f.phones_path, "Phone set file (default: builtin)");
}

inline void add_decoder_flags(CLI::App* sub, DecoderFlags& f) {
    sub->add_option("--beam-width", f.beam_width, "Log-domain beam width (default effectively exact)");
    sub->add_option("--max-active", f.max_active, "Max live emitting nodes per frame, 0 = unlimited");
    sub->add_option("--word-penalty", f.word_penalty, "Log score added per emitted word");
}

inline std::string format_score(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// CLI11 only processes config options installed on the root app, so each
// subcommand carries a plain --config option and this applies the file after
// the parse: flat `key=value` lines map onto the subcommand's long options,
// and values given on the command line always win. Because the parse has
// already happened, required options cannot be satisfied from a config file.
// Returns an error message, empty on success.
inline std::string apply_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return "";
    std::ifstream in(path);
    if (!in) return "cannot open config file: " + path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path + ":" + std::to_string(lineno);
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s[0] == '[') return where + ": config sections are not supported, use flat key=value lines";
        const auto eq = s.find('=');
        if (eq == std::string::npos) return where + ": expected key=value";
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) return where + ": empty key";
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) return where + ": unknown config key '" + key + "' for " + sub->get_name();
        if (opt->count() > 0) continue;  // explicit flags beat config values
        try {
            opt->add_result(value);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            return where + ": " + std::string(e.what());
        }
    }
    return "";
}

}  // namespace detail

// The command-line front end, separated from main() so tests can drive it.
// Returns the process exit code and writes only to the given streams.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Small-vocabulary speech recognition toolkit"};
    app.require_subcommand(1);

    // --- synth-corpus ---
    auto* synth = app.add_subcommand("synth-corpus", "Generate a deterministic synthetic word corpus");
    struct {
        std::string out_dir;
        std::string words;
        int speakers = 6;
        int repetitions = 5;
        std::uint64_t seed = 42;
        int sample_rate = 16000;
        std::string prefix = "S";
        int jobs = 1;
        std::string config_path;
        detail::LexiconFlags lex;
    } sy;
    synth->add_option("--out", sy.out_dir, "Output directory")->required();
    synth->add_option("--words", sy.words, "Comma-separated word labels (default: all builtin digits)");
    synth->add_option("--speakers", sy.speakers, "Number of speakers");
    synth->add_option("--repetitions", sy.repetitions, "Repetitions per speaker and word");
    synth->add_option("--seed", sy.seed, "Corpus seed");
    synth->add_option("--sample-rate", sy.sample_rate, "Sample rate in Hz");
    synth->add_option("--speaker-prefix", sy.prefix, "Speaker id prefix (ids are <prefix>1..<prefix>N)");
    synth->add_option("--jobs", sy.jobs, "Worker threads (1 = serial)");
    detail::add_lexicon_flags(synth, sy.lex);
    synth->add_option("--config", sy.config_path, "Read unset options from an ini file (key=value per line)");

    // --- train ---
    auto* train = app.add_subcommand("train", "Train an acoustic model from a corpus manifest");
    struct {
        std::string manifest;
        std::string model;
        int codebook_size = 256;
        int states_per_phone = 3;
        int max_iters = 20;
        double tol = 1e-4;
        int jobs = 1;
        FrontendConfig fe;
        bool no_deltas = false;
        std::string config_path;
        detail::LexiconFlags lex;
    } tr;
    train->add_option("--manifest", tr.manifest, "Corpus manifest file")->required();
    train->add_option("--model", tr.model, "Output model file")->required();
    train->add_option("--codebook-size", tr.codebook_size, "VQ codebook size (power of two)");
    train->add_option("--states-per-phone", tr.states_per_phone, "Emitting states per phone model");
    train->add_option("--max-iters", tr.max_iters, "Max re-estimation passes");
    train->add_option("--tol", tr.tol, "Relative log-likelihood improvement to stop at");
    train->add_option("--jobs", tr.jobs, "Worker threads (1 = serial)");
    train->add_option("--pre-emphasis", tr.fe.pre_emphasis, "Pre-emphasis coefficient");
    train->add_option("--frame-length-ms", tr.fe.frame_length_ms, "Frame length in ms");
    train->add_option("--frame-shift-ms", tr.fe.frame_shift_ms, "Frame shift in ms");
    train->add_option("--fft-size", tr.fe.fft_size, "FFT size (power of two)");
    train->add_option("--mel-filters", tr.fe.num_mel_filters, "Mel filter count");
    train->add_option("--cepstra", tr.fe.num_cepstra, "Cepstral coefficients kept");
    train->add_flag("--no-deltas", tr.no_deltas, "Skip delta features");
    detail::add_lexicon_flags(train, tr.lex);
    train->add_option("--config", tr.config_path, "Read unset options from an ini file (key=value per line)");

    // --- decode ---
    auto* decode_cmd = app.add_subcommand("decode", "Decode WAV files against a trained model");
    struct {
        std::string model;
        std::string grammar_path;
        std::string grammar_kind = "isolated_word";
        std::vector<std::string> files;
        int jobs = 1;
        std::string config_path;
        detail::LexiconFlags lex;
        detail::DecoderFlags dec;
    } de;
    decode_cmd->add_option("--model", de.model, "Model file")->required();
    decode_cmd->add_option("--grammar", de.grammar_path, "Grammar file (overrides --grammar-kind)");
    decode_cmd->add_option("--grammar-kind", de.grammar_kind, "isolated_word or word_loop over the lexicon")
        ->check(CLI::IsMember({"isolated_word", "word_loop"}));
    decode_cmd->add_option("--jobs", de.jobs, "Worker threads (1 = serial)");
    decode_cmd->add_option("files", de.files, "WAV files to decode")->required()->expected(-1);
    detail::add_lexicon_flags(decode_cmd, de.lex);
    detail::add_decoder_flags(decode_cmd, de.dec);
    decode_cmd->add_option("--config", de.config_path, "Read unset options from an ini file (key=value per line)");

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "Score a model against a labelled manifest");
    struct {
        std::string model;
        std::string manifest;
        std::string tsv;
        int jobs = 1;
        std::string config_path;
        detail::LexiconFlags lex;
        detail::DecoderFlags dec;
    } ev;
    eval_cmd->add_option("--model", ev.model, "Model file")->required();
    eval_cmd->add_option("--manifest", ev.manifest, "Labelled corpus manifest")->required();
    eval_cmd->add_option("--tsv", ev.tsv, "Also write the per-speaker scores to this TSV file");
    eval_cmd->add_option("--jobs", ev.jobs, "Worker threads (1 = serial)");
    detail::add_lexicon_flags(eval_cmd, ev.lex);
    detail::add_decoder_flags(eval_cmd, ev.dec);
    eval_cmd->add_option("--config", ev.config_path, "Read unset options from an ini file (key=value per line)");

    // --- validate-lexicon ---
    auto* val = app.add_subcommand("validate-lexicon", "Check a dictionary against the phonotactic rules");
    detail::LexiconFlags vl;
    detail::add_lexicon_flags(val, vl);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("raqam");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    {
        std::string cfg_err;
        if (*synth) cfg_err = detail::apply_config(synth, sy.config_path);
        else if (*train) cfg_err = detail::apply_config(train, tr.config_path);
        else if (*decode_cmd) cfg_err = detail::apply_config(decode_cmd, de.config_path);
        else if (*eval_cmd) cfg_err = detail::apply_config(eval_cmd, ev.config_path);
        if (!cfg_err.empty()) {
            err << "error: " << cfg_err << '\n';
            return kExitUsage;
        }
    }

    try {
        if (*synth) {
            const Lexicon lexicon = sy.lex.lexicon();
            SynthSpec spec;
            spec.words = sy.words.empty() ? digit_words() : detail::split(sy.words, ',');
            spec.speakers = sy.speakers;
            spec.repetitions = sy.repetitions;
            spec.seed = sy.seed;
            spec.sample_rate_hz = sy.sample_rate;
            spec.speaker_prefix = sy.prefix;
            CorpusManifest manifest = synth_corpus(spec, lexicon, sy.out_dir, sy.jobs);
            save_manifest(manifest, std::filesystem::path(sy.out_dir) / "manifest.tsv");
            err << "wrote " << manifest.entries.size() << " utterances under " << sy.out_dir << '\n';
        } else if (*train) {
            const Lexicon lexicon = tr.lex.lexicon();
            tr.fe.include_deltas = !tr.no_deltas;
            const CorpusManifest manifest = load_manifest(tr.manifest, lexicon);
            auto [model, report] = train_acoustic(manifest, lexicon, tr.fe, tr.codebook_size, tr.max_iters,
                                                  tr.tol, tr.jobs, tr.states_per_phone);
            for (std::size_t i = 0; i < report.log_likelihoods.size(); ++i)
                out << "iter " << (i + 1) << " log-likelihood " << detail::format_score(report.log_likelihoods[i])
                    << '\n';
            out << (report.converged ? "converged" : "stopped") << " after " << report.iterations_run
                << " iterations\n";
            save_model(model, tr.model);
            err << "wrote model " << tr.model << '\n';
        } else if (*decode_cmd) {
            const Lexicon lexicon = de.lex.lexicon();
            const AcousticModel model = load_model(de.model);
            Grammar grammar;
            if (!de.grammar_path.empty()) {
                grammar = load_grammar(de.grammar_path);
            } else {
                grammar.kind = de.grammar_kind == "word_loop" ? Grammar::Kind::word_loop
                                                              : Grammar::Kind::isolated_word;
                grammar.vocabulary = lexicon.words();
            }
            const SearchGraph graph = compile_graph(grammar, lexicon, model);
            const DecoderConfig cfg = de.dec.config();

            struct Result {
                bool ok = false;
                Hypothesis hyp;
                std::string message;
            };
            std::vector<Result> results(de.files.size());
            parallel_for(de.files.size(), de.jobs, [&](std::size_t i) {
                try {
                    const FeatureSequence feats = compute_mfcc(read_wav(de.files[i]), model.frontend);
                    results[i].hyp = decode(quantize(feats, model.codebook), graph, cfg);
                    results[i].ok = true;
                } catch (const Error& e) {
                    results[i].message = e.what();
                }
            });
            bool any_failed = false;
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (results[i].ok) {
                    out << detail::format_score(results[i].hyp.log_score) << '\t';
                    for (std::size_t w = 0; w < results[i].hyp.words.size(); ++w)
                        out << (w ? " " : "") << results[i].hyp.words[w];
                    out << '\n';
                } else {
                    out << "-inf\t\n";
                    err << de.files[i] << ": " << results[i].message << '\n';
                    any_failed = true;
                }
            }
            if (any_failed) return kExitData;
        } else if (*eval_cmd) {
            const Lexicon lexicon = ev.lex.lexicon();
            const AcousticModel model = load_model(ev.model);
            const CorpusManifest manifest = load_manifest(ev.manifest, lexicon);
            const EvalReport report = evaluate_isolated(manifest, model, lexicon, ev.dec.config(), ev.jobs, &err);
            render_table(report, out);
            out << '\n';
            write_tsv(report, out);
            if (!ev.tsv.empty()) {
                std::ofstream tsv(ev.tsv, std::ios::trunc);
                if (!tsv) throw IoError("cannot open for writing: " + ev.tsv);
                write_tsv(report, tsv);
            }
        } else if (*val) {
            const Lexicon lexicon = vl.lexicon();
            const PhoneSet phone_set = vl.phone_set();
            const auto violations = validate_lexicon(lexicon, phone_set);
            for (const auto& v : violations) out << v.word << '\t' << v.rule << '\t' << v.detail << '\n';
            if (!violations.empty()) {
                err << violations.size() << " violation(s)\n";
                return kExitData;
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

}  // namespace raqam
