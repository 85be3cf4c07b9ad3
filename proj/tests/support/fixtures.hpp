#pragma once

// Shared test fixtures: a self-cleaning temp directory, a hand-built
// two-word recognizer whose path scores are computable by hand, and one
// lazily-trained mini model for the tests that need a real end-to-end model
// without paying for training in every test case.

#include <stdexcept>
#include <stdlib.h>

#include <filesystem>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <raqam/acoustic.hpp>
#include <raqam/corpus.hpp>
#include <raqam/hmm.hpp>
#include <raqam/linguist.hpp>

namespace fixtures {

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "raqam-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        if (!path_.empty()) {
            std::error_code ec;
            std::filesystem::remove_all(path_, ec);
        }
    }
    TempDir(TempDir&& other) noexcept : path_(std::exchange(other.path_, {})) {}
    TempDir& operator=(TempDir&& other) noexcept {
        std::swap(path_, other.path_);
        return *this;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline raqam::DiscreteHmm make_hmm(std::vector<double> pi, std::vector<std::vector<double>> trans,
                                   std::vector<double> exit, std::vector<std::vector<double>> emis) {
    raqam::DiscreteHmm h;
    h.num_states = static_cast<int>(pi.size());
    h.alphabet_size = static_cast<int>(emis.at(0).size());
    h.pi = std::move(pi);
    h.trans = std::move(trans);
    h.exit = std::move(exit);
    h.emis = std::move(emis);
    return h;
}

// Bakis phone with 0.5 stay/advance splits whose state s puts mass 0.85 on
// peaks[s] and 0.05 on each of the three remaining symbols (K = 4).
inline raqam::DiscreteHmm peaked_phone(std::initializer_list<int> peaks) {
    const int S = static_cast<int>(peaks.size());
    const int K = 4;
    raqam::DiscreteHmm h;
    h.num_states = S;
    h.alphabet_size = K;
    h.pi.assign(S, 0.0);
    h.pi[0] = 1.0;
    h.trans.assign(S, std::vector<double>(S, 0.0));
    h.exit.assign(S, 0.0);
    for (int i = 0; i < S; ++i) {
        h.trans[i][i] = 0.5;
        if (i + 1 < S)
            h.trans[i][i + 1] = 0.5;
        else
            h.exit[i] = 0.5;
    }
    int s = 0;
    for (int peak : peaks) {
        std::vector<double> row(K, 0.05);
        row[peak] = 0.85;
        h.emis.push_back(std::move(row));
        ++s;
    }
    return h;
}

// UNO = [PA] (peaks 0,1), DUE = [PB] (peaks 2,3) over a 4-symbol alphabet.
inline raqam::Lexicon toy_lexicon() {
    raqam::Lexicon lex;
    lex.entries["UNO"] = {{"PA"}, {}};
    lex.entries["DUE"] = {{"PB"}, {}};
    return lex;
}

inline raqam::AcousticModel toy_model(bool with_sil = false) {
    raqam::AcousticModel m;
    m.states_per_phone = 2;
    m.phones["PA"] = peaked_phone({0, 1});
    m.phones["PB"] = peaked_phone({2, 3});
    if (with_sil) {
        raqam::DiscreteHmm sil;
        sil.num_states = 1;
        sil.alphabet_size = 4;
        sil.pi = {1.0};
        sil.trans = {{0.5}};
        sil.exit = {0.5};
        sil.emis = {{0.25, 0.25, 0.25, 0.25}};
        m.phones[raqam::kSilPhone] = sil;
    }
    for (int k = 0; k < 4; ++k) m.codebook.codewords.push_back({static_cast<double>(k)});
    return m;
}

// One real trained model over three digits, built on first use and shared by
// every test that needs it (training it takes a couple of seconds).
struct TrainedFixture {
    TempDir dir;
    raqam::Lexicon lexicon;
    raqam::CorpusManifest manifest;  // the training corpus, 3 words x 2 speakers x 2 reps
    raqam::AcousticModel model;
    raqam::TrainReport report;
};

inline const TrainedFixture& trained_fixture() {
    static const TrainedFixture fixture = [] {
        TrainedFixture f;
        f.lexicon = raqam::default_lexicon();
        raqam::SynthSpec spec;
        spec.words = {"WAHID", "ITHNAYN", "SIFR"};
        spec.speakers = 2;
        spec.repetitions = 2;
        spec.seed = 7;
        f.manifest = raqam::synth_corpus(spec, f.lexicon, f.dir.path() / "corpus", 2);
        raqam::save_manifest(f.manifest, f.dir.path() / "corpus" / "manifest.tsv");
        raqam::FrontendConfig fe;
        auto [model, report] = raqam::train_acoustic(f.manifest, f.lexicon, fe, 16, 8, 1e-4, 2);
        f.model = std::move(model);
        f.report = std::move(report);
        return f;
    }();
    return fixture;
}

}  // namespace fixtures
