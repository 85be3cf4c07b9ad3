#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "raqam/corpus.hpp"
#include "raqam/errors.hpp"
#include "raqam/frontend.hpp"
#include "raqam/hmm.hpp"
#include "raqam/linguist.hpp"
#include "raqam/parallel.hpp"
#include "raqam/vq.hpp"

namespace raqam {

// A trained recognizer: the front-end configuration it was trained with, the
// VQ codebook, and one Bakis HMM per phone. Keeping the front end inside the
// model file is what guarantees decode-time features match training.
struct AcousticModel {
    FrontendConfig frontend;
    Codebook codebook;
    int states_per_phone = 3;
    std::map<std::string, DiscreteHmm> phones;

    int alphabet_size() const {
        return phones.empty() ? static_cast<int>(codebook.size()) : phones.begin()->second.alphabet_size;
    }

    const DiscreteHmm& phone(const std::string& label) const {
        auto it = phones.find(label);
        if (it == phones.end()) throw UnknownPhone("no model for phone: " + label);
        return it->second;
    }
};

// All phones as flat-start Bakis models (uniform emissions, 0.5 stay/advance).
inline AcousticModel flat_start(const std::vector<std::string>& phone_labels, int alphabet_size,
                                int states_per_phone = 3) {
    if (phone_labels.empty()) throw ConfigInvalid("flat start needs at least one phone");
    if (states_per_phone < 1) throw ConfigInvalid("states_per_phone must be >= 1");
    AcousticModel m;
    m.states_per_phone = states_per_phone;
    for (const auto& p : phone_labels) m.phones[p] = flat_start_hmm(states_per_phone, alphabet_size);
    return m;
}

// The phone string an utterance is trained against: the words' pronunciations
// concatenated, wrapped in silence at both ends (no inter-word silence).
inline std::vector<std::string> transcript_phones(const Lexicon& lexicon,
                                                  const std::vector<std::string>& transcript,
                                                  bool wrap_sil = true) {
    std::vector<std::string> out;
    if (wrap_sil) out.push_back(kSilPhone);
    for (const auto& w : transcript) {
        const auto& e = lexicon.at(w);
        out.insert(out.end(), e.phones.begin(), e.phones.end());
    }
    if (wrap_sil) out.push_back(kSilPhone);
    return out;
}

struct TrainingUtterance {
    SymbolSequence symbols;
    std::vector<std::string> phones;
};

namespace detail {

struct PhoneAccum {
    std::vector<double> pi;
    std::vector<double> self_c, fwd_c, exit_c;
    std::vector<std::vector<double>> emis;

    explicit PhoneAccum(int S, int K)
        : pi(S, 0.0), self_c(S, 0.0), fwd_c(S, 0.0), exit_c(S, 0.0), emis(S, std::vector<double>(K, 0.0)) {}
};

}  // namespace detail

// One embedded re-estimation pass: for every utterance the phone models are
// chained per its transcript, posteriors are collected with the scaled
// forward/backward recursions, and counts are pooled per phone across all
// instances. Returns the updated model and the total log-likelihood of the
// data under the *input* model. Emission rows are re-estimated with additive
// smoothing (count + 1e-8) / (total + K*1e-8); a state with no occupancy at
// all keeps its previous parameters.
inline std::pair<AcousticModel, double> baum_welch_step(const AcousticModel& model,
                                                        const std::vector<TrainingUtterance>& utterances) {
    if (utterances.empty()) throw InsufficientData("no training utterances");
    const int K = model.alphabet_size();

    std::vector<std::string> labels;
    std::unordered_map<std::string, int> index;
    std::vector<detail::PhoneAccum> acc;
    for (const auto& [label, hmm] : model.phones) {
        index[label] = static_cast<int>(labels.size());
        labels.push_back(label);
        acc.emplace_back(hmm.num_states, K);
    }

    for (const auto& [label, hmm] : model.phones)
        if (!hmm.is_left_to_right())
            throw Error("embedded re-estimation expects Bakis phone models; " + label + " is not");

    double total_ll = 0.0;
    for (const auto& utt : utterances) {
        if (utt.phones.empty()) throw Error("utterance without phones");
        std::vector<const DiscreteHmm*> parts;
        parts.reserve(utt.phones.size());
        for (const auto& p : utt.phones) parts.push_back(&model.phone(p));
        const DiscreteHmm big = concat_hmms(parts);

        const ForwardResult f = forward(big, utt.symbols);
        if (!(f.log_likelihood > -std::numeric_limits<double>::infinity()))
            throw Error("utterance impossible under current model (zero forward mass)");
        total_ll += f.log_likelihood;
        const auto beta = backward(big, utt.symbols, f.scales);
        const std::size_t T = utt.symbols.size();

        // global state -> (phone accumulator, local state)
        std::vector<std::pair<int, int>> where;
        where.reserve(static_cast<std::size_t>(big.num_states));
        std::vector<int> part_end;  // exclusive global end of each part
        {
            int base = 0;
            for (std::size_t c = 0; c < parts.size(); ++c) {
                const int S = parts[c]->num_states;
                for (int s = 0; s < S; ++s) where.emplace_back(index[utt.phones[c]], s);
                base += S;
                part_end.push_back(base);
            }
        }

        // occupancy
        for (std::size_t t = 0; t < T; ++t) {
            for (int i = 0; i < big.num_states; ++i) {
                const double g = f.alpha[t][i] * beta[t][i] * f.scales[t];
                if (g == 0.0) continue;
                auto [p, s] = where[i];
                acc[p].emis[s][utt.symbols.symbols[t]] += g;
                if (t == 0) acc[p].pi[s] += g;
            }
        }

        // transition counts; cross-part arcs count as exit mass of the source phone
        for (std::size_t t = 0; t + 1 < T; ++t) {
            const int o_next = utt.symbols.symbols[t + 1];
            std::size_t c = 0;
            for (int i = 0; i < big.num_states; ++i) {
                while (i >= part_end[c]) ++c;
                const double a_i = f.alpha[t][i];
                if (a_i == 0.0) continue;
                auto [p, s] = where[i];
                const double self_a = big.trans[i][i];
                if (self_a > 0.0)
                    acc[p].self_c[s] += a_i * self_a * big.emis[i][o_next] * beta[t + 1][i];
                if (i + 1 < part_end[c]) {
                    const double fwd_a = big.trans[i][i + 1];
                    if (fwd_a > 0.0)
                        acc[p].fwd_c[s] += a_i * fwd_a * big.emis[i + 1][o_next] * beta[t + 1][i + 1];
                }
                if (c + 1 < parts.size()) {
                    for (int j = part_end[c]; j < part_end[c + 1]; ++j) {
                        const double a = big.trans[i][j];
                        if (a > 0.0) acc[p].exit_c[s] += a_i * a * big.emis[j][o_next] * beta[t + 1][j];
                    }
                }
            }
        }
    }

    // M-step
    AcousticModel out = model;
    const double eps = 1e-8;
    for (const auto& [label, _] : model.phones) {
        const int p = index[label];
        DiscreteHmm& h = out.phones[label];
        const int S = h.num_states;
        double pi_total = 0.0;
        for (int s = 0; s < S; ++s) pi_total += acc[p].pi[s];
        if (pi_total > 0.0)
            for (int s = 0; s < S; ++s) h.pi[s] = acc[p].pi[s] / pi_total;
        for (int s = 0; s < S; ++s) {
            const double denom = acc[p].self_c[s] + acc[p].fwd_c[s] + acc[p].exit_c[s];
            if (denom > 0.0) {
                h.trans[s][s] = acc[p].self_c[s] / denom;
                if (s + 1 < S) h.trans[s][s + 1] = acc[p].fwd_c[s] / denom;
                h.exit[s] = acc[p].exit_c[s] / denom;
            }
            double occ = 0.0;
            for (int k = 0; k < K; ++k) occ += acc[p].emis[s][k];
            if (occ > 0.0)
                for (int k = 0; k < K; ++k) h.emis[s][k] = (acc[p].emis[s][k] + eps) / (occ + K * eps);
        }
    }
    return {std::move(out), total_ll};
}

struct TrainReport {
    std::vector<double> log_likelihoods;  // one per pass, model *before* that pass
    int iterations_run = 0;
    bool converged = false;
};

// Full training pipeline: features -> codebook -> symbols -> flat start ->
// embedded re-estimation until the relative likelihood improvement drops
// below tol or max_iters passes run. The model's phone inventory covers the
// whole lexicon plus silence, so graphs over any lexicon word always compile.
inline std::pair<AcousticModel, TrainReport> train_acoustic(const CorpusManifest& manifest, const Lexicon& lexicon,
                                                            const FrontendConfig& cfg, int codebook_size,
                                                            int max_iters = 20, double tol = 1e-4, int jobs = 1,
                                                            int states_per_phone = 3) {
    if (manifest.entries.empty()) throw InsufficientData("manifest has no entries");
    if (max_iters < 1) throw ConfigInvalid("max_iters must be >= 1");
    if (tol < 0.0) throw ConfigInvalid("tol must be >= 0");

    std::vector<FeatureSequence> feats(manifest.entries.size());
    parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
        feats[i] = compute_mfcc(read_wav(manifest.resolve(manifest.entries[i])), cfg);
    });

    Codebook cb = lbg_train(feats, codebook_size);

    std::vector<TrainingUtterance> utts(manifest.entries.size());
    parallel_for(manifest.entries.size(), jobs, [&](std::size_t i) {
        utts[i].symbols = quantize(feats[i], cb);
        utts[i].phones = transcript_phones(lexicon, manifest.entries[i].transcript);
    });

    std::set<std::string> inventory;
    inventory.insert(kSilPhone);
    for (const auto& [w, e] : lexicon.entries) inventory.insert(e.phones.begin(), e.phones.end());

    AcousticModel model = flat_start(std::vector<std::string>(inventory.begin(), inventory.end()),
                                     codebook_size, states_per_phone);
    model.frontend = cfg;
    model.codebook = std::move(cb);

    TrainReport report;
    for (int it = 0; it < max_iters; ++it) {
        auto [next, ll] = baum_welch_step(model, utts);
        model = std::move(next);
        report.log_likelihoods.push_back(ll);
        report.iterations_run = it + 1;
        if (it > 0) {
            const double prev = report.log_likelihoods[it - 1];
            const double rel = (ll - prev) / std::max(std::abs(prev), 1e-12);
            if (rel < tol) {
                report.converged = true;
                break;
            }
        }
    }
    return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------
//
//   AAM v1
//   FRONTEND <pre> <len_ms> <shift_ms> <fft> <mels> <ceps> <deltas>
//   CODEBOOK v1 <K> <D> ...
//   STATES_PER_PHONE <S>
//   PHONES <count>
//   PHONE <label> <S> <K>
//   PI <S values>
//   A  <S internal values + exit>     (one line per state)
//   B  <K values>                     (one line per state)

inline void save_model(const AcousticModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const auto d = [](double v) { return detail::format_double(v); };
    out << "AAM v1\n";
    out << "FRONTEND " << d(m.frontend.pre_emphasis) << ' ' << d(m.frontend.frame_length_ms) << ' '
        << d(m.frontend.frame_shift_ms) << ' ' << m.frontend.fft_size << ' ' << m.frontend.num_mel_filters << ' '
        << m.frontend.num_cepstra << ' ' << (m.frontend.include_deltas ? 1 : 0) << '\n';
    save_codebook(m.codebook, out);
    out << "STATES_PER_PHONE " << m.states_per_phone << '\n';
    out << "PHONES " << m.phones.size() << '\n';
    for (const auto& [label, h] : m.phones) {
        out << "PHONE " << label << ' ' << h.num_states << ' ' << h.alphabet_size << '\n';
        out << "PI";
        for (double v : h.pi) out << ' ' << d(v);
        out << '\n';
        for (int i = 0; i < h.num_states; ++i) {
            out << 'A';
            for (double v : h.trans[i]) out << ' ' << d(v);
            out << ' ' << d(h.exit[i]) << '\n';
        }
        for (int i = 0; i < h.num_states; ++i) {
            out << 'B';
            for (double v : h.emis[i]) out << ' ' << d(v);
            out << '\n';
        }
    }
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

inline AcousticModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open model: " + path.string());
    std::string tok, version;
    if (!(in >> tok >> version) || tok != "AAM" || version != "v1") throw ParseError("bad model header: " + path.string());

    AcousticModel m;
    int deltas = 0;
    if (!(in >> tok) || tok != "FRONTEND") throw ParseError("model missing FRONTEND: " + path.string());
    if (!(in >> m.frontend.pre_emphasis >> m.frontend.frame_length_ms >> m.frontend.frame_shift_ms >>
          m.frontend.fft_size >> m.frontend.num_mel_filters >> m.frontend.num_cepstra >> deltas))
        throw ParseError("bad FRONTEND line: " + path.string());
    m.frontend.include_deltas = deltas != 0;

    m.codebook = load_codebook(in);

    if (!(in >> tok >> m.states_per_phone) || tok != "STATES_PER_PHONE")
        throw ParseError("model missing STATES_PER_PHONE: " + path.string());
    std::size_t phone_count = 0;
    if (!(in >> tok >> phone_count) || tok != "PHONES") throw ParseError("model missing PHONES: " + path.string());

    for (std::size_t n = 0; n < phone_count; ++n) {
        std::string label;
        int S = 0, K = 0;
        if (!(in >> tok >> label >> S >> K) || tok != "PHONE")
            throw ParseError("bad PHONE block " + std::to_string(n) + ": " + path.string());
        if (S < 1 || K < 1) throw ParseError("bad PHONE dimensions for " + label + ": " + path.string());
        DiscreteHmm h;
        h.num_states = S;
        h.alphabet_size = K;
        h.pi.assign(S, 0.0);
        h.trans.assign(S, std::vector<double>(S, 0.0));
        h.exit.assign(S, 0.0);
        h.emis.assign(S, std::vector<double>(K, 0.0));
        if (!(in >> tok) || tok != "PI") throw ParseError("missing PI for " + label + ": " + path.string());
        for (int i = 0; i < S; ++i)
            if (!(in >> h.pi[i])) throw ParseError("truncated PI for " + label + ": " + path.string());
        for (int i = 0; i < S; ++i) {
            if (!(in >> tok) || tok != "A") throw ParseError("missing A row for " + label + ": " + path.string());
            for (int j = 0; j < S; ++j)
                if (!(in >> h.trans[i][j])) throw ParseError("truncated A row for " + label + ": " + path.string());
            if (!(in >> h.exit[i])) throw ParseError("truncated A row for " + label + ": " + path.string());
        }
        for (int i = 0; i < S; ++i) {
            if (!(in >> tok) || tok != "B") throw ParseError("missing B row for " + label + ": " + path.string());
            for (int k = 0; k < K; ++k)
                if (!(in >> h.emis[i][k])) throw ParseError("truncated B row for " + label + ": " + path.string());
        }
        h.validate(1e-6);
        if (m.phones.count(label)) throw ParseError("duplicate phone " + label + ": " + path.string());
        m.phones[label] = std::move(h);
    }
    if (m.phones.empty()) throw ParseError("model has no phones: " + path.string());
    return m;
}

}  // namespace raqam
