#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "raqam/errors.hpp"
#include "raqam/vq.hpp"

namespace raqam {

// Discrete-emission HMM over VQ symbols.
//
// Transitions are split into an S x S internal matrix plus a per-state `exit`
// mass (the probability of leaving the model after state i), with the
// invariant row_sum(trans[i]) + exit[i] == 1. Keeping exit explicit is what
// lets models be chained: concatenation turns exit mass into arcs that enter
// the next model's initial distribution.
//
// forward() computes the *prefix* likelihood: the probability of emitting the
// observation while staying inside the model (exit mass is not charged at the
// end). For a model with zero exit mass everywhere, these probabilities over
// all sequences of a fixed length sum to 1.
struct DiscreteHmm {
    int num_states = 0;
    int alphabet_size = 0;
    std::vector<double> pi;                     // S
    std::vector<std::vector<double>> trans;     // S x S, internal mass
    std::vector<double> exit;                   // S, leaving mass
    std::vector<std::vector<double>> emis;      // S x K

    bool operator==(const DiscreteHmm&) const = default;

    // Structural + stochasticity checks; throws Error on the first problem.
    void validate(double tol = 1e-9) const {
        const std::size_t S = static_cast<std::size_t>(num_states);
        const std::size_t K = static_cast<std::size_t>(alphabet_size);
        if (S == 0 || K == 0) throw Error("hmm: empty state space or alphabet");
        if (pi.size() != S || trans.size() != S || exit.size() != S || emis.size() != S)
            throw Error("hmm: shape mismatch");
        double pi_sum = 0.0;
        for (double p : pi) {
            if (p < 0.0) throw Error("hmm: negative pi entry");
            pi_sum += p;
        }
        if (std::abs(pi_sum - 1.0) > tol) throw Error("hmm: pi does not sum to 1");
        for (std::size_t i = 0; i < S; ++i) {
            if (trans[i].size() != S) throw Error("hmm: transition row size");
            if (exit[i] < 0.0) throw Error("hmm: negative exit mass");
            double row = exit[i];
            for (double a : trans[i]) {
                if (a < 0.0) throw Error("hmm: negative transition");
                row += a;
            }
            if (std::abs(row - 1.0) > tol)
                throw Error("hmm: transition row " + std::to_string(i) + " + exit does not sum to 1");
            if (emis[i].size() != K) throw Error("hmm: emission row size");
            double b = 0.0;
            for (double e : emis[i]) {
                if (e < 0.0) throw Error("hmm: negative emission");
                b += e;
            }
            if (std::abs(b - 1.0) > tol) throw Error("hmm: emission row " + std::to_string(i) + " does not sum to 1");
        }
    }

    // Bakis zero-pattern: transitions only self or one step forward.
    bool is_left_to_right() const {
        for (int i = 0; i < num_states; ++i)
            for (int j = 0; j < num_states; ++j)
                if (j != i && j != i + 1 && trans[i][j] != 0.0) return false;
        return true;
    }
};

// Uninformed Bakis model: entry in state 0, each state splits its mass evenly
// between staying and advancing (the last state's forward half is exit mass),
// uniform emissions.
inline DiscreteHmm flat_start_hmm(int num_states, int alphabet_size) {
    if (num_states < 1 || alphabet_size < 1) throw ConfigInvalid("flat start needs at least one state and symbol");
    DiscreteHmm h;
    h.num_states = num_states;
    h.alphabet_size = alphabet_size;
    h.pi.assign(num_states, 0.0);
    h.pi[0] = 1.0;
    h.trans.assign(num_states, std::vector<double>(num_states, 0.0));
    h.exit.assign(num_states, 0.0);
    for (int i = 0; i < num_states; ++i) {
        h.trans[i][i] = 0.5;
        if (i + 1 < num_states)
            h.trans[i][i + 1] = 0.5;
        else
            h.exit[i] = 0.5;
    }
    h.emis.assign(num_states, std::vector<double>(alphabet_size, 1.0 / alphabet_size));
    return h;
}

struct ForwardResult {
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> alpha;  // T x S, scaled so each row sums to 1
    std::vector<double> scales;              // per-frame normalizer mass
};

namespace detail {

inline void check_observation(const DiscreteHmm& h, const SymbolSequence& obs) {
    if (obs.symbols.empty()) throw EmptyObservation("empty observation sequence");
    for (int s : obs.symbols)
        if (s < 0 || s >= h.alphabet_size)
            throw SymbolOutOfRange("symbol " + std::to_string(s) + " outside alphabet of size " +
                                   std::to_string(h.alphabet_size));
}

}  // namespace detail

// Scaled forward pass. scales[t] is the unnormalized probability mass at
// frame t; log-likelihood is the sum of their logs. If the mass hits exactly
// zero the sequence is impossible: log-likelihood is -inf and the remaining
// rows stay zero.
inline ForwardResult forward(const DiscreteHmm& h, const SymbolSequence& obs) {
    detail::check_observation(h, obs);
    const int S = h.num_states;
    const std::size_t T = obs.symbols.size();
    ForwardResult r;
    r.alpha.assign(T, std::vector<double>(S, 0.0));
    r.scales.assign(T, 0.0);

    double mass = 0.0;
    for (int i = 0; i < S; ++i) {
        r.alpha[0][i] = h.pi[i] * h.emis[i][obs.symbols[0]];
        mass += r.alpha[0][i];
    }
    r.scales[0] = mass;
    if (mass == 0.0) return r;  // impossible from the first frame
    for (int i = 0; i < S; ++i) r.alpha[0][i] /= mass;

    for (std::size_t t = 1; t < T; ++t) {
        mass = 0.0;
        for (int j = 0; j < S; ++j) {
            double acc = 0.0;
            for (int i = 0; i < S; ++i) acc += r.alpha[t - 1][i] * h.trans[i][j];
            const double a = acc * h.emis[j][obs.symbols[t]];
            r.alpha[t][j] = a;
            mass += a;
        }
        r.scales[t] = mass;
        if (mass == 0.0) return r;
        for (int j = 0; j < S; ++j) r.alpha[t][j] /= mass;
    }

    double ll = 0.0;
    for (double s : r.scales) ll += std::log(s);
    r.log_likelihood = ll;
    return r;
}

// Scaled backward pass matching forward()'s scales: beta_hat[T-1][i] =
// 1/scales[T-1] and each earlier row divides by its own frame's scale. With
// this convention gamma[t][i] = alpha_hat * beta_hat * scales[t] and
// xi needs no extra correction. Requires every scale positive.
inline std::vector<std::vector<double>> backward(const DiscreteHmm& h, const SymbolSequence& obs,
                                                 const std::vector<double>& scales) {
    detail::check_observation(h, obs);
    const int S = h.num_states;
    const std::size_t T = obs.symbols.size();
    if (scales.size() != T) throw DimensionMismatch("scales length != observation length");
    for (double s : scales)
        if (!(s > 0.0)) throw Error("backward: nonpositive scale (impossible observation)");

    std::vector<std::vector<double>> beta(T, std::vector<double>(S, 0.0));
    for (int i = 0; i < S; ++i) beta[T - 1][i] = 1.0 / scales[T - 1];
    for (std::size_t t = T - 1; t-- > 0;) {
        for (int i = 0; i < S; ++i) {
            double acc = 0.0;
            for (int j = 0; j < S; ++j) acc += h.trans[i][j] * h.emis[j][obs.symbols[t + 1]] * beta[t + 1][j];
            beta[t][i] = acc / scales[t];
        }
    }
    return beta;
}

// Chains models left to right: each part's exit mass becomes transitions into
// the next part's initial distribution; the result's own exit is the last
// part's. All parts must share one alphabet.
inline DiscreteHmm concat_hmms(const std::vector<const DiscreteHmm*>& parts) {
    if (parts.empty()) throw EmptyList("concat of zero models");
    const int K = parts[0]->alphabet_size;
    int S_total = 0;
    for (const auto* p : parts) {
        if (p->alphabet_size != K) throw AlphabetMismatch("concat parts disagree on alphabet size");
        S_total += p->num_states;
    }

    DiscreteHmm out;
    out.num_states = S_total;
    out.alphabet_size = K;
    out.pi.assign(S_total, 0.0);
    out.trans.assign(S_total, std::vector<double>(S_total, 0.0));
    out.exit.assign(S_total, 0.0);
    out.emis.assign(S_total, std::vector<double>(K, 0.0));

    int base = 0;
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const DiscreteHmm& p = *parts[c];
        const int S = p.num_states;
        if (c == 0)
            for (int i = 0; i < S; ++i) out.pi[i] = p.pi[i];
        for (int i = 0; i < S; ++i) {
            out.emis[base + i] = p.emis[i];
            for (int j = 0; j < S; ++j) out.trans[base + i][base + j] = p.trans[i][j];
            if (p.exit[i] == 0.0) continue;
            if (c + 1 < parts.size()) {
                const DiscreteHmm& q = *parts[c + 1];
                for (int j = 0; j < q.num_states; ++j)
                    out.trans[base + i][base + S + j] = p.exit[i] * q.pi[j];
            } else {
                out.exit[base + i] = p.exit[i];
            }
        }
        base += S;
    }
    return out;
}

inline DiscreteHmm concat_hmms(const std::vector<DiscreteHmm>& parts) {
    std::vector<const DiscreteHmm*> ptrs;
    ptrs.reserve(parts.size());
    for (const auto& p : parts) ptrs.push_back(&p);
    return concat_hmms(ptrs);
}

}  // namespace raqam
