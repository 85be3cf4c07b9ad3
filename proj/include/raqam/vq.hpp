#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "raqam/errors.hpp"
#include "raqam/frontend.hpp"
#include "raqam/text.hpp"

namespace raqam {

struct Codebook {
    std::vector<std::vector<double>> codewords;

    std::size_t size() const { return codewords.size(); }
    std::size_t dim() const { return codewords.empty() ? 0 : codewords.front().size(); }
};

struct SymbolSequence {
    std::vector<int> symbols;

    std::size_t size() const { return symbols.size(); }
};

// Per-refinement-level distortion trace recorded by lbg_train. Within one
// level (fixed codebook size) the mean distortion is non-increasing across
// k-means iterations.
struct LbgTrace {
    struct Level {
        int k = 0;
        std::vector<double> distortions;  // assignment-time mean squared distance
    };
    std::vector<Level> levels;
};

namespace detail {

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Nearest codeword; ties resolve to the lowest index.
inline int nearest(const std::vector<double>& x, const std::vector<std::vector<double>>& codewords) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < codewords.size(); ++c) {
        const double d = sqdist(x, codewords[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

}  // namespace detail

// Linde-Buzo-Gray codebook training. Starts from the global centroid and
// doubles the codebook by splitting every codeword into c*(1±0.01), running
// k-means to convergence after each split (relative distortion change below
// 1e-5, capped at 50 iterations). Empty cells are reseeded by moving the
// empty codeword next to the highest-distortion cell's centroid; the donor
// keeps its ordinary mean update, so distortion stays monotone per level.
//
// `seed` is reserved for future stochastic initializers; the splitting
// initializer above consumes no randomness.
inline Codebook lbg_train(const std::vector<FeatureSequence>& features, int k, std::uint64_t seed = 0,
                          LbgTrace* trace = nullptr) {
    (void)seed;
    if (k < 1 || (k & (k - 1)) != 0) throw InvalidK("codebook size must be a power of two, got " + std::to_string(k));

    std::vector<const std::vector<double>*> data;
    for (const auto& fs : features)
        for (const auto& fr : fs.frames) data.push_back(&fr);
    if (data.empty()) throw InsufficientData("no frames to train on");
    const std::size_t dim = data.front()->size();
    for (const auto* fr : data)
        if (fr->size() != dim) throw DimensionMismatch("feature frames disagree on dimension");
    if (data.size() < static_cast<std::size_t>(k))
        throw InsufficientData("need at least " + std::to_string(k) + " frames, got " + std::to_string(data.size()));

    const double n_inv = 1.0 / static_cast<double>(data.size());
    std::vector<std::vector<double>> codewords(1, std::vector<double>(dim, 0.0));
    for (const auto* fr : data)
        for (std::size_t d = 0; d < dim; ++d) codewords[0][d] += (*fr)[d];
    for (std::size_t d = 0; d < dim; ++d) codewords[0][d] *= n_inv;

    if (trace) trace->levels.clear();
    std::vector<int> assign(data.size(), 0);

    auto refine = [&](int level_k) {
        LbgTrace::Level level;
        level.k = level_k;
        double prev = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 50; ++iter) {
            // assignment + distortion
            double total = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                assign[i] = detail::nearest(*data[i], codewords);
                total += detail::sqdist(*data[i], codewords[assign[i]]);
            }
            const double mean_dist = total * n_inv;
            level.distortions.push_back(mean_dist);

            // per-cell sums
            std::vector<std::vector<double>> sums(codewords.size(), std::vector<double>(dim, 0.0));
            std::vector<std::size_t> counts(codewords.size(), 0);
            std::vector<double> cell_dist(codewords.size(), 0.0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                const int c = assign[i];
                ++counts[c];
                cell_dist[c] += detail::sqdist(*data[i], codewords[c]);
                for (std::size_t d = 0; d < dim; ++d) sums[c][d] += (*data[i])[d];
            }

            // update non-empty cells to their means
            for (std::size_t c = 0; c < codewords.size(); ++c)
                if (counts[c] > 0)
                    for (std::size_t d = 0; d < dim; ++d) codewords[c][d] = sums[c][d] / counts[c];

            // reseed empty cells near the worst cell's centroid
            for (std::size_t c = 0; c < codewords.size(); ++c) {
                if (counts[c] != 0) continue;
                std::size_t donor = codewords.size();
                double worst = -1.0;
                for (std::size_t o = 0; o < codewords.size(); ++o) {
                    if (counts[o] >= 2 && cell_dist[o] > worst) {
                        worst = cell_dist[o];
                        donor = o;
                    }
                }
                if (donor == codewords.size()) break;  // nothing to split off
                for (std::size_t d = 0; d < dim; ++d) codewords[c][d] = codewords[donor][d] * 1.01;
            }

            const bool converged = prev < std::numeric_limits<double>::infinity() &&
                                   std::abs(prev - mean_dist) <= 1e-5 * std::max(prev, 1e-300);
            prev = mean_dist;
            if (converged) break;
        }
        if (trace) trace->levels.push_back(std::move(level));
    };

    refine(1);
    while (static_cast<int>(codewords.size()) < k) {
        std::vector<std::vector<double>> split;
        split.reserve(codewords.size() * 2);
        for (const auto& c : codewords) {
            std::vector<double> up(dim), down(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                up[d] = c[d] * 1.01;
                down[d] = c[d] * 0.99;
            }
            split.push_back(std::move(up));
            split.push_back(std::move(down));
        }
        codewords = std::move(split);
        refine(static_cast<int>(codewords.size()));
    }

    Codebook cb;
    cb.codewords = std::move(codewords);
    return cb;
}

// Maps every frame to its nearest codeword index (ties to the lowest index).
inline SymbolSequence quantize(const FeatureSequence& features, const Codebook& cb) {
    if (cb.size() == 0) throw ConfigInvalid("empty codebook");
    SymbolSequence out;
    out.symbols.reserve(features.frames.size());
    for (const auto& fr : features.frames) {
        if (fr.size() != cb.dim()) throw DimensionMismatch("frame dim != codebook dim");
        out.symbols.push_back(detail::nearest(fr, cb.codewords));
    }
    return out;
}

// Text format:
//   CODEBOOK v1 <K> <D>
//   <D reals>            (one codeword per line)
// Values are written with enough digits to round-trip exactly.
inline void save_codebook(const Codebook& cb, std::ostream& out) {
    out << "CODEBOOK v1 " << cb.size() << ' ' << cb.dim() << '\n';
    for (const auto& c : cb.codewords) {
        for (std::size_t d = 0; d < c.size(); ++d) out << (d ? " " : "") << detail::format_double(c[d]);
        out << '\n';
    }
}

inline void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    save_codebook(cb, out);
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

inline Codebook load_codebook(std::istream& in) {
    std::string magic, version;
    std::size_t k = 0, dim = 0;
    if (!(in >> magic >> version >> k >> dim) || magic != "CODEBOOK" || version != "v1")
        throw ParseError("bad codebook header");
    if (k == 0 || dim == 0) throw ParseError("codebook must be non-empty");
    Codebook cb;
    cb.codewords.assign(k, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < dim; ++d)
            if (!(in >> cb.codewords[c][d]))
                throw ParseError("truncated codebook at codeword " + std::to_string(c));
    return cb;
}

inline Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open codebook: " + path.string());
    return load_codebook(in);
}

}  // namespace raqam
