#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "tempclr/align.hpp"
#include "tempclr/negatives.hpp"
#include "tempclr/seqcore.hpp"

namespace tempclr {

struct LossConfig {
    double tau = 1.0;
    double w_unit = 0.3;
    double w_seq = 0.7;
    bool normalize_score = true;
    Measure measure = Measure::dtw;

    void validate() const {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("LossConfig: tau must be > 0");
        if (w_unit < 0.0 || w_seq < 0.0) throw std::invalid_argument("LossConfig: weights must be >= 0");
        if (!(w_unit + w_seq > 0.0)) throw std::invalid_argument("LossConfig: weights must not both be 0");
    }
};

// InfoNCE over scores[0] (positive) against scores[1..]. `grad` holds
// dL/dscore_c = (softmax_c - [c == 0]) / tau.
struct InfoNceResult {
    double loss = 0.0;
    std::vector<double> grad;
};

inline InfoNceResult infonce(std::span<const double> scores, double tau) {
    if (scores.empty()) throw std::invalid_argument("infonce: no scores");
    if (!(tau > 0.0)) throw std::invalid_argument("infonce: tau must be > 0");
    for (double s : scores) {
        if (!std::isfinite(s)) throw NumericalError("infonce: non-finite score");
    }
    const double peak = *std::max_element(scores.begin(), scores.end()) / tau;
    double sum = 0.0;
    std::vector<double> w(scores.size());
    for (std::size_t c = 0; c < scores.size(); ++c) {
        w[c] = std::exp(scores[c] / tau - peak);
        sum += w[c];
    }
    InfoNceResult r;
    r.loss = std::max(0.0, peak + std::log(sum) - scores[0] / tau);
    r.grad.resize(scores.size());
    for (std::size_t c = 0; c < scores.size(); ++c) r.grad[c] = (w[c] / sum - (c == 0 ? 1.0 : 0.0)) / tau;
    return r;
}

inline double unit_infonce(double pos, std::span<const double> negs, double tau) {
    std::vector<double> scores{pos};
    scores.insert(scores.end(), negs.begin(), negs.end());
    return infonce(scores, tau).loss;
}

// One gradient entry with respect to a similarity S_c(i, j) of candidate c
// (c = 0 is the positive).
struct SimilarityGradEntry {
    std::size_t candidate = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    double value = 0.0;
};

struct SeqLossResult {
    double loss = 0.0;
    bool skipped = false;                     // no negatives: loss 0
    std::vector<AlignmentResult> alignments;  // [0] = positive
    std::vector<double> scores;
    std::vector<double> score_grad;  // dL/dscore_c
};

// Sequence-level InfoNCE from per-candidate similarity matrices
// (similarities[0] is the positive pair).
inline SeqLossResult seq_infonce_from_similarity(std::span<const Matrix> similarities, const LossConfig& cfg) {
    cfg.validate();
    if (similarities.empty()) throw std::invalid_argument("seq_infonce: no positive");
    SeqLossResult r;
    for (const auto& s : similarities) {
        r.alignments.push_back(align_similarity(s, cfg.measure, cfg.normalize_score));
        r.scores.push_back(r.alignments.back().score);
    }
    if (similarities.size() == 1) {
        r.skipped = true;
        r.score_grad.assign(1, 0.0);
        return r;
    }
    auto nce = infonce(r.scores, cfg.tau);
    r.loss = nce.loss;
    r.score_grad = std::move(nce.grad);
    return r;
}

// Gradient with every candidate's optimal path held fixed: each path entry
// receives dL/dscore_c, divided by the path length when scores are means.
inline std::vector<SimilarityGradEntry> similarity_gradient(const SeqLossResult& r, bool normalize_score) {
    std::vector<SimilarityGradEntry> out;
    if (r.skipped) return out;
    for (std::size_t c = 0; c < r.alignments.size(); ++c) {
        const auto& path = r.alignments[c].path;
        const double scale = normalize_score ? 1.0 / static_cast<double>(path.size()) : 1.0;
        for (const auto& cell : path) out.push_back({c, cell.i, cell.j, r.score_grad[c] * scale});
    }
    return out;
}

inline std::vector<Matrix> candidate_similarities(const SegmentedPair& pair, std::span<const NegativePermutation> negs,
                                                  std::span<const SegmentedPair> corpus) {
    std::vector<Matrix> sims;
    sims.push_back(similarity_matrix(anchor_sequence(pair, positive_view(pair)), candidate_sequence(positive_view(pair))));
    for (const auto& n : negs) {
        const auto view = materialize(pair, n, corpus);
        sims.push_back(similarity_matrix(anchor_sequence(pair, view), candidate_sequence(view)));
    }
    return sims;
}

inline SeqLossResult seq_infonce(const SegmentedPair& pair, std::span<const NegativePermutation> negs,
                                 std::span<const SegmentedPair> corpus, const LossConfig& cfg) {
    const auto sims = candidate_similarities(pair, negs, corpus);
    return seq_infonce_from_similarity(sims, cfg);
}

inline std::vector<SimilarityGradEntry> seq_infonce_grad(const SegmentedPair& pair,
                                                         std::span<const NegativePermutation> negs,
                                                         std::span<const SegmentedPair> corpus, const LossConfig& cfg) {
    return similarity_gradient(seq_infonce(pair, negs, corpus, cfg), cfg.normalize_score);
}

// Intra-video unit-level InfoNCE: every (caption, clip-in-its-segment) pair
// is a positive; the caption's similarities to clips of other segments are
// its negatives. `owner[j]` is the caption row owning column j.
struct UnitLossResult {
    double loss_sum = 0.0;
    std::size_t terms = 0;
    Matrix grad;  // d(loss_sum)/dS
};

inline UnitLossResult intra_video_unit_loss(const Matrix& sim, std::span<const std::size_t> owner, double tau) {
    UnitLossResult r;
    r.grad = Matrix(sim.rows(), sim.cols());
    for (std::size_t i = 0; i < sim.rows(); ++i) {
        std::vector<std::size_t> negs;
        for (std::size_t k = 0; k < sim.cols(); ++k) {
            if (owner[k] != i) negs.push_back(k);
        }
        if (negs.empty()) continue;
        std::vector<double> scores(negs.size() + 1);
        for (std::size_t j = 0; j < sim.cols(); ++j) {
            if (owner[j] != i) continue;
            scores[0] = sim(i, j);
            for (std::size_t n = 0; n < negs.size(); ++n) scores[n + 1] = sim(i, negs[n]);
            auto nce = infonce(scores, tau);
            r.loss_sum += nce.loss;
            ++r.terms;
            r.grad(i, j) += nce.grad[0];
            for (std::size_t n = 0; n < negs.size(); ++n) r.grad(i, negs[n]) += nce.grad[n + 1];
        }
    }
    return r;
}

// w_unit * mean(unit) + w_seq * mean(seq); an empty group contributes nothing.
inline double joint_loss(std::span<const double> unit_terms, std::span<const double> seq_terms, const LossConfig& cfg) {
    if (unit_terms.empty() && seq_terms.empty()) throw DataError("joint_loss: no loss terms");
    auto mean = [](std::span<const double> v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    double total = 0.0;
    if (!unit_terms.empty()) total += cfg.w_unit * mean(unit_terms);
    if (!seq_terms.empty()) total += cfg.w_seq * mean(seq_terms);
    return total;
}

}  // namespace tempclr
