#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tempclr/loss.hpp"
#include "tempclr/model.hpp"
#include "tempclr/negatives.hpp"
#include "tempclr/seqcore.hpp"

namespace tempclr {

enum class TrainMode { video_text, video_only };
enum class Schedule { constant, cosine };

inline std::string_view to_string(TrainMode m) { return m == TrainMode::video_text ? "video-text" : "video-only"; }

inline TrainMode parse_train_mode(std::string_view s) {
    if (s == "video-text") return TrainMode::video_text;
    if (s == "video-only") return TrainMode::video_only;
    throw std::invalid_argument("unknown training mode '" + std::string(s) + "'");
}

struct TrainConfig {
    TrainMode mode = TrainMode::video_text;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    int epochs = 10;
    std::size_t batch_pairs = 8;
    Strategy neg_strategy = Strategy::seg_unit;
    std::size_t neg_count = 32;
    LossConfig loss;
    std::uint64_t seed = 0;
    int eval_every = 0;  // 0 = never
    Schedule schedule = Schedule::constant;

    void validate() const {
        if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: lr must be >= 0");
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_pairs < 1) throw std::invalid_argument("TrainConfig: batch_pairs must be >= 1");
        if (neg_count < 1) throw std::invalid_argument("TrainConfig: neg_count must be >= 1");
        loss.validate();
    }
};

struct EvalSnapshot {
    int epoch = 0;
    std::map<std::string, double> metrics;
};

struct TrainReport {
    std::vector<double> loss_curve;  // one entry per epoch
    std::vector<EvalSnapshot> snapshots;
    ProjectionModel model;
    std::uint64_t seed = 0;
    std::size_t skipped_pairs = 0;  // pairs without usable negatives
};

using EvalHook = std::function<std::map<std::string, double>(const ProjectionModel&)>;

// A pair together with the negatives drawn for it.
struct BatchItem {
    const SegmentedPair* pair = nullptr;
    std::vector<NegativePermutation> negatives;
};

struct BatchObjective {
    double loss = 0.0;
    std::vector<double> grad;         // d(loss)/d(model parameters)
    std::vector<WarpingPath> paths;   // every candidate's optimal path
    std::size_t unit_terms = 0;
    std::size_t seq_terms = 0;
};

namespace detail {

struct ProjectedRows {
    std::vector<std::vector<double>> rows;
    std::vector<ProjectionModel::Trace> traces;
    std::vector<std::vector<double>> grad;  // d(loss)/d(projected row)
};

class ProjectionCache {
public:
    ProjectionCache(const ProjectionModel& model, bool with_grad) : model_{model}, with_grad_{with_grad} {}

    ProjectedRows& anchor(const SegmentedPair& p) { return get(anchors_, p.anchor, p, Side::anchor); }
    ProjectedRows& clips(const SegmentedPair& p) { return get(clips_, p.positive, p, Side::positive); }

    // Backpropagates every accumulated row gradient into `grad`.
    void backward(std::span<double> grad) const {
        // Deterministic order: by pair id, anchors first.
        auto run = [&](const auto& table, Side side) {
            std::vector<const std::pair<const SegmentedPair* const, ProjectedRows>*> entries;
            for (const auto& e : table) entries.push_back(&e);
            std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first->id < b->first->id; });
            for (const auto* e : entries) {
                const auto& pr = e->second;
                for (std::size_t r = 0; r < pr.rows.size(); ++r) {
                    const auto& g = pr.grad[r];
                    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
                    model_.backward(side, pr.traces[r], g, grad);
                }
            }
        };
        run(anchors_, Side::anchor);
        run(clips_, Side::positive);
    }

private:
    using Table = std::unordered_map<const SegmentedPair*, ProjectedRows>;

    ProjectedRows& get(Table& table, const EmbeddingSequence& seq, const SegmentedPair& p, Side side) {
        auto it = table.find(&p);
        if (it != table.end()) return it->second;
        ProjectedRows pr;
        pr.rows.resize(seq.size());
        if (with_grad_) {
            pr.traces.resize(seq.size());
            pr.grad.assign(seq.size(), std::vector<double>(model_.output_dim(), 0.0));
        }
        for (std::size_t r = 0; r < seq.size(); ++r) {
            pr.rows[r] = model_.forward(side, seq.unit(r), with_grad_ ? &pr.traces[r] : nullptr);
        }
        return table.emplace(&p, std::move(pr)).first->second;
    }

    const ProjectionModel& model_;
    bool with_grad_;
    Table anchors_;
    Table clips_;
};

// d cos(x, y) / dx = y / (|x||y|) - cos * x / |x|^2; zero for zero vectors.
inline void add_cosine_grad(std::span<const double> x, std::span<const double> y, double upstream,
                            std::span<double> gx, std::span<double> gy) {
    const double nx = norm(x), ny = norm(y);
    if (nx == 0.0 || ny == 0.0) return;
    const double c = dot(x, y) / (nx * ny);
    for (std::size_t k = 0; k < x.size(); ++k) {
        gx[k] += upstream * (y[k] / (nx * ny) - c * x[k] / (nx * nx));
        gy[k] += upstream * (x[k] / (nx * ny) - c * y[k] / (ny * ny));
    }
}

inline double cosine_of(std::span<const double> x, std::span<const double> y) {
    const double nx = norm(x), ny = norm(y);
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return dot(x, y) / (nx * ny);
}

struct ItemWork {
    std::vector<CandidateView> views;
    SeqLossResult seq;
    UnitLossResult unit;
};

}  // namespace detail

// Joint objective of a frozen mini-batch under `model`. Candidate paths are
// re-solved on every call; gradients hold them fixed.
inline BatchObjective evaluate_batch(const ProjectionModel& model, std::span<const BatchItem> items,
                                     std::span<const SegmentedPair> corpus, const LossConfig& cfg, bool use_unit_term,
                                     bool with_grad) {
    cfg.validate();
    detail::ProjectionCache cache(model, with_grad);
    std::vector<detail::ItemWork> work(items.size());
    BatchObjective out;
    double seq_sum = 0.0, unit_sum = 0.0;

    for (std::size_t n = 0; n < items.size(); ++n) {
        const SegmentedPair& pair = *items[n].pair;
        auto& w = work[n];
        w.views.push_back(positive_view(pair));
        for (const auto& neg : items[n].negatives) w.views.push_back(materialize(pair, neg, corpus));

        std::vector<Matrix> sims;
        for (const auto& v : w.views) {
            auto& a = cache.anchor(pair);
            auto& c = cache.clips(*v.clip_source);
            Matrix s(v.anchor_rows.size(), v.clip_rows.size());
            for (std::size_t i = 0; i < v.anchor_rows.size(); ++i) {
                for (std::size_t j = 0; j < v.clip_rows.size(); ++j) {
                    s(i, j) = detail::cosine_of(a.rows[v.anchor_rows[i]], c.rows[v.clip_rows[j]]);
                }
            }
            sims.push_back(std::move(s));
        }
        w.seq = seq_infonce_from_similarity(sims, cfg);
        for (const auto& al : w.seq.alignments) out.paths.push_back(al.path);
        if (!w.seq.skipped) {
            seq_sum += w.seq.loss;
            ++out.seq_terms;
        }
        if (use_unit_term) {
            std::vector<std::size_t> owner;
            for (std::size_t k = 0; k < pair.segments.size(); ++k) {
                owner.insert(owner.end(), pair.segments[k].length(), k);
            }
            w.unit = intra_video_unit_loss(sims[0], owner, cfg.tau);
            unit_sum += w.unit.loss_sum;
            out.unit_terms += w.unit.terms;
        }
    }

    const double seq_scale = out.seq_terms ? cfg.w_seq / static_cast<double>(out.seq_terms) : 0.0;
    const double unit_scale = out.unit_terms ? cfg.w_unit / static_cast<double>(out.unit_terms) : 0.0;
    out.loss = seq_scale * seq_sum + unit_scale * unit_sum;
    if (!with_grad) return out;

    for (std::size_t n = 0; n < items.size(); ++n) {
        const SegmentedPair& pair = *items[n].pair;
        const auto& w = work[n];
        auto& a = cache.anchor(pair);
        auto push = [&](const CandidateView& v, std::size_t i, std::size_t j, double upstream) {
            auto& c = cache.clips(*v.clip_source);
            const std::size_t ar = v.anchor_rows[i], cr = v.clip_rows[j];
            detail::add_cosine_grad(a.rows[ar], c.rows[cr], upstream, a.grad[ar], c.grad[cr]);
        };
        for (const auto& e : similarity_gradient(w.seq, cfg.normalize_score)) {
            push(w.views[e.candidate], e.i, e.j, seq_scale * e.value);
        }
        if (use_unit_term && w.unit.terms > 0) {
            for (std::size_t i = 0; i < w.unit.grad.rows(); ++i) {
                for (std::size_t j = 0; j < w.unit.grad.cols(); ++j) {
                    if (w.unit.grad(i, j) != 0.0) push(w.views[0], i, j, unit_scale * w.unit.grad(i, j));
                }
            }
        }
    }
    out.grad.assign(model.parameter_count(), 0.0);
    cache.backward(out.grad);
    return out;
}

// Two-view frame pair for self-supervised training: frame 2i goes to the
// anchor and frame 2i+1 to the positive, and the two form segment i. An odd
// trailing frame is dropped so every anchor frame takes part in the alignment.
inline SegmentedPair make_video_only_pair(const LabeledVideo& video) {
    const auto& f = video.frames;
    if (f.size() < 4) throw DataError("video '" + video.id + "': needs at least 4 frames for two views");
    const std::size_t half = f.size() / 2;
    std::vector<std::size_t> even, odd;
    SegmentedPair p;
    p.id = video.id;
    for (std::size_t i = 0; i < half; ++i) {
        even.push_back(2 * i);
        odd.push_back(2 * i + 1);
        p.segments.push_back(Segment{i, i, i + 1});
    }
    p.anchor = f.select(even);
    p.positive = f.select(odd);
    p.background_mask.assign(half, false);
    return p;
}

// Adam on the joint objective over a corpus of canonical pairs. Deterministic
// for a given config: the epoch order, the negatives and the model update all
// draw from one RNG seeded with cfg.seed.
inline TrainReport fit(std::span<const SegmentedPair> corpus, ProjectionModel model, const TrainConfig& cfg,
                       const EvalHook& hook = {}) {
    cfg.validate();
    if (corpus.empty()) throw DataError("fit: empty corpus");
    for (const auto& p : corpus) {
        validate_pair(p);
        if (p.dim() != model.input_dim()) {
            throw DataError("pair '" + p.id + "': dim " + std::to_string(p.dim()) + " != model input dim " +
                            std::to_string(model.input_dim()));
        }
    }
    const bool video_only = cfg.mode == TrainMode::video_only;
    const NegativeOptions neg_opt{video_only};
    const bool use_unit_term = !video_only;

    TrainReport report;
    report.seed = cfg.seed;
    for (const auto& p : corpus) {
        if (!has_negatives(p, cfg.neg_strategy, corpus.size())) ++report.skipped_pairs;
    }
    if (report.skipped_pairs == corpus.size()) throw DataError("no trainable pairs");

    Rng rng(cfg.seed);
    AdamState adam(model.parameter_count());
    const std::size_t steps_per_epoch = (corpus.size() + cfg.batch_pairs - 1) / cfg.batch_pairs;
    const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;
    std::size_t step = 0;

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_pairs) {
            std::vector<BatchItem> items;
            for (std::size_t k = b; k < std::min(order.size(), b + cfg.batch_pairs); ++k) {
                const auto& pair = corpus[order[k]];
                auto negs = generate_negatives(pair, corpus, cfg.neg_strategy, cfg.neg_count, rng, neg_opt);
                if (negs.empty() && !(use_unit_term && pair.segments.size() >= 2)) continue;
                items.push_back({&pair, std::move(negs)});
            }
            if (items.empty()) continue;
            auto obj = evaluate_batch(model, items, corpus, cfg.loss, use_unit_term, true);
            if (obj.seq_terms + obj.unit_terms == 0) continue;
            if (!std::isfinite(obj.loss)) throw NumericalError("fit: non-finite loss at epoch " + std::to_string(epoch));
            AdamConfig ac{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
            if (cfg.schedule == Schedule::cosine) {
                ac.lr = 0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
            }
            adam_step(model.parameters(), obj.grad, adam, ac);
            ++step;
            epoch_loss += obj.loss;
            ++batches;
        }
        if (batches == 0) throw DataError("no trainable pairs");
        report.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
        if (hook && cfg.eval_every > 0 && epoch % cfg.eval_every == 0) report.snapshots.push_back({epoch, hook(model)});
    }
    report.model = std::move(model);
    return report;
}

// Self-supervised frame-sequence training. all-unit shuffles each video's own
// frames; unpaired / joint draw other videos' frames, shuffled.
inline TrainReport fit_video_only(std::span<const LabeledVideo> videos, ProjectionModel model, TrainConfig cfg,
                                  const EvalHook& hook = {}) {
    std::vector<SegmentedPair> pairs;
    pairs.reserve(videos.size());
    for (const auto& v : videos) pairs.push_back(make_video_only_pair(v));
    cfg.mode = TrainMode::video_only;
    return fit(pairs, std::move(model), cfg, hook);
}

}  // namespace tempclr
