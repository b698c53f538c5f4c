#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempclr/align.hpp"
#include "tempclr/model.hpp"
#include "tempclr/negatives.hpp"
#include "tempclr/seqcore.hpp"

namespace tempclr {

enum class RetrievalMeasure { dtw, otam, capavg, dtw_capavg, otam_capavg };
enum class Background { keep, remove };

inline std::string_view to_string(RetrievalMeasure m) {
    switch (m) {
        case RetrievalMeasure::dtw: return "dtw";
        case RetrievalMeasure::otam: return "otam";
        case RetrievalMeasure::capavg: return "capavg";
        case RetrievalMeasure::dtw_capavg: return "dtw+capavg";
        case RetrievalMeasure::otam_capavg: return "otam+capavg";
    }
    return "?";
}

inline RetrievalMeasure parse_retrieval_measure(std::string_view s) {
    for (auto m : {RetrievalMeasure::dtw, RetrievalMeasure::otam, RetrievalMeasure::capavg,
                   RetrievalMeasure::dtw_capavg, RetrievalMeasure::otam_capavg}) {
        if (to_string(m) == s) return m;
    }
    throw std::invalid_argument("unknown retrieval measure '" + std::string(s) + "'");
}

inline std::string_view to_string(Background b) { return b == Background::keep ? "keep" : "remove"; }

inline Background parse_background(std::string_view s) {
    if (s == "keep") return Background::keep;
    if (s == "remove") return Background::remove;
    throw std::invalid_argument("unknown background mode '" + std::string(s) + "'");
}

struct QueryRecord {
    std::string query_id;
    std::string target_id;
    std::size_t rank = 0;  // 0-based rank of the ground truth
    std::vector<double> scores;
};

struct EvalReport {
    std::string task;
    std::string measure;
    std::map<int, double> recall;              // K -> R@K
    std::map<std::string, double> auxiliary;   // pair-match, accuracy, ci95, ...
    std::vector<QueryRecord> per_query;
};

// 0-based rank of `target` when sorting by descending score; equal scores
// keep input order.
inline std::size_t stable_rank(std::span<const double> scores, std::size_t target) {
    std::size_t rank = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k] > scores[target] || (scores[k] == scores[target] && k < target)) ++rank;
    }
    return rank;
}

inline std::vector<int> check_ks(std::vector<int> ks, std::size_t candidates) {
    if (ks.empty()) throw std::invalid_argument("no K values");
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.front() < 1) throw std::invalid_argument("K must be >= 1");
    if (static_cast<std::size_t>(ks.back()) > candidates) {
        throw DataError("K=" + std::to_string(ks.back()) + " exceeds the " + std::to_string(candidates) +
                        " available candidates");
    }
    return ks;
}

inline void fill_recall(EvalReport& r, const std::vector<std::size_t>& ranks, const std::vector<int>& ks) {
    for (int k : ks) {
        const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](std::size_t rk) { return rk < static_cast<std::size_t>(k); });
        r.recall[k] = ranks.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(ranks.size());
    }
}

namespace detail {

struct ProjectedPair {
    EmbeddingSequence captions;  // segment captions, in segment order
    EmbeddingSequence clips;     // all clips
    EmbeddingSequence covered;   // segment-covered clips only
};

inline std::vector<ProjectedPair> project_corpus(std::span<const SegmentedPair> corpus, const ProjectionModel& model) {
    std::vector<ProjectedPair> out;
    out.reserve(corpus.size());
    for (const auto& p : corpus) {
        validate_pair(p);
        ProjectedPair pp;
        pp.captions = model.project(p.anchor.select(p.segment_captions()), Side::anchor);
        pp.clips = model.project(p.positive, Side::positive);
        pp.covered = pp.clips.select(p.covered_clips());
        out.push_back(std::move(pp));
    }
    return out;
}

inline std::vector<double> minmax(std::vector<double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, b = *hi;
    for (double& x : v) x = b > a ? (x - a) / (b - a) : 0.0;
    return v;
}

// Cap. Avg.: each caption votes for the video owning its globally most
// similar clip. Score = votes + (sum of winning similarities + n) / (2n + 1),
// which orders by votes first and summed similarity second.
inline std::vector<std::vector<double>> capavg_scores(const std::vector<ProjectedPair>& pp, Background bg) {
    std::vector<std::vector<double>> out;
    for (const auto& q : pp) {
        const std::size_t n = q.captions.size();
        std::vector<double> votes(pp.size(), 0.0), sims(pp.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = -2.0;
            std::size_t owner = 0;
            for (std::size_t v = 0; v < pp.size(); ++v) {
                const auto& clips = bg == Background::keep ? pp[v].clips : pp[v].covered;
                for (std::size_t j = 0; j < clips.size(); ++j) {
                    const double s = cosine_similarity(q.captions.unit(i), clips.unit(j));
                    if (s > best) {
                        best = s;
                        owner = v;
                    }
                }
            }
            votes[owner] += 1.0;
            sims[owner] += best;
        }
        std::vector<double> score(pp.size());
        for (std::size_t v = 0; v < pp.size(); ++v) {
            score[v] = votes[v] + (sims[v] + static_cast<double>(n)) / (2.0 * static_cast<double>(n) + 1.0);
        }
        out.push_back(std::move(score));
    }
    return out;
}

inline std::vector<std::vector<double>> sequence_scores(const std::vector<ProjectedPair>& pp, Background bg,
                                                        Measure m) {
    std::vector<std::vector<double>> out;
    for (const auto& q : pp) {
        std::vector<double> score;
        for (const auto& v : pp) {
            score.push_back(alignment_score(q.captions, bg == Background::keep ? v.clips : v.covered, m, true).score);
        }
        out.push_back(std::move(score));
    }
    return out;
}

}  // namespace detail

// Paragraph -> full video retrieval over the corpus (query k's target is video k).
inline EvalReport retrieval_full(std::span<const SegmentedPair> corpus, const ProjectionModel& model,
                                 RetrievalMeasure measure, Background background, std::vector<int> ks = {1, 5, 10},
                                 bool keep_scores = false) {
    if (corpus.size() < 2) throw DataError("retrieval_full: needs at least 2 videos");
    ks = check_ks(std::move(ks), corpus.size());
    const auto pp = detail::project_corpus(corpus, model);

    std::vector<std::vector<double>> scores;
    switch (measure) {
        case RetrievalMeasure::dtw: scores = detail::sequence_scores(pp, background, Measure::dtw); break;
        case RetrievalMeasure::otam: scores = detail::sequence_scores(pp, background, Measure::otam); break;
        case RetrievalMeasure::capavg: scores = detail::capavg_scores(pp, background); break;
        case RetrievalMeasure::dtw_capavg:
        case RetrievalMeasure::otam_capavg: {
            const auto seq = detail::sequence_scores(
                pp, background, measure == RetrievalMeasure::dtw_capavg ? Measure::dtw : Measure::otam);
            const auto cap = detail::capavg_scores(pp, background);
            for (std::size_t q = 0; q < pp.size(); ++q) {
                auto a = detail::minmax(seq[q]);
                auto b = detail::minmax(cap[q]);
                for (std::size_t v = 0; v < a.size(); ++v) a[v] = 0.5 * (a[v] + b[v]);
                scores.push_back(std::move(a));
            }
            break;
        }
    }

    EvalReport r;
    r.task = background == Background::keep ? "retrieval-full-bg" : "retrieval-full";
    r.measure = std::string(to_string(measure));
    std::vector<std::size_t> ranks;
    for (std::size_t q = 0; q < corpus.size(); ++q) {
        ranks.push_back(stable_rank(scores[q], q));
        QueryRecord rec{corpus[q].id, corpus[q].id, ranks.back(), {}};
        if (keep_scores) rec.scores = scores[q];
        r.per_query.push_back(std::move(rec));
    }
    fill_recall(r, ranks, ks);
    return r;
}

// Caption -> clip retrieval over every clip of every video. A caption hits at
// K when any clip of its own segment ranks in the top K.
inline EvalReport retrieval_clip(std::span<const SegmentedPair> corpus, const ProjectionModel& model,
                                 std::vector<int> ks = {1, 5, 10}) {
    if (corpus.size() < 2) throw DataError("retrieval_clip: needs at least 2 videos");
    const auto pp = detail::project_corpus(corpus, model);
    std::vector<std::pair<std::size_t, std::size_t>> pool;  // (video, clip)
    for (std::size_t v = 0; v < pp.size(); ++v) {
        for (std::size_t j = 0; j < pp[v].clips.size(); ++j) pool.emplace_back(v, j);
    }
    ks = check_ks(std::move(ks), pool.size());

    EvalReport r;
    r.task = "retrieval-clip";
    r.measure = "cosine";
    std::vector<std::size_t> ranks;
    std::vector<double> scores(pool.size());
    for (std::size_t v = 0; v < pp.size(); ++v) {
        for (std::size_t i = 0; i < pp[v].captions.size(); ++i) {
            const Segment& seg = corpus[v].segments[i];
            for (std::size_t k = 0; k < pool.size(); ++k) {
                scores[k] = cosine_similarity(pp[v].captions.unit(i), pp[pool[k].first].clips.unit(pool[k].second));
            }
            std::size_t best = pool.size();
            for (std::size_t k = 0; k < pool.size(); ++k) {
                if (pool[k].first == v && seg.contains(pool[k].second)) best = std::min(best, stable_rank(scores, k));
            }
            ranks.push_back(best);
            r.per_query.push_back({corpus[v].id + "#" + std::to_string(i), corpus[v].id, best, {}});
        }
    }
    fill_recall(r, ranks, ks);
    return r;
}

// Fraction of steps whose most similar clip (whole video, background
// included, first maximum on ties) falls inside the step's ground truth.
inline double localization_recall(const SegmentedPair& pair, const ProjectionModel& model) {
    validate_pair(pair);
    const auto captions = model.project(pair.anchor.select(pair.segment_captions()), Side::anchor);
    const auto clips = model.project(pair.positive, Side::positive);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < captions.size(); ++i) {
        std::size_t arg = 0;
        double best = -2.0;
        for (std::size_t j = 0; j < clips.size(); ++j) {
            const double s = cosine_similarity(captions.unit(i), clips.unit(j));
            if (s > best) {
                best = s;
                arg = j;
            }
        }
        if (pair.segments[i].contains(arg)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(captions.size());
}

// Fraction of warping-path entries (caption i, clip j) whose clip lies in
// caption i's ground-truth segment. Alignment runs on covered clips only.
inline double pair_match_percentage(const SegmentedPair& pair, const ProjectionModel& model, Measure measure) {
    validate_pair(pair);
    const auto covered = pair.covered_clips();
    const auto captions = model.project(pair.anchor.select(pair.segment_captions()), Side::anchor);
    const auto clips = model.project(pair.positive.select(covered), Side::positive);
    const auto res = alignment_score(captions, clips, measure, true);
    std::size_t correct = 0;
    for (const auto& c : res.path) {
        if (pair.segments[c.i].contains(covered[c.j])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(res.path.size());
}

inline double mean_pair_match(std::span<const SegmentedPair> corpus, const ProjectionModel& model, Measure measure) {
    if (corpus.empty()) throw DataError("mean_pair_match: empty corpus");
    double s = 0.0;
    for (const auto& p : corpus) s += pair_match_percentage(p, model, measure);
    return s / static_cast<double>(corpus.size());
}

inline double mean_localization_recall(std::span<const SegmentedPair> corpus, const ProjectionModel& model) {
    if (corpus.empty()) throw DataError("mean_localization_recall: empty corpus");
    double s = 0.0;
    for (const auto& p : corpus) s += localization_recall(p, model);
    return s / static_cast<double>(corpus.size());
}

// Video-paragraph view with ground-truth segments: each segment collapses to
// the mean of its clips, background is dropped, and segment s becomes clip s.
inline SegmentedPair pool_segments(const SegmentedPair& pair) {
    validate_pair(pair);
    SegmentedPair out;
    out.id = pair.id;
    out.anchor = pair.anchor;
    Matrix pooled(0, pair.dim());
    for (std::size_t s = 0; s < pair.segments.size(); ++s) {
        const auto& seg = pair.segments[s];
        std::vector<double> mean(pair.dim(), 0.0);
        for (std::size_t j = seg.start; j < seg.end; ++j) {
            const auto clip = pair.positive.unit(j);
            for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += clip[k];
        }
        for (double& x : mean) x /= static_cast<double>(seg.length());
        pooled.append_row(mean);
        out.segments.push_back({seg.caption_index, s, s + 1});
    }
    out.positive = {pair.positive.id, std::move(pooled)};
    out.background_mask.assign(pair.segments.size(), false);
    return out;
}

inline std::vector<SegmentedPair> pool_segments(std::span<const SegmentedPair> corpus) {
    std::vector<SegmentedPair> out;
    out.reserve(corpus.size());
    for (const auto& p : corpus) out.push_back(pool_segments(p));
    return out;
}

enum class FewShotClassifier { alignment, mean_vector };

struct FewShotConfig {
    std::size_t way = 5;
    std::size_t shot = 1;
    std::size_t queries_per_class = 15;
    std::size_t episodes = 1000;
    Measure measure = Measure::dtw;
    std::uint64_t seed = 0;
    FewShotClassifier classifier = FewShotClassifier::alignment;
};

namespace detail {

inline std::vector<double> mean_unit(const EmbeddingSequence& s) {
    std::vector<double> m(s.dim(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t k = 0; k < s.dim(); ++k) m[k] += s.unit(i)[k];
    }
    for (double& v : m) v /= static_cast<double>(s.size());
    return m;
}

}  // namespace detail

// Episodic N-way K-shot recognition. Each query is scored against every
// support video; scores are averaged per class and the best class wins
// (lowest class index on ties, classes ordered by label). Episode e draws from
// an RNG seeded with (seed, e).
inline EvalReport fewshot_eval(const ProjectionModel& model, std::span<const LabeledVideo> novel,
                               const FewShotConfig& cfg) {
    if (cfg.way < 1 || cfg.shot < 1 || cfg.queries_per_class < 1 || cfg.episodes < 1) {
        throw std::invalid_argument("fewshot_eval: way, shot, queries and episodes must be >= 1");
    }
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t k = 0; k < novel.size(); ++k) by_class[novel[k].label].push_back(k);
    std::vector<std::string> eligible;
    for (const auto& [label, members] : by_class) {
        if (members.size() >= cfg.shot + cfg.queries_per_class) eligible.push_back(label);
    }
    if (eligible.size() < cfg.way) {
        throw DataError("fewshot_eval: need " + std::to_string(cfg.way) + " classes with at least " +
                        std::to_string(cfg.shot + cfg.queries_per_class) + " videos, found " +
                        std::to_string(eligible.size()));
    }

    std::vector<EmbeddingSequence> projected;
    std::vector<std::vector<double>> means;
    projected.reserve(novel.size());
    for (const auto& v : novel) {
        v.frames.validate();
        projected.push_back(model.project(v.frames, Side::anchor));
        means.push_back(detail::mean_unit(projected.back()));
    }

    auto score = [&](std::size_t q, std::size_t s) {
        if (cfg.classifier == FewShotClassifier::mean_vector) return cosine_similarity(means[q], means[s]);
        return alignment_score(projected[q], projected[s], cfg.measure, true).score;
    };

    std::vector<double> acc;
    acc.reserve(cfg.episodes);
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32)};
        Rng rng(seq);
        std::vector<std::size_t> cls(eligible.size());
        std::iota(cls.begin(), cls.end(), std::size_t{0});
        std::shuffle(cls.begin(), cls.end(), rng);
        cls.resize(cfg.way);
        std::sort(cls.begin(), cls.end());

        std::vector<std::vector<std::size_t>> support(cfg.way), queries(cfg.way);
        for (std::size_t c = 0; c < cfg.way; ++c) {
            auto members = by_class[eligible[cls[c]]];
            std::shuffle(members.begin(), members.end(), rng);
            support[c].assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cfg.shot));
            queries[c].assign(members.begin() + static_cast<std::ptrdiff_t>(cfg.shot),
                              members.begin() + static_cast<std::ptrdiff_t>(cfg.shot + cfg.queries_per_class));
        }
        std::size_t correct = 0, total = 0;
        for (std::size_t truth = 0; truth < cfg.way; ++truth) {
            for (std::size_t q : queries[truth]) {
                std::size_t pred = 0;
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < cfg.way; ++c) {
                    double s = 0.0;
                    for (std::size_t sv : support[c]) s += score(q, sv);
                    s /= static_cast<double>(support[c].size());
                    if (s > best) {
                        best = s;
                        pred = c;
                    }
                }
                correct += pred == truth;
                ++total;
            }
        }
        acc.push_back(static_cast<double>(correct) / static_cast<double>(total));
    }

    const double n = static_cast<double>(acc.size());
    const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    var = acc.size() > 1 ? var / (n - 1.0) : 0.0;

    EvalReport r;
    r.task = "fewshot-" + std::to_string(cfg.way) + "way-" + std::to_string(cfg.shot) + "shot";
    r.measure = cfg.classifier == FewShotClassifier::mean_vector ? "mean-vector" : std::string(to_string(cfg.measure));
    r.auxiliary["accuracy"] = mean;
    r.auxiliary["ci95"] = 1.96 * std::sqrt(var / n);
    r.auxiliary["episodes"] = n;
    return r;
}

}  // namespace tempclr
