#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempclr/seqcore.hpp"

namespace tempclr {

using Rng = std::mt19937_64;

enum class Strategy { seg_only, seg_unit, within_seg, all_unit, unpaired, joint, visual_anchor };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::seg_only: return "seg-only";
        case Strategy::seg_unit: return "seg-unit";
        case Strategy::within_seg: return "within-seg";
        case Strategy::all_unit: return "all-unit";
        case Strategy::unpaired: return "unpaired";
        case Strategy::joint: return "joint";
        case Strategy::visual_anchor: return "visual-anchor";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s) {
    for (auto st : {Strategy::seg_only, Strategy::seg_unit, Strategy::within_seg, Strategy::all_unit,
                    Strategy::unpaired, Strategy::joint, Strategy::visual_anchor}) {
        if (to_string(st) == s) return st;
    }
    throw std::invalid_argument("unknown negative strategy '" + std::string(s) + "'");
}

// A negative sequence expressed as indices into a source sequence. For every
// strategy except visual_anchor, `perm` lists clip rows of the pair named by
// `source_id`; for visual_anchor it lists caption rows of the anchor.
struct NegativePermutation {
    Strategy strategy = Strategy::seg_only;
    std::vector<std::size_t> perm;
    std::string source_id;

    [[nodiscard]] bool permutes_anchor() const { return strategy == Strategy::visual_anchor; }
    friend bool operator==(const NegativePermutation&, const NegativePermutation&) = default;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> segment_blocks(const SegmentedPair& pair) {
    std::vector<std::vector<std::size_t>> blocks;
    for (const auto& s : pair.segments) {
        std::vector<std::size_t> b(s.length());
        std::iota(b.begin(), b.end(), s.start);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

// Uniform shuffle with the identity rejected; `v` must have >= 2 distinct slots.
template <typename T>
void shuffle_non_identity(std::vector<T>& v, Rng& rng) {
    const std::vector<T> original = v;
    do {
        std::shuffle(v.begin(), v.end(), rng);
    } while (v == original);
}

inline bool has_long_segment(const SegmentedPair& pair) {
    return std::any_of(pair.segments.begin(), pair.segments.end(), [](const Segment& s) { return s.length() >= 2; });
}

inline std::size_t covered_count(const SegmentedPair& pair) {
    std::size_t n = 0;
    for (const auto& s : pair.segments) n += s.length();
    return n;
}

}  // namespace detail

// Reorders whole segment blocks (never the identity order); background clips
// are left out. With `shuffle_within`, each block is also shuffled internally.
inline NegativePermutation permute_segments(const SegmentedPair& pair, bool shuffle_within, Rng& rng) {
    if (pair.segments.size() < 2) throw DataError("pair '" + pair.id + "': degenerate pair (fewer than 2 segments)");
    auto blocks = detail::segment_blocks(pair);
    std::vector<std::size_t> order(blocks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    detail::shuffle_non_identity(order, rng);

    NegativePermutation out;
    out.strategy = shuffle_within ? Strategy::seg_unit : Strategy::seg_only;
    out.source_id = pair.id;
    for (std::size_t b : order) {
        auto block = blocks[b];
        if (shuffle_within) std::shuffle(block.begin(), block.end(), rng);
        out.perm.insert(out.perm.end(), block.begin(), block.end());
    }
    return out;
}

// Blocks stay in place; at least one block changes its internal order.
inline NegativePermutation permute_within_segments(const SegmentedPair& pair, Rng& rng) {
    if (!detail::has_long_segment(pair)) {
        throw DataError("pair '" + pair.id + "': degenerate pair (all segments have length 1)");
    }
    const auto identity = pair.covered_clips();
    NegativePermutation out{Strategy::within_seg, {}, pair.id};
    do {
        out.perm.clear();
        for (auto block : detail::segment_blocks(pair)) {
            std::shuffle(block.begin(), block.end(), rng);
            out.perm.insert(out.perm.end(), block.begin(), block.end());
        }
    } while (out.perm == identity);
    return out;
}

// Uniform non-identity permutation of every segment-covered clip.
inline NegativePermutation permute_all_units(const SegmentedPair& pair, Rng& rng) {
    auto perm = pair.covered_clips();
    if (perm.size() < 2) throw DataError("pair '" + pair.id + "': degenerate pair (fewer than 2 clips)");
    detail::shuffle_non_identity(perm, rng);
    return {Strategy::all_unit, std::move(perm), pair.id};
}

// Another pair's clips in their own order. The selection is uniform over
// every corpus entry whose id differs from `anchor_id`.
inline NegativePermutation sample_unpaired(std::span<const SegmentedPair> corpus, std::string_view anchor_id,
                                           Rng& rng) {
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
        if (corpus[k].id != anchor_id) others.push_back(k);
    }
    if (corpus.size() < 2 || others.empty()) throw DataError("sample_unpaired: corpus needs at least 2 pairs");
    std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
    const auto& other = corpus[others[pick(rng)]];
    return {Strategy::unpaired, other.covered_clips(), other.id};
}

// Caption-level segment reordering of the anchor paragraph.
inline NegativePermutation permute_anchor_segments(const SegmentedPair& pair, Rng& rng) {
    if (pair.segments.size() < 2) throw DataError("pair '" + pair.id + "': degenerate pair (fewer than 2 captions)");
    auto perm = pair.segment_captions();
    detail::shuffle_non_identity(perm, rng);
    return {Strategy::visual_anchor, std::move(perm), pair.id};
}

struct NegativeOptions {
    // Video-only training draws other videos' frames and shuffles them.
    bool shuffle_unpaired = false;
};

namespace detail {

// seg-* / within-seg with the degenerate fallback chain -> all_unit -> none.
inline bool draw_shuffle(const SegmentedPair& pair, Strategy s, Rng& rng, std::vector<NegativePermutation>& out) {
    if ((s == Strategy::seg_only || s == Strategy::seg_unit) && pair.segments.size() >= 2) {
        out.push_back(permute_segments(pair, s == Strategy::seg_unit, rng));
        return true;
    }
    if (s == Strategy::within_seg && has_long_segment(pair)) {
        out.push_back(permute_within_segments(pair, rng));
        return true;
    }
    if (covered_count(pair) >= 2) {
        out.push_back(permute_all_units(pair, rng));
        return true;
    }
    return false;
}

inline void draw_unpaired(const SegmentedPair& pair, std::span<const SegmentedPair> corpus, const NegativeOptions& opt,
                          Rng& rng, std::vector<NegativePermutation>& out) {
    auto neg = sample_unpaired(corpus, pair.id, rng);
    if (opt.shuffle_unpaired && neg.perm.size() >= 2) shuffle_non_identity(neg.perm, rng);
    out.push_back(std::move(neg));
}

}  // namespace detail

// Draws `count` negatives for `pair`. Duplicates are possible for small pairs.
// An empty result means the pair has no usable negative and is skipped.
inline std::vector<NegativePermutation> generate_negatives(const SegmentedPair& pair,
                                                           std::span<const SegmentedPair> corpus, Strategy strategy,
                                                           std::size_t count, Rng& rng,
                                                           const NegativeOptions& opt = {}) {
    if (count < 1) throw std::invalid_argument("generate_negatives: count must be >= 1");
    std::vector<NegativePermutation> out;
    out.reserve(count);
    switch (strategy) {
        case Strategy::seg_only:
        case Strategy::seg_unit:
        case Strategy::within_seg:
        case Strategy::all_unit:
            for (std::size_t k = 0; k < count; ++k) {
                if (!detail::draw_shuffle(pair, strategy, rng, out)) return {};
            }
            return out;
        case Strategy::unpaired:
            for (std::size_t k = 0; k < count; ++k) detail::draw_unpaired(pair, corpus, opt, rng, out);
            return out;
        case Strategy::joint: {
            const std::size_t shuffled = count - count / 2;
            for (std::size_t k = 0; k < shuffled; ++k) {
                if (!detail::draw_shuffle(pair, Strategy::seg_unit, rng, out)) break;
            }
            for (std::size_t k = 0; k < count / 2; ++k) detail::draw_unpaired(pair, corpus, opt, rng, out);
            return out;
        }
        case Strategy::visual_anchor:
            if (pair.segments.size() < 2) return {};
            for (std::size_t k = 0; k < count; ++k) out.push_back(permute_anchor_segments(pair, rng));
            return out;
    }
    throw std::invalid_argument("generate_negatives: unknown strategy");
}

// Whether generate_negatives can return anything for this pair.
inline bool has_negatives(const SegmentedPair& pair, Strategy strategy, std::size_t corpus_size) {
    switch (strategy) {
        case Strategy::unpaired: return corpus_size >= 2;
        case Strategy::joint: return corpus_size >= 2 || detail::covered_count(pair) >= 2;
        case Strategy::visual_anchor: return pair.segments.size() >= 2;
        default: return detail::covered_count(pair) >= 2;
    }
}

// Row-level view of one contrastive candidate: which anchor captions face
// which clips (of which pair).
struct CandidateView {
    std::vector<std::size_t> anchor_rows;
    const SegmentedPair* clip_source = nullptr;
    std::vector<std::size_t> clip_rows;
};

inline CandidateView positive_view(const SegmentedPair& pair) {
    return {pair.segment_captions(), &pair, pair.covered_clips()};
}

inline CandidateView materialize(const SegmentedPair& pair, const NegativePermutation& neg,
                                 std::span<const SegmentedPair> corpus) {
    if (neg.permutes_anchor()) return {neg.perm, &pair, pair.covered_clips()};
    if (neg.source_id == pair.id) return {pair.segment_captions(), &pair, neg.perm};
    for (const auto& other : corpus) {
        if (other.id == neg.source_id) return {pair.segment_captions(), &other, neg.perm};
    }
    throw DataError("negative source '" + neg.source_id + "' not found in corpus");
}

inline EmbeddingSequence anchor_sequence(const SegmentedPair& pair, const CandidateView& view) {
    return pair.anchor.select(view.anchor_rows);
}

inline EmbeddingSequence candidate_sequence(const CandidateView& view) {
    return view.clip_source->positive.select(view.clip_rows);
}

}  // namespace tempclr
