#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tempclr/matrix.hpp"

namespace tempclr {

// Malformed or degenerate input data (bad shapes, empty pairs, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values reached a numerical routine.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ordered list of d-dimensional units: a paragraph, a video or a frame
// sequence. Units are stored unnormalized, one per matrix row.
struct EmbeddingSequence {
    std::string id;
    Matrix units;

    EmbeddingSequence() = default;
    EmbeddingSequence(std::string id_, Matrix units_) : id{std::move(id_)}, units{std::move(units_)} {}

    friend bool operator==(const EmbeddingSequence&, const EmbeddingSequence&) = default;

    [[nodiscard]] std::size_t size() const { return units.rows(); }
    [[nodiscard]] std::size_t dim() const { return units.cols(); }
    [[nodiscard]] std::span<const double> unit(std::size_t i) const { return units.row(i); }

    // Throws DataError / NumericalError when the sequence breaks its invariants.
    void validate() const {
        if (units.rows() == 0) throw DataError("sequence '" + id + "': no units");
        if (units.cols() == 0) throw DataError("sequence '" + id + "': dim must be positive");
        for (double v : units.flat()) {
            if (!std::isfinite(v)) throw NumericalError("sequence '" + id + "': non-finite unit component");
        }
    }

    // Rows picked by index, in the given order.
    [[nodiscard]] EmbeddingSequence select(std::span<const std::size_t> indices) const {
        Matrix out(indices.size(), dim());
        for (std::size_t r = 0; r < indices.size(); ++r) {
            auto src = unit(indices[r]);
            std::copy(src.begin(), src.end(), out.row(r).begin());
        }
        return {id, std::move(out)};
    }
};

struct Segment {
    std::size_t caption_index = 0;
    std::size_t start = 0;  // first clip
    std::size_t end = 0;    // one past the last clip

    [[nodiscard]] std::size_t length() const { return end - start; }
    [[nodiscard]] bool contains(std::size_t clip) const { return clip >= start && clip < end; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentMap = std::vector<Segment>;

// A paragraph (anchor captions) paired with its video (positive clips).
struct SegmentedPair {
    std::string id;
    EmbeddingSequence anchor;
    EmbeddingSequence positive;
    SegmentMap segments;
    std::vector<bool> background_mask;  // true = clip covered by no segment

    [[nodiscard]] std::size_t dim() const { return anchor.dim(); }

    // Clip indices covered by some segment, in temporal order.
    [[nodiscard]] std::vector<std::size_t> covered_clips() const {
        std::vector<std::size_t> out;
        for (const auto& s : segments) {
            for (std::size_t j = s.start; j < s.end; ++j) out.push_back(j);
        }
        return out;
    }

    // Anchor caption indices referenced by the segments, in order.
    [[nodiscard]] std::vector<std::size_t> segment_captions() const {
        std::vector<std::size_t> out;
        out.reserve(segments.size());
        for (const auto& s : segments) out.push_back(s.caption_index);
        return out;
    }

    friend bool operator==(const SegmentedPair& a, const SegmentedPair& b) {
        return a.id == b.id && a.anchor.id == b.anchor.id && a.anchor.units == b.anchor.units &&
               a.positive.id == b.positive.id && a.positive.units == b.positive.units &&
               a.segments == b.segments && a.background_mask == b.background_mask;
    }
};

struct LabeledVideo {
    std::string id;
    std::string label;
    EmbeddingSequence frames;
};

inline std::vector<bool> compute_background_mask(std::size_t n_clips, const SegmentMap& segments) {
    std::vector<bool> mask(n_clips, true);
    for (const auto& s : segments) {
        for (std::size_t j = s.start; j < s.end && j < n_clips; ++j) mask[j] = false;
    }
    return mask;
}

// Checks the SegmentedPair invariants. When `require_disjoint` is false only
// per-segment validity is checked (raw, pre-canonical input).
inline void validate_pair(const SegmentedPair& pair, bool require_disjoint = true) {
    pair.anchor.validate();
    pair.positive.validate();
    if (pair.anchor.dim() != pair.positive.dim()) {
        throw DataError("pair '" + pair.id + "': anchor dim " + std::to_string(pair.anchor.dim()) +
                        " != positive dim " + std::to_string(pair.positive.dim()));
    }
    const std::size_t n_clips = pair.positive.size();
    for (std::size_t k = 0; k < pair.segments.size(); ++k) {
        const auto& s = pair.segments[k];
        if (s.caption_index >= pair.anchor.size()) {
            throw DataError("pair '" + pair.id + "': segment caption_index out of range");
        }
        if (!(s.start < s.end && s.end <= n_clips)) {
            throw DataError("pair '" + pair.id + "': segment range invalid");
        }
        if (require_disjoint && k > 0) {
            const auto& prev = pair.segments[k - 1];
            if (s.start < prev.start) throw DataError("pair '" + pair.id + "': segments not sorted by start");
            if (s.caption_index <= prev.caption_index) {
                throw DataError("pair '" + pair.id + "': caption_index not strictly increasing");
            }
            if (s.start < prev.end) {
                throw DataError("pair '" + pair.id + "': overlapping segments");
            }
        }
    }
    if (!require_disjoint) return;
    if (pair.segments.empty()) throw DataError("pair '" + pair.id + "': no segments");
    if (pair.background_mask.size() != n_clips) {
        throw DataError("pair '" + pair.id + "': background_mask length mismatch");
    }
    if (pair.background_mask != compute_background_mask(n_clips, pair.segments)) {
        throw DataError("pair '" + pair.id + "': background_mask inconsistent with segments");
    }
}

inline void check_dims(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DataError("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
}

// Cosine similarity; a zero-norm operand yields 0.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    check_dims(u, v);
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    if (!std::isfinite(uv) || !std::isfinite(uu) || !std::isfinite(vv)) {
        throw NumericalError("cosine_similarity: non-finite input");
    }
    if (uu == 0.0 || vv == 0.0) return 0.0;
    return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

inline Matrix similarity_matrix(const EmbeddingSequence& a, const EmbeddingSequence& b) {
    if (a.dim() != b.dim()) {
        throw DataError("similarity_matrix: dim " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
    Matrix s(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) s(i, j) = cosine_similarity(a.unit(i), b.unit(j));
    }
    return s;
}

// D(i,j) = 1 - cos(a_i, b_j); entries lie in [0, 2].
inline Matrix cost_matrix(const EmbeddingSequence& a, const EmbeddingSequence& b) {
    Matrix d = similarity_matrix(a, b);
    for (double& v : d.flat()) v = 1.0 - v;
    return d;
}

// Greedy overlap resolution in temporal order: a segment intersecting an
// already kept range is dropped together with its caption. Captions are
// re-indexed to the kept subset.
inline SegmentedPair canonicalize_pair(const SegmentedPair& raw) {
    validate_pair(raw, /*require_disjoint=*/false);

    SegmentMap sorted = raw.segments;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Segment& a, const Segment& b) { return a.start < b.start; });

    SegmentMap kept;
    for (const auto& s : sorted) {
        const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Segment& k) {
            return s.start < k.end && k.start < s.end;
        });
        if (!overlaps) kept.push_back(s);
    }
    if (kept.empty()) throw DataError("pair '" + raw.id + "': empty pair");

    std::vector<std::size_t> caption_rows;
    SegmentMap remapped;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        caption_rows.push_back(kept[k].caption_index);
        remapped.push_back({k, kept[k].start, kept[k].end});
    }

    SegmentedPair out;
    out.id = raw.id;
    out.anchor = raw.anchor.select(caption_rows);
    out.positive = raw.positive;
    out.segments = std::move(remapped);
    out.background_mask = compute_background_mask(out.positive.size(), out.segments);
    return out;
}

}  // namespace tempclr
