#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempclr/matrix.hpp"
#include "tempclr/seqcore.hpp"

namespace tempclr {

// dtw: both ends pinned. otam: free start and end on the candidate (column)
// axis, i.e. subsequence alignment; every anchor row is still matched.
enum class Measure { dtw, otam };

inline std::string_view to_string(Measure m) { return m == Measure::dtw ? "dtw" : "otam"; }

inline Measure parse_measure(std::string_view s) {
    if (s == "dtw") return Measure::dtw;
    if (s == "otam") return Measure::otam;
    throw std::invalid_argument("unknown measure '" + std::string(s) + "'");
}

struct Cell {
    std::size_t i = 0;  // anchor index
    std::size_t j = 0;  // candidate index
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

using WarpingPath = std::vector<Cell>;

struct AlignmentResult {
    Matrix cumulative;  // C
    WarpingPath path;   // matching matrix M in sparse form
    double distance = 0.0;
    double score = 0.0;  // filled in by the scoring helpers
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline void check_cost(const Matrix& cost) {
    if (cost.rows() == 0 || cost.cols() == 0) throw DataError("alignment: empty cost matrix");
    for (double v : cost.flat()) {
        if (!std::isfinite(v)) throw NumericalError("alignment: non-finite cost");
    }
}

inline double at_or_inf(const Matrix& c, std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0) return kInf;
    return c(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

// Walks predecessors back from `end` until `stop(cell)` holds. Ties prefer
// the diagonal, then the vertical (anchor) step, then the horizontal one.
template <typename Stop>
WarpingPath backtrack(const Matrix& c, Cell end, Stop stop) {
    WarpingPath path{end};
    Cell cur = end;
    while (!stop(cur)) {
        const auto i = static_cast<std::ptrdiff_t>(cur.i);
        const auto j = static_cast<std::ptrdiff_t>(cur.j);
        const double diag = at_or_inf(c, i - 1, j - 1);
        const double up = at_or_inf(c, i - 1, j);
        const double left = at_or_inf(c, i, j - 1);
        if (diag <= up && diag <= left) {
            cur = {cur.i - 1, cur.j - 1};
        } else if (up <= left) {
            cur = {cur.i - 1, cur.j};
        } else {
            cur = {cur.i, cur.j - 1};
        }
        path.push_back(cur);
    }
    return {path.rbegin(), path.rend()};
}

}  // namespace detail

// C(i,j) = D(i,j) + min{C(i-1,j-1), C(i-1,j), C(i,j-1)}, C(0,0) = D(0,0).
inline AlignmentResult dtw(const Matrix& cost) {
    detail::check_cost(cost);
    const std::size_t n = cost.rows(), m = cost.cols();
    Matrix c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == 0 && j == 0) {
                c(0, 0) = cost(0, 0);
                continue;
            }
            const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
            const double best = std::min({detail::at_or_inf(c, ii - 1, jj - 1), detail::at_or_inf(c, ii - 1, jj),
                                          detail::at_or_inf(c, ii, jj - 1)});
            c(i, j) = cost(i, j) + best;
        }
    }
    AlignmentResult r;
    r.path = detail::backtrack(c, {n - 1, m - 1}, [](Cell x) { return x.i == 0 && x.j == 0; });
    r.distance = c(n - 1, m - 1);
    r.cumulative = std::move(c);
    return r;
}

// Subsequence DTW: C(0,j) = D(0,j) for every j, the standard recursion for
// later rows, distance = min_j C(N_a-1, j) (first minimum on ties).
inline AlignmentResult otam(const Matrix& cost) {
    detail::check_cost(cost);
    const std::size_t n = cost.rows(), m = cost.cols();
    Matrix c(n, m);
    for (std::size_t j = 0; j < m; ++j) c(0, j) = cost(0, j);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
            const double best = std::min({detail::at_or_inf(c, ii - 1, jj - 1), detail::at_or_inf(c, ii - 1, jj),
                                          detail::at_or_inf(c, ii, jj - 1)});
            c(i, j) = cost(i, j) + best;
        }
    }
    std::size_t end_col = 0;
    for (std::size_t j = 1; j < m; ++j) {
        if (c(n - 1, j) < c(n - 1, end_col)) end_col = j;
    }
    AlignmentResult r;
    r.path = detail::backtrack(c, {n - 1, end_col}, [](Cell x) { return x.i == 0; });
    r.distance = c(n - 1, end_col);
    r.cumulative = std::move(c);
    return r;
}

inline AlignmentResult align(const Matrix& cost, Measure measure) {
    return measure == Measure::dtw ? dtw(cost) : otam(cost);
}

inline double path_cost(const Matrix& cost, const WarpingPath& path) {
    double s = 0.0;
    for (const auto& cell : path) s += cost(cell.i, cell.j);
    return s;
}

// Exhaustive search over every monotone warping path that satisfies the
// measure's boundary rule. Used as the test oracle for dtw/otam; the otam
// rule matches the recursion above (a single cell in anchor row 0, any end
// column in the last row). Ties go to the lexicographically smallest path.
inline AlignmentResult brute_force_align(const Matrix& cost, Measure measure) {
    detail::check_cost(cost);
    constexpr std::size_t kMaxCells = 30;
    if (cost.rows() * cost.cols() > kMaxCells) {
        throw std::invalid_argument("brute_force_align: matrix exceeds " + std::to_string(kMaxCells) + " cells");
    }
    const std::size_t n = cost.rows(), m = cost.cols();

    WarpingPath best_path;
    double best = detail::kInf;
    WarpingPath cur;

    auto consider = [&] {
        const double d = path_cost(cost, cur);
        if (d < best || (d == best && cur < best_path)) {
            best = d;
            best_path = cur;
        }
    };

    auto visit = [&](auto&& self, Cell cell) -> void {
        cur.push_back(cell);
        const bool last_row = cell.i == n - 1;
        if (measure == Measure::dtw) {
            if (last_row && cell.j == m - 1) consider();
        } else if (last_row) {
            consider();
        }
        const bool row0_locked = measure == Measure::otam && cell.i == 0;
        if (cell.i + 1 < n && cell.j + 1 < m) self(self, Cell{cell.i + 1, cell.j + 1});
        if (cell.i + 1 < n) self(self, Cell{cell.i + 1, cell.j});
        if (cell.j + 1 < m && !row0_locked) self(self, Cell{cell.i, cell.j + 1});
        cur.pop_back();
    };

    if (measure == Measure::dtw) {
        visit(visit, Cell{0, 0});
    } else {
        for (std::size_t j = 0; j < m; ++j) visit(visit, Cell{0, j});
    }

    AlignmentResult r;
    r.path = std::move(best_path);
    r.distance = best;
    return r;
}

// Sum (or mean, when `normalize`) of similarities along the path.
inline double path_score(const Matrix& similarity, const WarpingPath& path, bool normalize) {
    double s = 0.0;
    for (const auto& cell : path) s += similarity(cell.i, cell.j);
    return normalize ? s / static_cast<double>(path.size()) : s;
}

// Aligns on cosine distance 1 - S and scores the chosen path on S.
inline AlignmentResult align_similarity(const Matrix& similarity, Measure measure, bool normalize) {
    Matrix cost = similarity;
    for (double& v : cost.flat()) v = 1.0 - v;
    AlignmentResult r = align(cost, measure);
    r.score = path_score(similarity, r.path, normalize);
    return r;
}

inline AlignmentResult alignment_score(const EmbeddingSequence& anchor, const EmbeddingSequence& candidate,
                                       Measure measure, bool normalize = true) {
    return align_similarity(similarity_matrix(anchor, candidate), measure, normalize);
}

}  // namespace tempclr
