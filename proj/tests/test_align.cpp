#include <random>

#include <gtest/gtest.h>

#include "tempclr/align.hpp"

using namespace tempclr;

namespace {

Matrix random_cost(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Matrix c(n, m);
    for (double& x : c.flat()) x = u(rng);
    return c;
}

void expect_monotone(const WarpingPath& p) {
    ASSERT_FALSE(p.empty());
    for (std::size_t k = 1; k < p.size(); ++k) {
        const auto di = p[k].i - p[k - 1].i, dj = p[k].j - p[k - 1].j;
        EXPECT_TRUE((di == 1 && dj == 1) || (di == 1 && dj == 0) || (di == 0 && dj == 1))
            << "step " << k << " is (" << di << "," << dj << ")";
    }
}

WarpingPath diag(std::size_t n) {
    WarpingPath p;
    for (std::size_t k = 0; k < n; ++k) p.push_back({k, k});
    return p;
}

}  // namespace

TEST(Dtw, PerfectDiagonal) {
    const auto r = dtw(Matrix{{0, 1}, {1, 0}});
    EXPECT_EQ(r.distance, 0.0);
    EXPECT_EQ(r.path, diag(2));
}

TEST(Dtw, SingleRowCoversAllColumns) {
    const auto r = dtw(Matrix{{1, 1, 1}});
    EXPECT_EQ(r.distance, 3.0);
    EXPECT_EQ(r.path, (WarpingPath{{0, 0}, {0, 1}, {0, 2}}));
}

TEST(Dtw, HandWorkedThreeByThree) {
    const Matrix d{{0.2, 0.9, 0.8}, {0.7, 0.1, 0.9}, {0.8, 0.7, 0.3}};
    const auto r = dtw(d);
    EXPECT_NEAR(r.distance, 0.6, 1e-12);
    EXPECT_EQ(r.path, diag(3));
    EXPECT_NEAR(brute_force_align(d, Measure::dtw).distance, 0.6, 1e-12);
}

TEST(Dtw, EmptyThrows) {
    EXPECT_THROW(dtw(Matrix{}), DataError);
    EXPECT_THROW(otam(Matrix(0, 3)), DataError);
}

TEST(Dtw, NonFiniteThrows) {
    EXPECT_THROW(dtw(Matrix{{0, std::numeric_limits<double>::infinity()}}), NumericalError);
}

TEST(Otam, FreeStartAndEnd) {
    const auto r = otam(Matrix{{1, 0, 1}});
    EXPECT_EQ(r.distance, 0.0);
    EXPECT_EQ(r.path, (WarpingPath{{0, 1}}));
}

TEST(Otam, EmbeddedDiagonal) {
    const auto r = otam(Matrix{{1, 0, 1, 1}, {1, 1, 0, 1}});
    EXPECT_EQ(r.distance, 0.0);
    EXPECT_EQ(r.path, (WarpingPath{{0, 1}, {1, 2}}));
}

TEST(Otam, ZeroDiagonalMatchesDtw) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        auto d = random_cost(rng, 4, 4);
        for (std::size_t k = 0; k < 4; ++k) d(k, k) = 0.0;
        const auto a = dtw(d), b = otam(d);
        EXPECT_EQ(a.distance, 0.0);
        EXPECT_EQ(b.distance, 0.0);
        EXPECT_EQ(a.path, b.path);
    }
}

TEST(BruteForce, SingleCell) {
    EXPECT_EQ(brute_force_align(Matrix{{0}}, Measure::dtw).distance, 0.0);
    EXPECT_EQ(brute_force_align(Matrix{{0}}, Measure::otam).distance, 0.0);
}

TEST(BruteForce, SizeBound) {
    EXPECT_THROW(brute_force_align(Matrix(5, 7), Measure::dtw), std::invalid_argument);
}

TEST(BruteForce, AgreesWithDtwOnRandom5x6) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
        const auto d = random_cost(rng, 5, 6);
        const auto fast = dtw(d), slow = brute_force_align(d, Measure::dtw);
        EXPECT_NEAR(fast.distance, slow.distance, 1e-9);
        EXPECT_EQ(fast.path, slow.path);
    }
}

TEST(BruteForce, AgreesWithOtamOnRandom4x7) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
        const auto d = random_cost(rng, 4, 7);
        const auto fast = otam(d), slow = brute_force_align(d, Measure::otam);
        EXPECT_NEAR(fast.distance, slow.distance, 1e-9);
        EXPECT_EQ(fast.path, slow.path);
    }
}

// Integer-valued costs force ties; the recursion's tie-break and the oracle's
// lexicographic rule must still select the same path.
TEST(BruteForce, AgreesOnTiedMatrices) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 5, m = 1 + rng() % 6;
        Matrix d(n, m);
        for (double& x : d.flat()) x = static_cast<double>(rng() % 2);
        for (auto measure : {Measure::dtw, Measure::otam}) {
            const auto fast = align(d, measure), slow = brute_force_align(d, measure);
            EXPECT_EQ(fast.distance, slow.distance);
            EXPECT_EQ(path_cost(d, fast.path), fast.distance);
        }
    }
}

TEST(Paths, StructuralInvariants) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 9;
        const auto d = random_cost(rng, n, m);
        const auto r = dtw(d);
        expect_monotone(r.path);
        EXPECT_EQ(r.path.front(), (Cell{0, 0}));
        EXPECT_EQ(r.path.back(), (Cell{n - 1, m - 1}));
        std::vector<bool> rows(n), cols(m);
        for (auto c : r.path) rows[c.i] = cols[c.j] = true;
        EXPECT_EQ(std::count(rows.begin(), rows.end(), true), static_cast<long>(n));
        EXPECT_EQ(std::count(cols.begin(), cols.end(), true), static_cast<long>(m));
        EXPECT_NEAR(path_cost(d, r.path), r.distance, 1e-9);

        const auto o = otam(d);
        expect_monotone(o.path);
        EXPECT_EQ(o.path.front().i, 0u);
        EXPECT_EQ(o.path.back().i, n - 1);
        std::vector<bool> orows(n);
        for (auto c : o.path) orows[c.i] = true;
        EXPECT_EQ(std::count(orows.begin(), orows.end(), true), static_cast<long>(n));
        EXPECT_NEAR(path_cost(d, o.path), o.distance, 1e-9);
    }
}

TEST(Paths, OtamNeverWorseOnSquare) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 7;
        const auto d = random_cost(rng, n, n);
        EXPECT_LE(otam(d).distance, dtw(d).distance + 1e-12);
    }
}

TEST(AlignmentScore, SelfAlignmentRaw) {
    EmbeddingSequence a{"a", Matrix{{1, 0}, {0, 1}}};
    const auto r = alignment_score(a, a, Measure::dtw, false);
    EXPECT_DOUBLE_EQ(r.score, 2.0);
    EXPECT_EQ(r.path, diag(2));
}

TEST(AlignmentScore, SelfAlignmentNormalized) {
    std::mt19937_64 rng(8);
    for (std::size_t n = 1; n <= 8; ++n) {
        Matrix m(n, 4);
        for (double& x : m.flat()) x = std::normal_distribution<double>(0, 1)(rng);
        EmbeddingSequence a{"a", m};
        EXPECT_NEAR(alignment_score(a, a, Measure::dtw).score, 1.0, 1e-12);
    }
}

TEST(AlignmentScore, SwappedBasisOracle) {
    EmbeddingSequence a{"a", Matrix{{1, 0}, {0, 1}}}, b{"b", Matrix{{0, 1}, {1, 0}}};
    const auto r = alignment_score(a, b, Measure::dtw, false);
    Matrix cost(2, 2);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) cost(i, j) = 1.0 - cosine_similarity(a.unit(i), b.unit(j));
    }
    const auto oracle = brute_force_align(cost, Measure::dtw);
    // the diagonal and the detour through (0,1) both cost 2; the diagonal wins the tie
    EXPECT_DOUBLE_EQ(r.distance, oracle.distance);
    EXPECT_DOUBLE_EQ(r.distance, 2.0);
    EXPECT_EQ(r.path.size(), 2u);
    EXPECT_DOUBLE_EQ(r.score, 0.0);
}

TEST(AlignmentScore, IdentityPermutationLeavesScoreUnchanged) {
    std::mt19937_64 rng(10);
    Matrix ma(3, 4), mb(5, 4);
    for (double& x : ma.flat()) x = std::normal_distribution<double>(0, 1)(rng);
    for (double& x : mb.flat()) x = std::normal_distribution<double>(0, 1)(rng);
    EmbeddingSequence a{"a", ma}, b{"b", mb};
    std::vector<std::size_t> id{0, 1, 2, 3, 4};
    for (auto m : {Measure::dtw, Measure::otam}) {
        EXPECT_EQ(alignment_score(a, b, m).score, alignment_score(a, b.select(id), m).score);
    }
}

TEST(Measure, Parse) {
    EXPECT_EQ(parse_measure("dtw"), Measure::dtw);
    EXPECT_EQ(parse_measure("otam"), Measure::otam);
    EXPECT_THROW(parse_measure("soft-dtw"), std::invalid_argument);
}
