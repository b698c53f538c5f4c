#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "tempclr/negatives.hpp"

using namespace tempclr;

namespace {

SegmentedPair make_pair(std::string id, std::size_t n_clips, SegmentMap segs) {
    SegmentedPair p;
    p.id = std::move(id);
    std::size_t n_caps = 0;
    for (const auto& s : segs) n_caps = std::max(n_caps, s.caption_index + 1);
    Matrix a(n_caps, 2, 1.0), b(n_clips, 2);
    for (std::size_t j = 0; j < n_clips; ++j) b(j, 0) = static_cast<double>(j + 1);
    p.anchor = {p.id + ":text", a};
    p.positive = {p.id + ":video", b};
    p.segments = std::move(segs);
    p.background_mask = compute_background_mask(n_clips, p.segments);
    return p;
}

bool is_permutation_of(std::vector<std::size_t> perm, std::vector<std::size_t> ref) {
    std::sort(perm.begin(), perm.end());
    std::sort(ref.begin(), ref.end());
    return perm == ref;
}

std::size_t block_of(const SegmentedPair& p, std::size_t clip) {
    for (std::size_t s = 0; s < p.segments.size(); ++s) {
        if (p.segments[s].contains(clip)) return s;
    }
    return p.segments.size();
}

}  // namespace

TEST(PermuteSegments, TwoBlocksSegOnly) {
    auto p = make_pair("p", 3, {{0, 0, 2}, {1, 2, 3}});
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        const auto n = permute_segments(p, false, rng);
        EXPECT_EQ(n.perm, (std::vector<std::size_t>{2, 0, 1}));
        EXPECT_EQ(n.strategy, Strategy::seg_only);
    }
}

TEST(PermuteSegments, TwoBlocksSegUnitEnumeratesIntraOrders) {
    auto p = make_pair("p", 3, {{0, 0, 2}, {1, 2, 3}});
    Rng rng(2);
    std::set<std::vector<std::size_t>> seen;
    for (int t = 0; t < 200; ++t) {
        const auto n = permute_segments(p, true, rng);
        EXPECT_EQ(n.strategy, Strategy::seg_unit);
        seen.insert(n.perm);
    }
    EXPECT_EQ(seen, (std::set<std::vector<std::size_t>>{{2, 0, 1}, {2, 1, 0}}));
}

TEST(PermuteSegments, IdentityOrderNeverReturned) {
    auto p = make_pair("p", 6, {{0, 0, 2}, {1, 2, 4}, {2, 4, 6}});
    Rng rng(3);
    for (int t = 0; t < 1000; ++t) {
        const auto n = permute_segments(p, false, rng);
        EXPECT_NE(n.perm, p.covered_clips());
        // intra-block order preserved
        for (std::size_t k = 0; k + 1 < n.perm.size(); k += 2) EXPECT_EQ(n.perm[k] + 1, n.perm[k + 1]);
    }
}

TEST(PermuteSegments, ExcludesBackground) {
    auto p = make_pair("p", 7, {{0, 1, 3}, {1, 4, 6}});
    Rng rng(4);
    const auto n = permute_segments(p, true, rng);
    EXPECT_TRUE(is_permutation_of(n.perm, p.covered_clips()));
}

TEST(PermuteSegments, DegenerateThrows) {
    auto p = make_pair("p", 4, {{0, 0, 4}});
    Rng rng(5);
    EXPECT_THROW(permute_segments(p, false, rng), DataError);
}

TEST(PermuteWithin, SingleSegmentInPlace) {
    auto p = make_pair("p", 3, {{0, 0, 3}});
    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        const auto n = permute_within_segments(p, rng);
        EXPECT_TRUE(is_permutation_of(n.perm, {0, 1, 2}));
        EXPECT_NE(n.perm, (std::vector<std::size_t>{0, 1, 2}));
    }
}

TEST(PermuteWithin, BlockBoundariesUnmoved) {
    auto p = make_pair("p", 5, {{0, 0, 2}, {1, 2, 4}, {2, 4, 5}});
    Rng rng(7);
    const auto covered = p.covered_clips();
    for (int t = 0; t < 300; ++t) {
        const auto n = permute_within_segments(p, rng);
        ASSERT_EQ(n.perm.size(), covered.size());
        for (std::size_t k = 0; k < covered.size(); ++k) EXPECT_EQ(block_of(p, n.perm[k]), block_of(p, covered[k]));
        EXPECT_NE(n.perm, covered);
    }
}

TEST(PermuteWithin, AllSingletonsThrows) {
    auto p = make_pair("p", 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
    Rng rng(8);
    EXPECT_THROW(permute_within_segments(p, rng), DataError);
}

TEST(PermuteAllUnits, TwoClipsAlwaysSwap) {
    auto p = make_pair("p", 2, {{0, 0, 2}});
    Rng rng(9);
    for (int t = 0; t < 50; ++t) EXPECT_EQ(permute_all_units(p, rng).perm, (std::vector<std::size_t>{1, 0}));
}

TEST(PermuteAllUnits, FiveClipsNeverIdentity) {
    auto p = make_pair("p", 5, {{0, 0, 5}});
    Rng rng(10);
    for (int t = 0; t < 1000; ++t) {
        const auto n = permute_all_units(p, rng);
        EXPECT_NE(n.perm, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
        EXPECT_TRUE(is_permutation_of(n.perm, {0, 1, 2, 3, 4}));
    }
}

TEST(PermuteAllUnits, SingleClipThrows) {
    auto p = make_pair("p", 1, {{0, 0, 1}});
    Rng rng(11);
    EXPECT_THROW(permute_all_units(p, rng), DataError);
}

TEST(SampleUnpaired, TwoPairCorpus) {
    std::vector<SegmentedPair> corpus{make_pair("p0", 3, {{0, 0, 3}}), make_pair("p1", 4, {{0, 0, 2}, {1, 3, 4}})};
    Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        const auto n = sample_unpaired(corpus, "p0", rng);
        EXPECT_EQ(n.source_id, "p1");
        EXPECT_EQ(n.perm, corpus[1].covered_clips());
    }
}

TEST(SampleUnpaired, NeverTheAnchor) {
    std::vector<SegmentedPair> corpus;
    for (int k = 0; k < 5; ++k) corpus.push_back(make_pair("p" + std::to_string(k), 3, {{0, 0, 3}}));
    Rng rng(13);
    std::set<std::string> seen;
    for (int t = 0; t < 400; ++t) {
        const auto n = sample_unpaired(corpus, "p2", rng);
        EXPECT_NE(n.source_id, "p2");
        seen.insert(n.source_id);
    }
    EXPECT_EQ(seen.size(), 4u);
}

TEST(SampleUnpaired, SinglePairThrows) {
    std::vector<SegmentedPair> corpus{make_pair("p0", 3, {{0, 0, 3}})};
    Rng rng(14);
    EXPECT_THROW(sample_unpaired(corpus, "p0", rng), DataError);
}

TEST(GenerateNegatives, DefaultCountSegUnit) {
    auto p = make_pair("p", 6, {{0, 0, 2}, {1, 2, 4}, {2, 4, 6}});
    std::vector<SegmentedPair> corpus{p};
    Rng rng(15);
    const auto negs = generate_negatives(p, corpus, Strategy::seg_unit, 32, rng);
    ASSERT_EQ(negs.size(), 32u);
    for (const auto& n : negs) {
        EXPECT_TRUE(is_permutation_of(n.perm, p.covered_clips()));
        EXPECT_NE(n.perm, p.covered_clips());
    }
}

TEST(GenerateNegatives, TwoSegmentSegOnlyRepeatsTheSwap) {
    auto p = make_pair("p", 2, {{0, 0, 1}, {1, 1, 2}});
    std::vector<SegmentedPair> corpus{p};
    Rng rng(16);
    const auto negs = generate_negatives(p, corpus, Strategy::seg_only, 4, rng);
    ASSERT_EQ(negs.size(), 4u);
    for (const auto& n : negs) EXPECT_EQ(n.perm, (std::vector<std::size_t>{1, 0}));
}

TEST(GenerateNegatives, FallbackExhaustedIsEmpty) {
    auto p = make_pair("p", 1, {{0, 0, 1}});
    std::vector<SegmentedPair> corpus{p};
    Rng rng(17);
    EXPECT_TRUE(generate_negatives(p, corpus, Strategy::seg_unit, 8, rng).empty());
    EXPECT_FALSE(has_negatives(p, Strategy::seg_unit, 1));
}

TEST(GenerateNegatives, SingleSegmentFallsBackToAllUnit) {
    auto p = make_pair("p", 4, {{0, 0, 4}});
    std::vector<SegmentedPair> corpus{p};
    Rng rng(18);
    const auto negs = generate_negatives(p, corpus, Strategy::seg_only, 5, rng);
    ASSERT_EQ(negs.size(), 5u);
    for (const auto& n : negs) EXPECT_EQ(n.strategy, Strategy::all_unit);
}

TEST(GenerateNegatives, JointSplitsWithOddRemainderToShuffles) {
    std::vector<SegmentedPair> corpus{make_pair("p0", 4, {{0, 0, 2}, {1, 2, 4}}), make_pair("p1", 3, {{0, 0, 3}})};
    Rng rng(19);
    const auto negs = generate_negatives(corpus[0], corpus, Strategy::joint, 7, rng);
    ASSERT_EQ(negs.size(), 7u);
    const auto shuffled = std::count_if(negs.begin(), negs.end(), [](const auto& n) { return n.strategy == Strategy::seg_unit; });
    const auto unpaired = std::count_if(negs.begin(), negs.end(), [](const auto& n) { return n.strategy == Strategy::unpaired; });
    EXPECT_EQ(shuffled, 4);
    EXPECT_EQ(unpaired, 3);
}

TEST(GenerateNegatives, VisualAnchorPermutesCaptions) {
    auto p = make_pair("p", 6, {{0, 0, 2}, {1, 2, 4}, {2, 4, 6}});
    std::vector<SegmentedPair> corpus{p};
    Rng rng(20);
    const auto negs = generate_negatives(p, corpus, Strategy::visual_anchor, 10, rng);
    ASSERT_EQ(negs.size(), 10u);
    for (const auto& n : negs) {
        EXPECT_TRUE(n.permutes_anchor());
        EXPECT_TRUE(is_permutation_of(n.perm, {0, 1, 2}));
        EXPECT_NE(n.perm, (std::vector<std::size_t>{0, 1, 2}));
        const auto view = materialize(p, n, corpus);
        EXPECT_EQ(view.clip_rows, p.covered_clips());
    }
}

TEST(GenerateNegatives, ReproducibleForSeed) {
    auto p = make_pair("p", 9, {{0, 0, 3}, {1, 3, 5}, {2, 6, 9}});
    std::vector<SegmentedPair> corpus{p, make_pair("q", 4, {{0, 0, 4}})};
    for (auto s : {Strategy::seg_only, Strategy::seg_unit, Strategy::within_seg, Strategy::all_unit, Strategy::unpaired,
                   Strategy::joint, Strategy::visual_anchor}) {
        Rng a(21), b(21);
        EXPECT_EQ(generate_negatives(p, corpus, s, 16, a), generate_negatives(p, corpus, s, 16, b));
    }
}

TEST(GenerateNegatives, ShufflesPreserveMultisetAndNeverIdentity) {
    Rng rng(22);
    for (int t = 0; t < 100; ++t) {
        // random disjoint segmentation of 3..10 clips
        const std::size_t n = 3 + rng() % 8;
        SegmentMap segs;
        std::size_t pos = rng() % 2, cap = 0;
        while (pos < n) {
            const std::size_t len = 1 + rng() % 3;
            if (pos + len > n) break;
            segs.push_back({cap++, pos, pos + len});
            pos += len + rng() % 2;
        }
        if (segs.empty()) continue;
        auto p = make_pair("p", n, segs);
        std::vector<SegmentedPair> corpus{p};
        for (auto s : {Strategy::seg_only, Strategy::seg_unit, Strategy::within_seg, Strategy::all_unit}) {
            for (const auto& neg : generate_negatives(p, corpus, s, 8, rng)) {
                EXPECT_TRUE(is_permutation_of(neg.perm, p.covered_clips()));
                EXPECT_NE(neg.perm, p.covered_clips());
                if (neg.strategy == Strategy::within_seg) {
                    const auto cov = p.covered_clips();
                    for (std::size_t k = 0; k < cov.size(); ++k) EXPECT_EQ(block_of(p, neg.perm[k]), block_of(p, cov[k]));
                }
            }
        }
    }
}

TEST(Strategy, CliNamesRoundTrip) {
    for (auto name : {"seg-only", "seg-unit", "within-seg", "all-unit", "unpaired", "joint", "visual-anchor"}) {
        EXPECT_EQ(to_string(parse_strategy(name)), name);
    }
    EXPECT_THROW(parse_strategy("seg_unit"), std::invalid_argument);
}
