#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tempclr/synth.hpp"
#include "tempclr/train.hpp"

using namespace tempclr;

namespace {

SynthCorpus small_corpus(std::uint64_t seed = 0) {
    SynthConfig c;
    c.n_tasks = 3;
    c.videos_per_task = 4;
    c.segments_per_video = 3;
    c.clips_min = 2;
    c.clips_max = 3;
    c.dim = 8;
    c.confuser_prob = 0.2;
    c.seed = seed;
    return gen_corpus(c);
}

TrainConfig quick_config() {
    TrainConfig t;
    t.lr = 0.01;
    t.epochs = 3;
    t.batch_pairs = 4;
    t.neg_count = 4;
    return t;
}

}  // namespace

TEST(Fit, ZeroLearningRateKeepsParameters) {
    const auto c = small_corpus();
    const auto init = ProjectionModel::identity(8);
    auto cfg = quick_config();
    cfg.lr = 0.0;
    const auto r = fit(c.train, init, cfg);
    EXPECT_TRUE(r.model == init);
    EXPECT_EQ(r.loss_curve.size(), 3u);
}

TEST(Fit, SinglePairSingleEpoch) {
    const auto c = small_corpus();
    std::vector<SegmentedPair> one{c.train.front()};
    auto cfg = quick_config();
    cfg.epochs = 1;
    cfg.neg_count = 2;
    const auto r = fit(one, ProjectionModel::identity(8), cfg);
    ASSERT_EQ(r.loss_curve.size(), 1u);
    EXPECT_TRUE(std::isfinite(r.loss_curve[0]));
}

TEST(Fit, NoTrainablePairs) {
    SegmentedPair p;
    p.id = "p";
    p.anchor = {"a", Matrix{{1, 0}}};
    p.positive = {"b", Matrix{{1, 0}}};
    p.segments = {{0, 0, 1}};
    p.background_mask = {false};
    std::vector<SegmentedPair> corpus{p};
    try {
        fit(corpus, ProjectionModel::identity(2), quick_config());
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("no trainable pairs"), std::string::npos);
    }
}

TEST(Fit, DimensionMismatch) {
    const auto c = small_corpus();
    EXPECT_THROW(fit(c.train, ProjectionModel::identity(5), quick_config()), DataError);
}

TEST(Fit, LossDecreasesOnSyntheticCorpus) {
    SynthConfig sc;
    sc.confuser_prob = 0.3;
    sc.nuisance_scale = 1.0;
    sc.content_dim = 24;
    const auto c = gen_corpus(sc);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.lr = 0.005;
    const auto r = fit(c.train, ProjectionModel::identity(sc.dim), cfg);
    ASSERT_EQ(r.loss_curve.size(), 20u);
    EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
}

TEST(Fit, BitForBitReproducible) {
    const auto c = small_corpus(3);
    auto cfg = quick_config();
    cfg.seed = 11;
    for (auto s : {Strategy::seg_unit, Strategy::joint, Strategy::unpaired}) {
        cfg.neg_strategy = s;
        const auto a = fit(c.train, ProjectionModel::identity(8), cfg);
        const auto b = fit(c.train, ProjectionModel::identity(8), cfg);
        EXPECT_EQ(a.loss_curve, b.loss_curve);
        EXPECT_TRUE(a.model == b.model);
    }
    cfg.seed = 12;
    const auto other = fit(c.train, ProjectionModel::identity(8), cfg);
    const auto base = fit(c.train, ProjectionModel::identity(8), [&] { auto k = cfg; k.seed = 11; return k; }());
    EXPECT_NE(other.loss_curve, base.loss_curve);
}

TEST(Fit, CosineScheduleAndHook) {
    const auto c = small_corpus();
    auto cfg = quick_config();
    cfg.schedule = Schedule::cosine;
    cfg.eval_every = 1;
    int calls = 0;
    const auto r = fit(c.train, ProjectionModel::identity(8), cfg, [&](const ProjectionModel&) {
        ++calls;
        return std::map<std::string, double>{{"x", 1.0}};
    });
    EXPECT_EQ(calls, 3);
    ASSERT_EQ(r.snapshots.size(), 3u);
    EXPECT_EQ(r.snapshots[2].epoch, 3);
}

TEST(Fit, InvalidConfig) {
    const auto c = small_corpus();
    auto cfg = quick_config();
    cfg.epochs = 0;
    EXPECT_THROW(fit(c.train, ProjectionModel::identity(8), cfg), std::invalid_argument);
    cfg = quick_config();
    cfg.lr = -1.0;
    EXPECT_THROW(fit(c.train, ProjectionModel::identity(8), cfg), std::invalid_argument);
}

// Central differences of the batch objective against the analytic gradient,
// with candidate paths re-solved at every evaluation.
TEST(EvaluateBatch, GradientMatchesFiniteDifference) {
    int checked_batches = 0;
    for (std::uint64_t seed = 0; checked_batches < 20 && seed < 60; ++seed) {
        const auto c = small_corpus(seed);
        Rng rng(seed);
        ProjectionModel model(ModelSpec{8, 6, 5, Activation::relu, seed % 2 == 1, seed});
        std::vector<BatchItem> items;
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& p = c.train[k];
            items.push_back({&p, generate_negatives(p, c.train, Strategy::joint, 3, rng)});
        }
        LossConfig cfg;
        cfg.tau = 0.5;
        const auto base = evaluate_batch(model, items, c.train, cfg, true, true);
        const double h = 1e-6;
        bool tie = false;
        double worst = 0.0;
        for (std::size_t k = 0; k < model.parameter_count() && !tie; ++k) {
            const double keep = model.parameters()[k];
            model.parameters()[k] = keep + h;
            const auto up = evaluate_batch(model, items, c.train, cfg, true, false);
            model.parameters()[k] = keep - h;
            const auto down = evaluate_batch(model, items, c.train, cfg, true, false);
            model.parameters()[k] = keep;
            if (up.paths != base.paths || down.paths != base.paths) {
                tie = true;
                break;
            }
            const double fd = (up.loss - down.loss) / (2 * h);
            const double g = base.grad[k];
            worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6}));
        }
        if (tie) continue;
        ++checked_batches;
        EXPECT_LE(worst, 1e-3) << "seed " << seed;
    }
    EXPECT_EQ(checked_batches, 20);
}

TEST(VideoOnly, TwoViewSplit) {
    LabeledVideo v{"v", "a", {"v", Matrix{{0}, {1}, {2}, {3}, {4}}}};
    const auto p = make_video_only_pair(v);
    EXPECT_EQ(p.anchor.size(), 2u);
    EXPECT_EQ(p.positive.size(), 2u);
    EXPECT_EQ(p.anchor.unit(1)[0], 2.0);
    EXPECT_EQ(p.positive.unit(1)[0], 3.0);
    EXPECT_EQ(p.segments, (SegmentMap{{0, 0, 1}, {1, 1, 2}}));
    EXPECT_NO_THROW(validate_pair(p));
    LabeledVideo short_video{"s", "a", {"s", Matrix{{0}, {1}, {2}}}};
    EXPECT_THROW(make_video_only_pair(short_video), DataError);
}

TEST(VideoOnly, TrainsAndIsReproducible) {
    FewShotSynthConfig fc;
    fc.n_classes = 4;
    fc.base_classes = 2;
    fc.videos_per_class = 5;
    fc.frames_min = 1;
    fc.frames_max = 2;
    fc.dim = 8;
    const auto fs = gen_fewshot_corpus(fc);
    auto cfg = quick_config();
    cfg.neg_strategy = Strategy::all_unit;
    const auto a = fit_video_only(fs.base, ProjectionModel::identity(8), cfg);
    const auto b = fit_video_only(fs.base, ProjectionModel::identity(8), cfg);
    EXPECT_EQ(a.loss_curve, b.loss_curve);
    for (double l : a.loss_curve) EXPECT_TRUE(std::isfinite(l));
}

// Shuffled frame order must actually change the objective, or nothing trains.
TEST(VideoOnly, ShuffledFramesCarryGradient) {
    FewShotSynthConfig fc;
    fc.n_classes = 2;
    fc.base_classes = 2;
    fc.videos_per_class = 3;
    fc.dim = 8;
    fc.frame_noise = 0.3;
    const auto fs = gen_fewshot_corpus(fc);
    std::vector<SegmentedPair> pairs;
    for (const auto& v : fs.base) pairs.push_back(make_video_only_pair(v));
    Rng rng(1);
    std::vector<BatchItem> items{{&pairs[0], generate_negatives(pairs[0], pairs, Strategy::all_unit, 8, rng,
                                                                NegativeOptions{true})}};
    LossConfig lc;
    const auto obj = evaluate_batch(ProjectionModel::identity(8), items, pairs, lc, false, true);
    EXPECT_LT(obj.loss, lc.w_seq * std::log(9.0) - 1e-3);
    double g2 = 0.0;
    for (double g : obj.grad) g2 += g * g;
    EXPECT_GT(g2, 1e-8);
}
