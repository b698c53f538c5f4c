#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tempclr/model.hpp"

using namespace tempclr;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(d);
    for (auto& x : v) x = n(rng);
    return v;
}

// loss = <w, f(x)>, so d loss / d output = w
double probe(const ProjectionModel& m, Side side, const std::vector<double>& x, const std::vector<double>& w) {
    const auto y = m.forward(side, x);
    return dot(y, w);
}

void check_backward(ProjectionModel m, Side side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto x = random_vec(rng, m.input_dim());
    const auto w = random_vec(rng, m.output_dim());
    ProjectionModel::Trace trace;
    (void)m.forward(side, x, &trace);
    std::vector<double> grad(m.parameter_count(), 0.0);
    m.backward(side, trace, w, grad);
    const double h = 1e-6;
    for (std::size_t k = 0; k < m.parameter_count(); ++k) {
        const double keep = m.parameters()[k];
        m.parameters()[k] = keep + h;
        const double up = probe(m, side, x, w);
        m.parameters()[k] = keep - h;
        const double down = probe(m, side, x, w);
        m.parameters()[k] = keep;
        EXPECT_NEAR(grad[k], (up - down) / (2 * h), 1e-6) << "parameter " << k;
    }
}

}  // namespace

TEST(Projection, IdentityInitialisation) {
    const auto m = ProjectionModel::identity(4);
    const std::vector<double> x{1.5, -2.0, 0.0, 3.25};
    EXPECT_EQ(m.forward(Side::anchor, x), x);
    EXPECT_EQ(m.forward(Side::positive, x), x);
    EXPECT_EQ(m.parameter_count(), 4u * 4u + 4u);
}

TEST(Projection, TwinHeadsAreIndependent) {
    auto m = ProjectionModel::identity(3, true);
    EXPECT_EQ(m.parameter_count(), 2u * (9u + 3u));
    m.parameters()[0] = 2.0;  // first head, W(0,0)
    const std::vector<double> x{1, 1, 1};
    EXPECT_EQ(m.forward(Side::anchor, x)[0], 2.0);
    EXPECT_EQ(m.forward(Side::positive, x)[0], 1.0);
}

TEST(Projection, SeededInitialisationIsReproducible) {
    ModelSpec s{5, 7, 3, Activation::relu, false, 42};
    EXPECT_EQ(ProjectionModel(s), ProjectionModel(s));
    ModelSpec t = s;
    t.seed = 43;
    EXPECT_FALSE(ProjectionModel(s) == ProjectionModel(t));
}

TEST(Projection, RejectsWrongInputDim) {
    const auto m = ProjectionModel::identity(3);
    const std::vector<double> x{1, 2};
    EXPECT_THROW(m.forward(Side::anchor, x), DataError);
    EXPECT_THROW(ProjectionModel(ModelSpec{0, 0, 3}), std::invalid_argument);
}

TEST(Projection, BackwardSingleLayer) {
    auto m = ProjectionModel(ModelSpec{4, 0, 3, Activation::identity, false, 1});
    check_backward(m, Side::anchor, 2);
}

TEST(Projection, BackwardHiddenRelu) {
    auto m = ProjectionModel(ModelSpec{5, 6, 4, Activation::relu, false, 3});
    check_backward(m, Side::anchor, 4);
}

TEST(Projection, BackwardTwinPositiveHead) {
    auto m = ProjectionModel(ModelSpec{4, 5, 4, Activation::relu, true, 5});
    check_backward(m, Side::positive, 6);
    check_backward(m, Side::anchor, 7);
}

TEST(Projection, ProjectKeepsIdAndShape) {
    const auto m = ProjectionModel(ModelSpec{3, 0, 2, Activation::identity, false, 8});
    EmbeddingSequence s{"s", Matrix{{1, 2, 3}, {4, 5, 6}}};
    const auto p = m.project(s, Side::anchor);
    EXPECT_EQ(p.id, "s");
    EXPECT_EQ(p.size(), 2u);
    EXPECT_EQ(p.dim(), 2u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    std::vector<double> p{0.5, -1.0};
    const std::vector<double> g{0.0, 0.0};
    AdamState st(2);
    adam_step(p, g, st, AdamConfig{});
    EXPECT_EQ(p, (std::vector<double>{0.5, -1.0}));
    EXPECT_EQ(st.t, 1);
}

TEST(Adam, FirstStepIsLrTimesSign) {
    std::vector<double> p{0.0, 0.0, 0.0};
    const std::vector<double> g{3.0, -0.02, 1e3};
    AdamState st(3);
    AdamConfig c;
    c.lr = 0.01;
    adam_step(p, g, st, c);
    EXPECT_NEAR(p[0], -0.01, 1e-8);
    EXPECT_NEAR(p[1], 0.01, 1e-6);
    EXPECT_NEAR(p[2], -0.01, 1e-8);
}

TEST(Adam, ThreeConstantSteps) {
    std::vector<double> p{0.0};
    const std::vector<double> g{1.0};
    AdamState st(1);
    AdamConfig c;
    c.lr = 0.1;
    for (int k = 0; k < 3; ++k) adam_step(p, g, st, c);
    EXPECT_NEAR(p[0], -0.3, 1e-6);
}

TEST(Adam, HandIteratedRecurrence) {
    // varying gradient: compare against the textbook recurrence written out
    const std::vector<double> grads{0.5, -1.0, 2.0, 0.25};
    std::vector<double> p{1.0};
    AdamState st(1);
    AdamConfig c;
    c.lr = 0.05;
    double x = 1.0, m = 0.0, v = 0.0;
    for (std::size_t t = 1; t <= grads.size(); ++t) {
        adam_step(p, std::vector<double>{grads[t - 1]}, st, c);
        m = 0.9 * m + 0.1 * grads[t - 1];
        v = 0.98 * v + 0.02 * grads[t - 1] * grads[t - 1];
        const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.98, t));
        x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        EXPECT_NEAR(p[0], x, 1e-12);
    }
}

TEST(Adam, ShapeMismatchThrows) {
    std::vector<double> p{0.0, 0.0};
    const std::vector<double> g{1.0};
    AdamState st(2);
    EXPECT_THROW(adam_step(p, g, st, AdamConfig{}), std::invalid_argument);
}
