#include <gtest/gtest.h>

#include "srgof/kernels.hpp"
#include "srgof/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace srgof;

namespace {

Sample rows(std::initializer_list<std::initializer_list<double>> values) {
    Sample s(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : values) {
        Eigen::Index j = 0;
        for (double v : r) s(i, j++) = v;
        ++i;
    }
    return s;
}

Sample random_sample(Rng& rng, Eigen::Index n, Eigen::Index d, bool unit_cube) {
    Sample s(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) s(i, j) = unit_cube ? rng.uniform() : rng.normal();
    return s;
}

}  // namespace

TEST(Gaussian, ScalarValues) {
    const double origin[] = {0.0, 0.0};
    EXPECT_EQ(eval_gaussian(origin, origin, 1.0), 1.0);

    const double a[] = {0.0}, b[] = {2.0};
    EXPECT_NEAR(eval_gaussian(a, b, 2.0), std::exp(-1.0), 1e-15);

    const double ones[] = {1.0, 1.0};
    EXPECT_NEAR(eval_gaussian(ones, origin, 1.0), std::exp(-1.0), 1e-15);
}

TEST(Gaussian, RejectsBadInput) {
    const double a[] = {0.0}, b[] = {0.0, 1.0};
    EXPECT_THROW(eval_gaussian(a, b, 1.0), InputError);
    EXPECT_THROW(eval_gaussian(a, a, 0.0), ConfigError);
    EXPECT_THROW(eval_gaussian(a, a, -1.0), ConfigError);
}

TEST(Sobolev, ScalarValues) {
    const double a[] = {0.5}, b[] = {0.75};
    EXPECT_EQ(eval_sobolev(a, b), 0.5);
    const double c[] = {0.2, 0.9}, d[] = {0.4, 0.3};
    EXPECT_NEAR(eval_sobolev(c, d), 0.06, 1e-15);
    const double z[] = {0.0, 0.0}, w[] = {0.7, 0.1};
    EXPECT_EQ(eval_sobolev(z, w), 0.0);
}

TEST(Sobolev, CubeValidation) {
    const double inside[] = {1.0 + 5e-13}, outside[] = {1.001}, neg[] = {-0.1}, ok[] = {0.5};
    EXPECT_NO_THROW(eval_sobolev(inside, ok));
    EXPECT_THROW(eval_sobolev(outside, ok), InputError);
    EXPECT_THROW(eval_sobolev(ok, neg), InputError);
}

TEST(Gram, SmallBlocks) {
    const auto one = KernelSpec::gaussian(1.0, 1);
    const Sample z = rows({{0.0}});
    EXPECT_EQ(gram(one, z, z).values(0, 0), 1.0);

    const Sample r = rows({{0.0}, {1.0}});
    const Matrix g = gram(one, r, z).values;
    ASSERT_EQ(g.rows(), 2);
    ASSERT_EQ(g.cols(), 1);
    EXPECT_EQ(g(0, 0), 1.0);
    EXPECT_NEAR(g(1, 0), std::exp(-0.5), 1e-15);

    const Sample s = rows({{0.5}, {1.0}});
    const Matrix k = gram(KernelSpec::sobolev(1), s, s).values;
    EXPECT_EQ(k(0, 0), 0.5);
    EXPECT_EQ(k(0, 1), 0.5);
    EXPECT_EQ(k(1, 0), 0.5);
    EXPECT_EQ(k(1, 1), 1.0);
}

TEST(Gram, DimensionMismatch) {
    const Sample a = rows({{0.0}}), b = rows({{0.0, 1.0}});
    EXPECT_THROW(gram_matrix(KernelSpec::gaussian(1.0, 1), a, b), InputError);
}

TEST(Gram, TransposeSymmetryIsExact) {
    Rng rng(7);
    for (bool sob : {false, true}) {
        const KernelSpec k = sob ? KernelSpec::sobolev(3) : KernelSpec::gaussian(0.7, 3);
        const Sample a = random_sample(rng, 6, 3, true), b = random_sample(rng, 4, 3, true);
        const Matrix ab = gram_matrix(k, a, b), ba = gram_matrix(k, b, a);
        EXPECT_TRUE((ab - ba.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Matrix aa = gram_matrix(k, a, a);
        EXPECT_TRUE((aa - aa.transpose()).cwiseAbs().maxCoeff() == 0.0);
        EXPECT_TRUE((aa - gram_matrix(k, a)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST(Gram, PositiveSemidefiniteOnRandomSamples) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const bool sob = trial % 2 == 1;
        const auto n = static_cast<Eigen::Index>(2 + trial % 9);
        const KernelSpec k = sob ? KernelSpec::sobolev(2) : KernelSpec::gaussian(0.1 + rng.uniform(), 2);
        const Matrix g = gram_matrix(k, random_sample(rng, n, 2, sob));
        const Eigen::SelfAdjointEigenSolver<Matrix> es(g);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
    }
}

TEST(Gram, Diagonals) {
    Rng rng(3);
    const Sample s = random_sample(rng, 8, 3, true);
    const Matrix gg = gram_matrix(KernelSpec::gaussian(2.0, 3), s);
    const Matrix gs = gram_matrix(KernelSpec::sobolev(3), s);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        EXPECT_EQ(gg(i, i), 1.0);
        EXPECT_EQ(gs(i, i), s(i, 0) * s(i, 1) * s(i, 2));
    }
}

TEST(MedianHeuristic, Examples) {
    EXPECT_EQ(median_heuristic(rows({{0.0}, {1.0}, {2.0}})), 1.0);
    EXPECT_EQ(median_heuristic(rows({{0.0}, {1.0}})), 1.0);
    EXPECT_EQ(median_heuristic(rows({{0.0, 0.0}, {3.0, 4.0}})), 25.0);
    // Six pairs {1,4,9,1,4,1}: central order statistics 1 and 4.
    EXPECT_EQ(median_heuristic(rows({{0.0}, {1.0}, {2.0}, {3.0}})), 2.5);
}

TEST(MedianHeuristic, DegeneratePool) {
    EXPECT_THROW(median_heuristic(rows({{1.0}, {1.0}, {1.0}})), DegenerateError);
    EXPECT_THROW(median_heuristic(rows({{1.0}})), InputError);
}

TEST(MedianHeuristic, RowOrderInvariant) {
    Rng rng(5);
    Sample s = random_sample(rng, 31, 4, false);
    const double base = median_heuristic(s);
    for (int t = 0; t < 5; ++t) {
        const auto p = rng.permutation(static_cast<std::size_t>(s.rows()));
        Sample shuffled(s.rows(), s.cols());
        for (Eigen::Index i = 0; i < s.rows(); ++i) shuffled.row(i) = s.row(p[static_cast<std::size_t>(i)]);
        EXPECT_EQ(median_heuristic(shuffled), base);
    }
}

TEST(NullEmbedding, ClosedForms) {
    const double zero[] = {0.0};
    EXPECT_NEAR(gaussian_null_embedding(1.0, 1, zero).first, std::sqrt(0.5), 1e-15);
    const double zz[] = {0.0, 0.0};
    EXPECT_NEAR(gaussian_null_embedding(2.0, 2, zz).second, 0.5, 1e-15);
    EXPECT_NEAR(gaussian_null_embedding(1e12, 1, zero).first, 1.0, 1e-9);
}

// Averages of K(x, Y) and K(Y, Y') with Y, Y' ~ N(0, I_d) against the closed forms.
TEST(NullEmbedding, MatchesMonteCarlo) {
    struct Case {
        double h;
        std::size_t d;
        std::vector<double> x;
    };
    const Case cases[] = {{1.0, 1, {0.0}}, {2.0, 2, {0.5, -1.0}}, {0.5, 3, {1.0, 0.0, 0.3}}};
    Rng rng(2024);
    const int draws = 1000000;
    for (const auto& c : cases) {
        const auto [mu_x, norm_sq] = gaussian_null_embedding(c.h, c.d, c.x);
        double s1 = 0, s1sq = 0, s2 = 0, s2sq = 0;
        std::vector<double> y(c.d), yp(c.d);
        for (int t = 0; t < draws; ++t) {
            for (std::size_t k = 0; k < c.d; ++k) {
                y[k] = rng.normal();
                yp[k] = rng.normal();
            }
            const double k1 = eval_gaussian(c.x, y, c.h);
            const double k2 = eval_gaussian(y, yp, c.h);
            s1 += k1;
            s1sq += k1 * k1;
            s2 += k2;
            s2sq += k2 * k2;
        }
        const double m1 = s1 / draws, m2 = s2 / draws;
        const double se1 = std::sqrt((s1sq / draws - m1 * m1) / draws);
        const double se2 = std::sqrt((s2sq / draws - m2 * m2) / draws);
        EXPECT_LE(std::abs(m1 - mu_x), 3 * se1) << "h=" << c.h << " d=" << c.d;
        EXPECT_LE(std::abs(m2 - norm_sq), 3 * se2) << "h=" << c.h << " d=" << c.d;
    }
}
