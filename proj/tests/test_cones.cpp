#include "mcarma/cones.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mcarma;

TEST(Cone, OrthantMembership) {
    const auto c = ConeSpec::orthant(3);
    Mat x(3, 1);
    x << 1, 0, 2;
    EXPECT_TRUE(contains(c, x));
    x(1) = -1e-6;
    EXPECT_FALSE(contains(c, x));
    EXPECT_TRUE(contains(c, x, 1e-5));
    EXPECT_THROW(contains(c, Mat::Zero(2, 1)), DimensionError);
}

TEST(Cone, PsdMembershipAndAsymmetry) {
    const auto c = ConeSpec::psd(2);
    Mat x(2, 2);
    x << 2, 1, 1, 1;
    const auto m = contains(c, x);
    EXPECT_TRUE(m.inside);
    EXPECT_NEAR(m.margin, (3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
    x(0, 1) = 1.5;
    EXPECT_FALSE(contains(c, x));
    Mat y(2, 2);
    y << 1, 2, 2, 1;
    EXPECT_FALSE(contains(c, y));
}

TEST(Cone, ProductCone) {
    const auto c = ConeSpec::product(ConeSpec::psd(2), 2);
    EXPECT_EQ(c.copies, 2);
    Mat x = Mat::Zero(4, 2);
    x.topRows(2).setIdentity();
    x.bottomRows(2) << 1, 0, 0, -1;
    EXPECT_FALSE(contains(c, x));
    x(3, 1) = 0.5;
    EXPECT_TRUE(contains(c, x));
    EXPECT_THROW(ConeSpec::psd(0), std::invalid_argument);
}

TEST(PositiveOperator, OrthantExactWithWitness) {
    const auto c = ConeSpec::orthant(2);
    Mat r(2, 2);
    r << 1, 0.5, 0, 2;
    EXPECT_EQ(is_positive_operator(LinOpNM::general(2, 1, r), c).status, VerdictStatus::CertifiedPositive);
    r(0, 1) = -0.1;
    const auto v = is_positive_operator(LinOpNM::general(2, 1, r), c);
    ASSERT_TRUE(v.refuted());
    ASSERT_TRUE(v.witness);
    // the witness really is mapped outside the cone
    EXPECT_LT((r * v.witness->element).minCoeff(), 0.0);
}

TEST(PositiveOperator, ConjugationCertifiedNegationRefuted) {
    std::mt19937_64 g(11);
    const auto c = ConeSpec::psd(3);
    const auto conj = LinOpNM::conjugation_sum({oracle::random_matrix(g, 3, 3), oracle::random_matrix(g, 3, 3)});
    EXPECT_EQ(is_positive_operator(conj, c).status, VerdictStatus::CertifiedPositive);
    const auto neg = LinOpNM::general(3, 3, -Mat::Identity(9, 9));
    const auto v = is_positive_operator(neg, c);
    ASSERT_TRUE(v.refuted());
    EXPECT_FALSE(contains(c, neg(v.witness->element)));
}

TEST(PositiveOperator, SampledPositiveForUntaggedPositiveMap) {
    // x -> trace(x) I is positive but not tagged
    const auto op = LinOpNM::from_function(2, 2, [](const Mat& x) { return Mat(x.trace() * Mat::Identity(2, 2)); });
    const auto v = is_positive_operator(op, ConeSpec::psd(2), {500, {3, 0}});
    EXPECT_EQ(v.status, VerdictStatus::SampledPositive);
    EXPECT_GT(v.samples, 500u);
}

TEST(QuasiPositive, MetzlerCriterion) {
    const auto c = ConeSpec::orthant(2);
    Mat r(2, 2);
    r << -3, 1, 0.5, -2;
    EXPECT_TRUE(is_quasi_positive(LinOpNM::general(2, 1, r), c).positive());
    r(1, 0) = -0.5;
    const auto v = is_quasi_positive(LinOpNM::general(2, 1, r), c);
    ASSERT_TRUE(v.refuted());
    ASSERT_TRUE(v.witness && v.witness->direction);
    EXPECT_LT((v.witness->direction->transpose() * r * v.witness->element)(0, 0), 0.0);
}

TEST(QuasiPositive, LyapunovCertifiedAndNegatedConjugationSampled) {
    std::mt19937_64 g(12);
    const auto c = ConeSpec::psd(2);
    EXPECT_EQ(is_quasi_positive(LinOpNM::lyapunov(oracle::random_matrix(g, 2, 2)), c).status,
              VerdictStatus::CertifiedPositive);
    // -conjugation with a rank-two generator violates <A u, v> >= 0 for orthogonal rank-one u, v
    const auto bad = LinOpNM::conjugation(Mat::Identity(2, 2) + oracle::random_matrix(g, 2, 2)).scaled(-1.0);
    const auto v = is_quasi_positive(bad, c, {400, {4, 0}});
    ASSERT_TRUE(v.refuted());
    const Mat img = bad(v.witness->element);
    EXPECT_LT(frob(img, *v.witness->direction), 0.0);
}

TEST(QuasiPositive, ExponentialStaysPositive) {
    // e^{tA} for a Lyapunov-form generator is a conjugation by e^{ta}
    std::mt19937_64 g(13);
    const Mat a = oracle::random_matrix(g, 3, 3);
    const auto L = LinOpNM::lyapunov(a);
    for (double t : {0.1, 1.0, 3.0}) {
        const auto E = LinOpNM::general(3, 3, expm(t * L.rep()));
        const auto v = is_positive_operator(E, ConeSpec::psd(3), {300, {5, 0}});
        EXPECT_TRUE(v.positive()) << t;
    }
}

TEST(Verdict, CombineAndJson) {
    const auto a = PositivityVerdict::certified("x");
    auto b = PositivityVerdict::indeterminate("y");
    EXPECT_EQ(combine(a, b).status, VerdictStatus::Indeterminate);
    Witness w;
    w.element = Mat::Identity(2, 2);
    w.image = -Mat::Identity(2, 2);
    const auto r = PositivityVerdict::refute(w, "z");
    EXPECT_EQ(combine(b, r).status, VerdictStatus::Refuted);
    const auto j = to_json(r);
    EXPECT_EQ(j["status"], "Refuted");
    EXPECT_TRUE(j.contains("witness"));
}

TEST(HadamardProduct, SubmultiplicativeOnNonnegativeMatrices) {
    std::mt19937_64 g(14);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 5;
        Mat A(d, d), B(d, d);
        for (int i = 0; i < d * d; ++i) {
            A(i) = U(g) < 0.2 ? 0.0 : U(g);
            B(i) = U(g) < 0.2 ? 0.0 : U(g);
        }
        Mat lhs = Mat::Identity(d, d), An = lhs, Bn = lhs;
        const Mat H = hadamard(A, B);
        for (int n = 1; n <= 5; ++n) {
            lhs = lhs * H;
            An = An * A;
            Bn = Bn * B;
            const Mat gap = hadamard(An, Bn) - lhs;
            EXPECT_GE(gap.minCoeff(), -1e-12 * std::max(1.0, lhs.maxCoeff())) << "trial " << trial << " n " << n;
        }
    }
}
