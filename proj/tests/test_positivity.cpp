#include "mcarma/positivity.hpp"
#include "mcarma/simulate.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mcarma;

namespace {

Mat m2(double a, double b, double c, double d) {
    Mat x(2, 2);
    x << a, b, c, d;
    return x;
}

LinOpNM scalar(double a) { return LinOpNM::general(1, 1, Mat::Constant(1, 1, a)); }

LevySpec psd_noise(int d) { return LevySpec::compound_poisson(Mat::Zero(d, d), 2.0, RankOnePsdLaw{d, {2.0, 1.0}}); }

LevySpec orthant_noise() {
    Mat a(2, 1);
    a << 0, 1;
    return LevySpec::compound_poisson(Mat::Zero(2, 1), 1.0, AtomsLaw{{{a, 1.0}}});
}

PositiveModel two_factor_lyapunov() {
    const auto F1 = LinOpNM::lyapunov(m2(-1, 0.2, 0, -1));
    const auto F2 = LinOpNM::lyapunov(m2(-2, 0, 0.3, -1.5));
    return build_positive_mcar({F1, F2}, {LinOpNM::identity(2, 2)}, psd_noise(2), ConeSpec::psd(2));
}

MCARMAModel orthant_negative() {
    return MCARMAModel({LinOpNM::general(2, 1, m2(-1, -0.5, 0, -1))}, {LinOpNM::identity(2, 1)}, orthant_noise(),
                       ConeSpec::orthant(2));
}

}  // namespace

TEST(ExpandFactors, ScalarQuadratic) {
    const auto A = expand_factors({scalar(-1.0), scalar(-2.0)});
    ASSERT_EQ(A.size(), 2u);
    EXPECT_NEAR(A[0].rep()(0, 0), -3.0, 1e-15);
    EXPECT_NEAR(A[1].rep()(0, 0), -2.0, 1e-15);
    const MCARMAModel model(A, {LinOpNM::identity(1, 1)}, LevySpec::pure_drift(Mat::Zero(1, 1)));
    std::vector<double> ev;
    for (const auto& e : model.classification().eigenvalues) ev.push_back(e.real());
    std::sort(ev.begin(), ev.end());
    EXPECT_NEAR(ev[0], -2.0, 1e-12);
    EXPECT_NEAR(ev[1], -1.0, 1e-12);
}

TEST(BuildPositive, TwoFactorLyapunovIsSampledPositiveAndCausal) {
    const auto pm = two_factor_lyapunov();
    EXPECT_EQ(pm.verdict.status, VerdictStatus::SampledPositive);
    EXPECT_TRUE(pm.model.causal());
    // the expansion reproduces the product at random complex points
    std::mt19937_64 g(31);
    std::normal_distribution<double> N;
    const CMat F1 = LinOpNM::lyapunov(m2(-1, 0.2, 0, -1)).rep().cast<cplx>();
    const CMat F2 = LinOpNM::lyapunov(m2(-2, 0, 0.3, -1.5)).rep().cast<cplx>();
    for (int k = 0; k < 5; ++k) {
        const cplx lam(N(g), N(g));
        const CMat I = CMat::Identity(4, 4);
        const CMat direct = (lam * I - F1) * (lam * I - F2);
        EXPECT_LT((direct - operator_polynomials(pm.model, lam).second).norm(), 1e-10);
    }
}

TEST(BuildPositive, UnstableFactorThrows) {
    EXPECT_THROW(build_positive_mcar({scalar(0.5)}, {LinOpNM::identity(1, 1)}, LevySpec::pure_drift(Mat::Zero(1, 1)),
                                     ConeSpec::orthant(1)),
                 std::invalid_argument);
}

TEST(CausalKernel, AgreesWithCompleteMonotonicity) {
    const auto pm = two_factor_lyapunov();
    const auto a = certify_causal_kernel(pm.model);
    const auto b = check_complete_monotonicity(pm.model);
    EXPECT_TRUE(a.positive());
    EXPECT_TRUE(b.positive());
    const auto bad = orthant_negative();
    const auto c = certify_causal_kernel(bad);
    const auto d = check_complete_monotonicity(bad);
    ASSERT_TRUE(c.refuted());
    EXPECT_TRUE(d.refuted());
    ASSERT_TRUE(c.witness && c.witness->parameter);
    // witness: g(s) e_j has a negative entry
    const Mat img = kernel(bad, *c.witness->parameter).rep() * c.witness->element;
    EXPECT_LT(img.minCoeff(), 0.0);
}

TEST(CompleteMonotonicity, ScalarFunctions) {
    const auto cone = ConeSpec::orthant(1);
    const auto grid = logspace(0.01, 100.0, 30);
    auto cm = [](double l) { return Mat::Constant(1, 1, 1.0 / (l + 1.0)); };
    EXPECT_TRUE(check_complete_monotonicity_fn(cm, 1, 1, cone, grid).positive());
    // transform of e^{-s} cos(3 s), whose kernel changes sign
    auto osc = [](double l) { return Mat::Constant(1, 1, (l + 1.0) / ((l + 1.0) * (l + 1.0) + 9.0)); };
    EXPECT_TRUE(check_complete_monotonicity_fn(osc, 1, 1, cone, grid).refuted());
}

TEST(Hadamard, SpecExamples) {
    Mat one = Mat::Ones(1, 1), two = Mat::Constant(1, 1, 2.0);
    EXPECT_EQ(check_hadamard_sufficient({one}, {one}).status, VerdictStatus::SampledPositive);
    EXPECT_EQ(check_hadamard_sufficient({one}, {two}).status, VerdictStatus::SampledPositive);
    Mat C = Mat::Zero(2, 2), A = 2.0 * Mat::Identity(2, 2);
    C(0, 0) = 3.0;
    const auto v = check_hadamard_sufficient({C}, {A}, {1.0});
    ASSERT_TRUE(v.refuted());
    EXPECT_DOUBLE_EQ(*v.witness->parameter, 1.0);
    EXPECT_NEAR(v.witness->margin, std::exp(2.0) - std::exp(3.0), 1e-12);
}

TEST(Hadamard, IndeterminateCases) {
    Mat neg = -Mat::Identity(2, 2);
    EXPECT_EQ(check_hadamard_sufficient({neg}, {neg}).status, VerdictStatus::Indeterminate);
    Mat x = m2(1, 1, 0, 1), y = m2(1, 0, 1, 1);
    EXPECT_EQ(check_hadamard_sufficient({x, y}, {x, x}).status, VerdictStatus::Indeterminate);
    EXPECT_THROW(check_hadamard_sufficient({x, x}, {x}), std::invalid_argument);
}

TEST(InternalPositivity, ConjugationAndMetzlerCertified) {
    std::mt19937_64 g(32);
    const Mat a = oracle::random_matrix(g, 2, 2);
    const MCARMAModel psd({LinOpNM::lyapunov(a), LinOpNM::conjugation(oracle::random_matrix(g, 2, 2))},
                          {LinOpNM::conjugation(oracle::random_matrix(g, 2, 2))}, psd_noise(2), ConeSpec::psd(2));
    EXPECT_EQ(certify_internal_positivity(psd).status, VerdictStatus::CertifiedPositive);
    const MCARMAModel orth({LinOpNM::general(2, 1, m2(-1, 2, 0.5, 3)), LinOpNM::general(2, 1, m2(1, 0, 0.2, 1))},
                           {LinOpNM::general(2, 1, m2(1, 1, 0, 1))}, orthant_noise(), ConeSpec::orthant(2));
    EXPECT_EQ(certify_internal_positivity(orth).status, VerdictStatus::CertifiedPositive);
    const MCARMAModel bad({LinOpNM::general(2, 1, m2(-1, 2, 0.5, 3)), LinOpNM::general(2, 1, m2(1, -0.1, 0.2, 1))},
                          {LinOpNM::identity(2, 1)}, orthant_noise(), ConeSpec::orthant(2));
    EXPECT_TRUE(certify_internal_positivity(bad).refuted());
}

TEST(NegativeInverse, QuasiPositiveStableGenerators) {
    std::mt19937_64 g(33);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + trial % 3;
        if (trial % 2 == 0) {
            Mat R(d, d);
            for (int i = 0; i < d * d; ++i) R(i) = U(g);
            R.diagonal().array() -= R.rowwise().sum().array() + 0.2;
            const auto op = LinOpNM::general(d, 1, R);
            ASSERT_TRUE(is_quasi_positive(op, ConeSpec::orthant(d)).positive());
            const Mat ninv = -R.inverse();
            EXPECT_GE(ninv.minCoeff(), -1e-12) << trial;
        } else {
            const Mat a = oracle::random_stable(g, d, 0.2);
            const Mat b = 0.3 * oracle::random_matrix(g, d, d);
            const auto op = LinOpNM::lyapunov(a) + LinOpNM::conjugation(b);
            if (!(spectral_bound(op.rep()) < 0.0)) continue;
            ASSERT_TRUE(is_quasi_positive(op, ConeSpec::psd(d)).positive());
            const auto ninv = LinOpNM::general(d, d, -op.rep().inverse());
            EXPECT_TRUE(is_positive_operator(ninv, ConeSpec::psd(d), {300, {static_cast<std::uint64_t>(trial), 0}}).positive())
                << trial;
        }
    }
}

TEST(ValidatePaths, ZeroNoiseZeroStartHasZeroMargin) {
    const MCARMAModel model({LinOpNM::lyapunov(-0.5 * Mat::Identity(2, 2))}, {LinOpNM::identity(2, 2)},
                            LevySpec::pure_drift(Mat::Zero(2, 2)), ConeSpec::psd(2));
    const auto paths = simulate_state(model, linspace(0.0, 5.0, 11), {Mat::Zero(2, 2)}, {1, 0}, 3);
    const auto r = validate_paths(paths, ConeSpec::psd(2));
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.min_margin, 0.0);
}

TEST(ValidatePaths, CertifiedModelPassesAndCounterexampleFails) {
    const auto pm = two_factor_lyapunov();
    const auto good = simulate_stationary_causal(pm.model, linspace(0.0, 20.0, 81), {2, 0}, 100);
    EXPECT_TRUE(validate_paths(good, ConeSpec::psd(2)).pass);
    const auto bad = simulate_stationary_causal(orthant_negative(), linspace(0.0, 20.0, 401), {3, 0}, 50);
    const auto r = validate_paths(bad, ConeSpec::orthant(2));
    EXPECT_FALSE(r.pass);
    EXPECT_LT(r.min_margin, 0.0);
}
