#include "mcarma/moments.hpp"
#include "mcarma/simulate.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mcarma;

namespace {

LinOpNM scalar(double a) { return LinOpNM::general(1, 1, Mat::Constant(1, 1, a)); }

LinOpNM lyap2() {
    Mat a(2, 2);
    a << 0.6, 0.1, -0.1, 0.5;
    return LinOpNM::lyapunov(a);
}

LevySpec psd_noise() { return LevySpec::compound_poisson(Mat::Zero(2, 2), 2.0, RankOnePsdLaw{2, {2.0, 1.0}}); }

MCARMAModel causal_mcar2() {
    Mat a(2, 2), b(2, 2);
    a << -0.8, 0.3, -0.1, -0.6;
    b << 0.9, 0.1, 0.0, 0.8;
    Mat c(2, 2);
    c << 1.0, 0.2, -0.3, 0.9;
    return MCARMAModel({LinOpNM::lyapunov(a), LinOpNM::conjugation(b).scaled(-1.0)}, {LinOpNM::conjugation(c), LinOpNM::identity(2, 2)},
                       psd_noise(), ConeSpec::psd(2));
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST(OU, ScalarClosedForms) {
    const auto A = scalar(1.0), Q = scalar(2.0);
    EXPECT_NEAR(ou_variance(A, Q)(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(ou_acov(A, Q, 1.0)(0, 0), std::exp(-1.0), 1e-15);
    for (double h : {0.0, 0.5, 1.0, 2.0}) EXPECT_NEAR(wb_acov(A, Q, h)(0, 0), 2.0 * std::exp(-h) * (1.0 + h), 1e-14) << h;
    EXPECT_NEAR(ou_mean(A, Mat::Constant(1, 1, 3.0))(0, 0), 3.0, 1e-15);
    EXPECT_NEAR(wb_mean(A, Mat::Constant(1, 1, 3.0))(0, 0), 6.0, 1e-15);
    EXPECT_THROW(ou_acov(A, Q, -1.0), std::invalid_argument);
    EXPECT_THROW(ou_variance(scalar(-1.0), Q), std::invalid_argument);
}

TEST(OU, MatchesCausalMcar1) {
    const auto A = lyap2();
    const auto levy = psd_noise();
    const MCARMAModel m({A.scaled(-1.0)}, {LinOpNM::identity(2, 2)}, levy);
    const auto Q = covariance_operator(levy);
    for (double h : {0.0, 0.5, 1.0}) EXPECT_LT(rel(autocovariance(m, h), ou_acov(A, Q, h)), 1e-12);
    EXPECT_LT(rel(stationary_mean(m), ou_mean(A, mean_mu(levy))), 1e-12);
}

TEST(Causal, VarianceAndAcovAgainstQuadrature) {
    const auto model = causal_mcar2();
    const auto& f = model.companion();
    const Mat Q = covariance_operator(model.levy()).rep();
    auto g = [&](double s) { return Mat(f.Cvec * oracle::expm_taylor(s * f.Avec) * f.Evec); };
    for (double h : {0.0, 0.5, 1.0}) {
        const Mat ref = oracle::gauss_legendre([&](double s) { return Mat(g(s + h) * Q * g(s).transpose()); }, 0.0, 60.0, 300);
        EXPECT_LT(rel(autocovariance(model, h), ref), 1e-9) << h;
    }
    EXPECT_LT(rel(stationary_variance(model), autocovariance(model, 0.0)), 1e-12);
    const Mat S = stationary_variance(model);
    EXPECT_LT((S - S.transpose()).norm(), 1e-14);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues().minCoeff(), -1e-12);
}

TEST(Causal, ConditionalMomentsAgainstQuadrature) {
    const auto model = causal_mcar2();
    const auto& f = model.companion();
    const Mat Q = covariance_operator(model.levy()).rep();
    const Mat ref = oracle::gauss_legendre(
        [&](double u) {
            const Mat g = f.Cvec * oracle::expm_taylor(u * f.Avec) * f.Evec;
            return Mat(g * Q * g.transpose());
        },
        0.0, 1.5, 40);
    EXPECT_LT(rel(conditional_variance(model, 0.5, 2.0), ref), 1e-11);
    // long horizon forgets the initial state
    const Vec z = Vec::Ones(model.state_dim());
    EXPECT_LT(rel(conditional_mean(model, z, 0.0, 80.0), stationary_mean(model)), 1e-8);
    EXPECT_THROW(conditional_variance(model, 1.0, 1.0), std::invalid_argument);
}

TEST(Causal, SplitAutocovarianceReducesToCausal) {
    const auto model = causal_mcar2();
    for (double h : {0.0, 0.7}) EXPECT_LT(rel(autocovariance_split(model, h), autocovariance(model, h)), 1e-10);
}

TEST(WellBalanced, SplitAutocovarianceMatchesClosedForm) {
    for (const auto& A : {scalar(1.0), lyap2()}) {
        const LevySpec levy = A.n() == 1 ? LevySpec::compound_poisson(Mat::Zero(1, 1), 1.0, ScaledAtomLaw{Mat::Ones(1, 1), {1, 1}})
                                         : psd_noise();
        const auto Q = covariance_operator(levy);
        const auto wb = wellbalanced_as_mcarma(A, levy);
        for (double h : {0.0, 1.0, 2.0}) EXPECT_LT(rel(autocovariance_split(wb, h), wb_acov(A, Q, h)), 1e-10) << h;
        EXPECT_LT(rel(stationary_mean(wb), wb_mean(A, mean_mu(levy))), 1e-12);
    }
}

TEST(WellBalanced, CorrectionTwoWays) {
    const auto A = lyap2();
    const auto Q = covariance_operator(psd_noise());
    for (double h : {0.0, 0.3, 2.0}) {
        const Mat ref = oracle::gauss_legendre(
            [&](double v) {
                return Mat(oracle::expm_taylor(-(h - v) * A.rep()) * Q.rep() * oracle::expm_taylor(-v * A.rep().transpose()));
            },
            0.0, std::max(h, 1e-300), 20);
        if (h > 0) EXPECT_LT(rel(wb_correction(A, Q, h), ref), 1e-12);
        EXPECT_LT((wb_correction(A, Q, h) - wb_correction_phi1(A, Q, h)).norm(), 1e-12 * std::max(1.0, Q.rep().norm()));
    }
}

TEST(WellBalanced, DecomposesIntoOuAndCorrection) {
    Mat a(2, 2);
    a << 0.7, 0.2, 0.2, 0.4;
    const auto A = LinOpNM::lyapunov(a);
    const auto Q = covariance_operator(psd_noise());
    for (double h : {0.5, 1.0}) {
        const Mat ou = ou_acov(A, Q, h);
        EXPECT_LT(rel(wb_acov(A, Q, h), ou + ou.transpose() + wb_correction(A, Q, h)), 1e-12);
    }
    // scalar case: the two OU terms coincide
    const auto A1 = LinOpNM::general(1, 1, Mat::Constant(1, 1, 0.8));
    const auto Q1 = LinOpNM::general(1, 1, Mat::Constant(1, 1, 1.5));
    for (double h : {0.5, 1.0}) EXPECT_LT(rel(wb_acov(A1, Q1, h), 2.0 * ou_acov(A1, Q1, h) + wb_correction(A1, Q1, h)), 1e-12);
}

TEST(WellBalanced, SmallTimeCrossTerm) {
    const auto A = lyap2();
    const auto Q = covariance_operator(psd_noise());
    for (double w : {1e-2, 1e-3}) {
        const double err = (wb_correction(A, Q, w) - wb_small_time_leading(A, Q, w)).norm();
        EXPECT_LT(err, 10.0 * w * w * Q.rep().norm() * A.rep().norm());
    }
}

TEST(WellBalanced, NonCausalSplitAgainstTwoSidedQuadrature) {
    const MCARMAModel nc({LinOpNM::general(1, 1, Mat::Constant(1, 1, 0.5)), LinOpNM::general(1, 1, Mat::Constant(1, 1, 2.0))},
                         {LinOpNM::identity(1, 1)},
                         LevySpec::compound_poisson(Mat::Zero(1, 1), 1.0, ScaledAtomLaw{Mat::Ones(1, 1), {1, 1}}));
    ASSERT_EQ(nc.classification().kind, StabilityKind::NonCausalStationary);
    const auto sp = spectral_split(nc);
    const Mat Q = covariance_operator(nc.levy()).rep();
    for (double h : {0.0, 0.8}) {
        auto f = [&](double s) { return Mat(sp.h(s + h) * Q * sp.h(s).transpose()); };
        const Mat ref = oracle::gauss_legendre(f, -80.0, -h, 400) + oracle::gauss_legendre(f, -h, 0.0, 20) +
                        oracle::gauss_legendre(f, 0.0, 80.0, 400);
        EXPECT_LT(rel(autocovariance_split(nc, h), ref), 1e-8) << h;
    }
}

TEST(DoubleIntegral, ClosedFormsAgainstQuadrature) {
    const QuadratureOptions opt{1e-11, 1e-10, 4000};
    const auto A1 = scalar(1.0), Q1 = scalar(2.0);
    const auto A2 = lyap2();
    const auto Q2 = covariance_operator(psd_noise());
    for (double t : {0.5, 1.0, 3.0}) {
        EXPECT_LT((r_pp_ou(A1, Q1, t) - r_plus_plus([&](double u) { return ou_acov(A1, Q1, u); }, t, opt)).norm(), 1e-6);
        EXPECT_LT((r_pp_ou(A2, Q2, t) - r_plus_plus([&](double u) { return ou_acov(A2, Q2, u); }, t, opt)).norm(), 1e-6);
        EXPECT_LT((r_pp_wb(A2, Q2, t) - r_plus_plus([&](double u) { return wb_acov(A2, Q2, u); }, t, opt)).norm(), 1e-6);
        const Mat ref = oracle::double_integral([&](double u) { return wb_acov(A2, Q2, u); }, t, 20);
        EXPECT_LT(rel(r_pp_wb(A2, Q2, t), ref), 1e-10);
    }
    const auto model = causal_mcar2();
    EXPECT_LT((r_pp_causal(model, 2.0) - oracle::double_integral([&](double u) { return autocovariance(model, u); }, 2.0, 20)).norm(),
              1e-8);
}

TEST(DoubleIntegral, SecondDifferencesGiveSquaredReturnAcov) {
    const auto A = lyap2();
    const auto Q = covariance_operator(psd_noise());
    const auto model = causal_mcar2();
    for (double D : {0.5, 1.0})
        for (int h = 1; h <= 3; ++h) {
            EXPECT_LT((acov_realized([&](double t) { return r_pp_ou(A, Q, t); }, D, h) - acov_sqret_ou(A, Q, D, h)).norm(), 1e-8);
            EXPECT_LT((acov_realized([&](double t) { return r_pp_wb(A, Q, t); }, D, h) - acov_sqret_wb(A, Q, D, h)).norm(), 1e-8);
            EXPECT_LT((acov_realized([&](double t) { return r_pp_causal(model, t); }, D, h) - acov_sqret_causal(model, D, h)).norm(),
                      1e-8);
        }
    EXPECT_THROW(acov_realized([&](double t) { return r_pp_ou(A, Q, t); }, 1.0, 0), std::invalid_argument);
}

TEST(DoubleIntegral, ScalarSpotValue) {
    const double v = acov_sqret_ou(scalar(1.0), scalar(2.0), 1.0, 1)(0, 0);
    const double plug = std::pow(1.0 - std::exp(-1.0), 2);
    EXPECT_NEAR(v, plug, 1e-9);
    EXPECT_NEAR(v, 0.39957640089372803, 1e-15);
}

TEST(MomentReport, JsonAndCsv) {
    MomentReport r;
    r.mean = Mat::Ones(1, 1);
    r.var0 = Mat::Constant(1, 1, 2.0);
    r.acov = {{0.0, r.var0}, {1.0, Mat::Constant(1, 1, std::exp(-1.0))}};
    const auto j = to_json(r);
    EXPECT_EQ(j["method"], "closed_form");
    const std::string csv = to_csv(r);
    EXPECT_NE(csv.find("0.36787944117144233"), std::string::npos);
}
