#include "mcarma/model.hpp"
#include "mcarma/simulate.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mcarma;

namespace {

MCARMAModel random_model(std::mt19937_64& g, Eigen::Index n, Eigen::Index m, Eigen::Index p, Eigen::Index q) {
    const Eigen::Index d = n * m;
    std::vector<LinOpNM> A, C;
    for (Eigen::Index i = 0; i < p; ++i) A.push_back(LinOpNM::general(n, m, oracle::random_matrix(g, d, d, 0.8)));
    for (Eigen::Index j = 0; j <= q; ++j) C.push_back(LinOpNM::general(n, m, oracle::random_matrix(g, d, d)));
    return MCARMAModel(A, C, LevySpec::pure_drift(Mat::Zero(n, m)));
}

/// MCAR(2) with factors (lambda + 1)(lambda + 2) on PSD(2) and identity output.
MCARMAModel causal_psd2() {
    const Mat I = Mat::Identity(2, 2);
    Mat a(2, 2);
    a << -0.5, 0.2, 0.0, -0.5;
    Mat b(2, 2);
    b << -1.0, 0.0, 0.1, -0.8;
    const auto F1 = LinOpNM::lyapunov(a), F2 = LinOpNM::lyapunov(b);
    return MCARMAModel(
        {F1 + F2, (F1 * F2).scaled(-1.0)}, {LinOpNM::identity(2, 2)},
        LevySpec::compound_poisson(Mat::Zero(2, 2), 1.0, RankOnePsdLaw{2, {2.0, 1.0}}), ConeSpec::psd(2));
}

CMat plain_transfer(const MCARMAModel& model, cplx lam) {
    const auto& f = model.companion();
    CMat R = -f.Avec.cast<cplx>();
    R.diagonal().array() += lam;
    return f.Cvec.cast<cplx>() * R.partialPivLu().solve(f.Evec.cast<cplx>());
}

}  // namespace

TEST(Companion, PlainBlockStructure) {
    std::mt19937_64 g(21);
    const auto model = random_model(g, 2, 1, 3, 1);
    const auto& f = model.companion();
    const Eigen::Index d = 2;
    ASSERT_EQ(f.Avec.rows(), 6);
    EXPECT_EQ(f.Avec.block(0, d, d, d), Mat::Identity(d, d));
    EXPECT_EQ(f.Avec.block(d, 2 * d, d, d), Mat::Identity(d, d));
    EXPECT_EQ(f.Avec.block(0, 0, d, d), Mat::Zero(d, d));
    // bottom row holds A_p, ..., A_1
    EXPECT_EQ(f.Avec.block(2 * d, 0, d, d), model.A_ops()[2].rep());
    EXPECT_EQ(f.Avec.block(2 * d, 2 * d, d, d), model.A_ops()[0].rep());
    EXPECT_EQ(f.Evec.bottomRows(d), Mat::Identity(d, d));
    EXPECT_EQ(f.Evec.topRows(2 * d), Mat::Zero(2 * d, d));
    EXPECT_EQ(f.Cvec.leftCols(d), model.C_ops()[0].rep());
    EXPECT_EQ(f.Cvec.middleCols(d, d), model.C_ops()[1].rep());
    EXPECT_EQ(f.Cvec.rightCols(d), Mat::Zero(d, d));
}

TEST(Companion, HatFormCoincidesWhenCommutationTrivial) {
    std::mt19937_64 g(22);
    const auto model = random_model(g, 2, 1, 2, 0);
    EXPECT_LT((model.companion().Avec_hat - model.companion().Avec).norm(), 1e-15);
}

TEST(Companion, EigenvaluesAreRootsOfDetP) {
    std::mt19937_64 g(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 1 + trial % 2, m = 1 + (trial / 2) % 2, p = 1 + trial % 3;
        const auto model = random_model(g, n, m, p, 0);
        const int deg = static_cast<int>(p * n * m);
        const auto coeffs = oracle::det_poly_coeffs([&](cplx l) { return operator_polynomials(model, l).second; }, deg, 1.5);
        std::vector<cplx> roots = oracle::poly_roots(coeffs.real());
        std::vector<cplx> eig;
        const CVec ev = eigenvalues(model.companion().Avec);
        for (Eigen::Index i = 0; i < ev.size(); ++i) eig.push_back(ev(i));
        EXPECT_LT(oracle::multiset_distance(eig, roots), 1e-6) << "trial " << trial;
    }
}

TEST(Classify, ThreeKinds) {
    Mat a(1, 1);
    a << -1.0;
    const auto noise = LevySpec::pure_drift(Mat::Zero(1, 1));
    const auto one = LinOpNM::identity(1, 1);
    EXPECT_EQ(MCARMAModel({LinOpNM::general(1, 1, a)}, {one}, noise).classification().kind, StabilityKind::Causal);
    EXPECT_EQ(MCARMAModel({LinOpNM::general(1, 1, -a)}, {one}, noise).classification().kind,
              StabilityKind::NonCausalStationary);
    // lambda^2 + 1: purely imaginary roots
    EXPECT_EQ(MCARMAModel({LinOpNM::zero(1, 1), LinOpNM::general(1, 1, a)}, {one}, noise).classification().kind,
              StabilityKind::NonStationary);
    const auto wb = wellbalanced_as_mcarma(LinOpNM::identity(1, 1), noise);
    EXPECT_EQ(wb.classification().kind, StabilityKind::NonCausalStationary);
    EXPECT_NEAR(wb.classification().tau, 1.0, 1e-12);
}

TEST(Model, ConstructorValidation) {
    const auto noise = LevySpec::pure_drift(Mat::Zero(2, 2));
    const auto I = LinOpNM::identity(2, 2);
    EXPECT_THROW(MCARMAModel({I}, {I, I}, noise), std::invalid_argument);
    EXPECT_THROW(MCARMAModel({I}, {I}, LevySpec::pure_drift(Mat::Zero(3, 3))), DimensionError);
    EXPECT_THROW(MCARMAModel({I}, {I}, noise, ConeSpec::psd(3)), DimensionError);
    EXPECT_THROW(MCARMAModel({I}, {LinOpNM::identity(4, 1)}, noise), DimensionError);
}

TEST(Transfer, RightFractionMatchesStateSpace) {
    std::mt19937_64 g(24);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 2, m = 1 + (trial / 2) % 2, p = 1 + trial % 3;
        const auto model = random_model(g, n, m, p, std::min<Eigen::Index>(p - 1, trial % 2));
        for (int k = 0; k < 20; ++k) {
            const cplx lam(U(g), U(g));
            const CMat H = transfer_function(model, lam);
            worst = std::max(worst, (H - rmfd_eval(model, lam)).norm() / H.norm());
            worst = std::max(worst, (plain_transfer(model, lam) - laplace_symbol(model, lam)).norm() / H.norm());
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Transfer, SingularLambdaThrows) {
    Mat a(1, 1);
    a << -1.0;
    const MCARMAModel model({LinOpNM::general(1, 1, a)}, {LinOpNM::identity(1, 1)}, LevySpec::pure_drift(Mat::Zero(1, 1)));
    EXPECT_THROW(transfer_function(model, cplx(-1.0, 0.0)), SingularEquationError);
    EXPECT_THROW(laplace_symbol(model, cplx(-1.0, 0.0)), SingularEquationError);
}

TEST(Kernel, LaplaceTransformMatchesQuadrature) {
    const auto model = causal_psd2();
    const auto& f = model.companion();
    for (double lam : {0.5, 1.0, 2.0}) {
        const Mat ref = oracle::gauss_legendre(
            [&](double s) { return Mat(std::exp(-lam * s) * f.Cvec * oracle::expm_taylor(s * f.Avec) * f.Evec); }, 0.0, 80.0,
            400);
        EXPECT_LT((laplace_symbol(model, lam) - ref).norm(), 1e-6) << lam;
    }
}

TEST(Kernel, NegativeTimeThrows) { EXPECT_THROW(kernel(causal_psd2(), -1.0), std::invalid_argument); }

TEST(SpectralSplit, ProjectorsAndTwoSidedFourierTransform) {
    Mat a(2, 2);
    a << 0.6, 0.1, -0.1, 0.5;
    const auto wb = wellbalanced_as_mcarma(LinOpNM::lyapunov(a), LevySpec::pure_drift(Mat::Zero(2, 2)));
    const auto sp = spectral_split(wb);
    const Eigen::Index N = sp.A.rows();
    EXPECT_LT((sp.P_stable + sp.P_unstable - Mat::Identity(N, N)).norm(), 1e-12);
    EXPECT_LT((sp.P_stable * sp.P_stable - sp.P_stable).norm(), 1e-10);
    EXPECT_LT((sp.A * sp.P_stable - sp.P_stable * sp.A).norm(), 1e-10);
    EXPECT_LT(spectral_bound(sp.A_stable() + sp.P_unstable * -1.0), 0.0);
    // g1(0) + g2(0) = C E
    EXPECT_LT((sp.g1(0.0) + sp.g2(0.0) - sp.C * sp.E).norm(), 1e-12);
    // two-sided transform at lambda = i w equals Q(i w) P(i w)^{-1}
    for (double w : {0.0, 0.7}) {
        auto re_im = [&](double t, bool imag) {
            const Mat h = sp.h(t);
            return Mat(h * (imag ? -std::sin(w * t) : std::cos(w * t)));
        };
        const Mat re = oracle::gauss_legendre([&](double t) { return re_im(t, false); }, -60.0, 0.0, 300) +
                       oracle::gauss_legendre([&](double t) { return re_im(t, false); }, 0.0, 60.0, 300);
        const Mat im = oracle::gauss_legendre([&](double t) { return re_im(t, true); }, -60.0, 0.0, 300) +
                       oracle::gauss_legendre([&](double t) { return re_im(t, true); }, 0.0, 60.0, 300);
        const CMat ref = laplace_symbol(wb, cplx(0.0, w));
        EXPECT_LT((re - ref.real()).norm(), 1e-8) << w;
        EXPECT_LT((im - ref.imag()).norm(), 1e-8) << w;
    }
}

TEST(SpectralSplit, CausalHasNoUnstablePart) {
    const auto sp = spectral_split(causal_psd2());
    EXPECT_EQ(sp.P_unstable.norm(), 0.0);
    EXPECT_LT((sp.h(1.3) - kernel(causal_psd2(), 1.3).rep()).norm(), 1e-13);
}
