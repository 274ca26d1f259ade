#include <noisegate/fpt_mc.hpp>
#include <noisegate/mfpt_quadrature.hpp>

#include <gtest/gtest.h>

#include <boost/random/exponential_distribution.hpp>

#include <cmath>
#include <vector>

using namespace noisegate;

namespace {

const NoiseSpec kUnit{1.0, 1.0};

McConfig config(std::size_t n, double dt, std::uint64_t seed) {
    McConfig mc;
    mc.n_paths = n;
    mc.dt = dt;
    mc.seed = seed;
    mc.max_time = 1e4;
    return mc;
}

// Reduced boundary -> margin in volts at sigma = 1.
double margin(double reduced) { return reduced * std::sqrt(2.0); }

} // namespace

TEST(McConfig, Validation) {
    auto mc = config(0, 0.01, 1);
    EXPECT_THROW(simulate_delayed_fpt(kUnit, -0.2, mc), invalid_input);
    mc = config(10, 0.05, 1);
    EXPECT_THROW(simulate_delayed_fpt(kUnit, -0.2, mc), invalid_input);
    mc = config(10, 0.01, 1);
    mc.max_time = 0.5;
    EXPECT_THROW(simulate_delayed_fpt(kUnit, -0.2, mc), invalid_input);
    mc = config(10, 0.01, 1);
    EXPECT_THROW(simulate_bitflip_fpt(kUnit, -0.2, -0.1, mc), invalid_input);
    EXPECT_THROW(simulate_delayed_fpt(kUnit, NAN, mc), invalid_input);
}

TEST(DefaultMaxTime, Rules) {
    EXPECT_DOUBLE_EQ(default_max_time({1.0, 2e-9}), 2e-5);
    EXPECT_DOUBLE_EQ(default_max_time({1.0, 2e-9}, 3e-9), 3e-7);
}

TEST(DelayedFpt, MeanAgreesWithQuadrature) {
    for (double b : {-1.0, -0.1414}) {
        const auto ens = simulate_delayed_fpt(kUnit, margin(b), config(100000, 1.0 / 200.0, 101));
        const double quad = mfpt_t1({b, std::nullopt}, 1.0);
        EXPECT_EQ(ens.censored_count, 0u);
        EXPECT_LE(std::abs(ens.mean - quad), std::max(0.02 * quad, 3.0 * ens.std_err)) << b;
    }
}

TEST(BitflipFpt, MeanAgreesWithQuadrature) {
    const auto ens = simulate_bitflip_fpt(kUnit, margin(-0.1414), margin(-1.5556), config(20000, 1.0 / 200.0, 202));
    const double quad = mfpt_t2({-0.1414, -1.5556}, 1.0);
    EXPECT_EQ(ens.censored_count, 0u);
    EXPECT_LE(std::abs(ens.mean - quad), std::max(0.02 * quad, 3.0 * ens.std_err));
}

TEST(DelayedFpt, HalvingTheStepChangesTheMeanByUnderOnePercent) {
    const double b_e = margin(-0.5);
    const auto coarse = simulate_delayed_fpt(kUnit, b_e, config(200000, 1.0 / 100.0, 303));
    const auto fine = simulate_delayed_fpt(kUnit, b_e, config(200000, 1.0 / 200.0, 304));
    EXPECT_LT(std::abs(coarse.mean - fine.mean) / fine.mean, 0.01);
}

TEST(DelayedFpt, SampledDetectionIsBiasedLate) {
    const double b_e = margin(-0.5);
    auto mc = config(50000, 1.0 / 200.0, 305);
    mc.detection = CrossingDetection::sampled;
    const auto sampled = simulate_delayed_fpt(kUnit, b_e, mc);
    const double quad = mfpt_t1({-0.5, std::nullopt}, 1.0);
    EXPECT_GT(sampled.mean, quad * 1.03);
}

TEST(BitflipFpt, FarBoundaryIsCensored) {
    auto mc = config(200, 1.0 / 100.0, 7);
    mc.max_time = 1.0;
    const auto ens = simulate_bitflip_fpt(kUnit, margin(-0.1), margin(-8.0), mc);
    EXPECT_EQ(ens.total(), 200u);
    EXPECT_EQ(ens.censored_count, 200u);
    EXPECT_DOUBLE_EQ(ens.censored_fraction(), 1.0);
    EXPECT_TRUE(ens.censoring_warning());
}

TEST(FptEnsemble, SeededAndIndependentOfWorkerCount) {
    const double b_e = margin(-0.3);
    auto mc = config(4001, 1.0 / 100.0, 99);
    const auto a = simulate_delayed_fpt(kUnit, b_e, mc);
    const auto b = simulate_delayed_fpt(kUnit, b_e, mc);
    mc.workers = 4;
    const auto c = simulate_delayed_fpt(kUnit, b_e, mc);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_EQ(a.samples, c.samples);
    mc.seed = 100;
    EXPECT_NE(a.samples, simulate_delayed_fpt(kUnit, b_e, mc).samples);
}

TEST(SurvivalCurve, ShapeAndMeanPoint) {
    const auto ens = simulate_bitflip_fpt(kUnit, margin(-0.1414), margin(-1.5556), config(20000, 1.0 / 100.0, 8));
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(0.05 * ens.mean * i);
    const auto s = survival_curve(ens, grid);
    EXPECT_DOUBLE_EQ(s.front().surviving, 1.0);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i].surviving, s[i - 1].surviving);
    EXPECT_NEAR(s[20].surviving, std::exp(-1.0), 0.02);
    EXPECT_DOUBLE_EQ(s[20].exponential, std::exp(-1.0));
    EXPECT_THROW(survival_curve(FptEnsemble{}, grid), invalid_input);
}

TEST(EmpiricalWaitTime, QuantileOfTheSurvival) {
    FptEnsemble ens;
    for (int i = 1; i <= 1000; ++i) ens.samples.push_back(i);
    EXPECT_EQ(*empirical_wait_time(ens, 0.5, 0.6), 0.0);
    // Phi S(t) <= 0.05 with Phi = 0.5: at most 100 of 1000 survive.
    EXPECT_EQ(*empirical_wait_time(ens, 0.5, 0.05), 900.0);
    ens.censored_count = 200;
    EXPECT_FALSE(empirical_wait_time(ens, 0.5, 0.05).has_value());
}

TEST(KolmogorovSf, ReferenceValues) {
    // Classic critical values of the Kolmogorov distribution.
    EXPECT_NEAR(kolmogorov_sf(1.2238), 0.10, 1e-3);
    EXPECT_NEAR(kolmogorov_sf(1.3581), 0.05, 1e-3);
    EXPECT_NEAR(kolmogorov_sf(1.6276), 0.01, 1e-4);
    EXPECT_NEAR(kolmogorov_sf(0.5), 0.9639452436648751, 1e-9);
    EXPECT_NEAR(kolmogorov_sf(std::nextafter(1.18, 0.0)), kolmogorov_sf(1.18), 1e-10);
    EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
}

TEST(KsExponential, NominalRejectionRateForExponentialSamples) {
    auto rng = make_stream(2024, 0);
    boost::random::exponential_distribution<double> expo(1.0 / 3.0);
    int reject_known = 0;
    int reject_fitted = 0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> v(2000);
        for (auto& x : v) x = expo(rng);
        if (ks_exponential(v, 3.0).p_value < 0.01) ++reject_known;
        const auto fitted = ks_exponential(v);
        EXPECT_TRUE(fitted.mean_estimated);
        EXPECT_FALSE(fitted.note.empty());
        if (fitted.p_value < 0.01) ++reject_fitted;
    }
    // Binomial(400, 0.01): mean 4, P(X > 11) < 1e-3.
    EXPECT_LE(reject_known, 11);
    // Fitting the mean makes the asymptotic p-value conservative.
    EXPECT_LE(reject_fitted, reject_known);
}

TEST(KsExponential, RejectsNonExponentialAndSmallSamples) {
    const std::vector<double> constant(1000, 2.0);
    EXPECT_LT(ks_exponential(constant).p_value, 1e-12);
    EXPECT_THROW(ks_exponential(std::vector<double>(99, 1.0)), invalid_input);
    EXPECT_THROW(ks_exponential(std::vector<double>(200, 1.0), 0.0), invalid_input);
}
