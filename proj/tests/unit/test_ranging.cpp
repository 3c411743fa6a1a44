#include "locbound/ranging.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace locbound;
namespace lt = locbound::testing;
using locbound::testing::GaussianPulse;

namespace {

constexpr double kSigma = 1e-9;
constexpr double kDt = 5e-11;

const WaveformModel& pulse()
{
    static const WaveformModel w = gaussian_pulse(kSigma, kDt);
    return w;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Waveform, GaussianBandwidthAndEnergy)
{
    const WaveformModel& w = pulse();
    // beta = 1 / (4 pi sigma), E_s = sqrt(2 pi) sigma.
    EXPECT_NEAR(effective_bandwidth(w), 1.0 / (4.0 * std::numbers::pi * kSigma), 1e-9 * 8e7);
    EXPECT_NEAR(w.energy(), std::sqrt(2.0 * std::numbers::pi) * kSigma, 1e-9 * kSigma);
    EXPECT_NEAR(w.rms_width(), kSigma, 1e-6 * kSigma);
    EXPECT_GT(w.support_length(), 6.0 * kSigma);
    EXPECT_LT(w.support_length(), 10.0 * kSigma);
}

TEST(Waveform, AutocorrelationMatchesClosedForm)
{
    const GaussianPulse g{kSigma};
    for (double lag : {0.0, 0.37e-9, 1.0e-9, 2.2e-9, -3.1e-9}) {
        EXPECT_NEAR(pulse().autocorr(lag), g.r(lag), 1e-9 * g.r(0.0));
        EXPECT_NEAR(pulse().autocorr_d1(lag), g.r1(lag), 1e-9 * std::abs(g.r2(0.0)) * kSigma);
        EXPECT_NEAR(pulse().autocorr_d2(lag), g.r2(lag), 1e-8 * std::abs(g.r2(0.0)));
    }
    EXPECT_DOUBLE_EQ(pulse().autocorr_d1(0.0), 0.0);
}

TEST(Waveform, RejectsUndersampledPulse)
{
    EXPECT_THROW(gaussian_pulse(kSigma, kSigma / 8.0), WaveformError);
    EXPECT_THROW(WaveformModel(std::vector<double>(50, 0.0), 1.0), WaveformError);
    EXPECT_THROW(gaussian_pulse(kSigma, -1.0), WaveformError);
}

TEST(Psi, MatchesClosedFormGaussian)
{
    auto rng = CounterRng::stream(31, 1);
    const GaussianPulse g{kSigma};
    for (int t = 0; t < 20; ++t) {
        const MultipathChannel ch = lt::random_channel(rng, 1 + static_cast<std::size_t>(rng.uniform() * 4), 0.3 * kSigma,
                                                   3.0 * kSigma);
        const Eigen::MatrixXd got = psi_matrix(pulse(), ch).values;
        const Eigen::MatrixXd want = lt::gaussian_psi(g, ch, kSpeedOfLight, 1.0);
        EXPECT_LT(max_abs(got - want), 1e-8 * max_abs(want));
    }
}

TEST(Psi, MatchesFiniteDifferenceHessian)
{
    // Independent of the correlation formulas: curvature of the squared
    // distance between received waveforms.
    const GaussianPulse g{kSigma};
    MultipathChannel ch{{1e-9, 1.8e-9}, {1.0, -0.6}, true};
    const Eigen::MatrixXd got = psi_matrix(pulse(), ch).values;
    const Eigen::MatrixXd fd = lt::finite_difference_psi(g, ch, kSpeedOfLight, 1.0);
    EXPECT_LT(max_abs(got - fd), 1e-5 * max_abs(fd));
}

TEST(Psi, ClusterAndWindow)
{
    MultipathChannel ch{{0.0, 2e-9, 4e-9, 40e-9}, {1.0, 0.5, 0.4, 0.3}, true};
    EXPECT_EQ(first_cluster_size(pulse(), ch), 3u);
    EXPECT_EQ(psi_matrix(pulse(), ch).first_cluster, 3u);
    WaveformModel w = pulse();
    w.observation_window = 10e-9;
    EXPECT_THROW(psi_matrix(w, ch), std::invalid_argument);
}

TEST(Rii, SinglePathClosedForm)
{
    const MultipathChannel ch{{3e-9}, {0.8}, true};
    const double beta = effective_bandwidth(pulse());
    const double snr = first_path_snr(pulse(), ch);
    const double expected = 8.0 * std::numbers::pi * std::numbers::pi * beta * beta * snr / (kSpeedOfLight * kSpeedOfLight);
    EXPECT_NEAR(rii_no_prior(pulse(), ch), expected, 1e-12 * expected);
    EXPECT_DOUBLE_EQ(path_overlap_chi(psi_matrix(pulse(), ch)), 0.0);
}

TEST(Rii, ChiInUnitIntervalOnRandomChannels)
{
    auto rng = CounterRng::stream(32, 1);
    for (int t = 0; t < 200; ++t) {
        const MultipathChannel ch = lt::random_channel(rng, 1 + static_cast<std::size_t>(rng.uniform() * 5), 0.3 * kSigma,
                                                   6.0 * kSigma);
        const double chi = path_overlap_chi(psi_matrix(pulse(), ch));
        EXPECT_GE(chi, 0.0);
        EXPECT_LE(chi, 1.0);
    }
}

TEST(Rii, DisjointFirstPathHasNoOverlap)
{
    const MultipathChannel ch{{0.0, 30e-9, 31e-9}, {1.0, 0.9, 0.7}, true};
    const PsiMatrix psi = psi_matrix(pulse(), ch);
    EXPECT_EQ(psi.first_cluster, 1u);
    EXPECT_DOUBLE_EQ(path_overlap_chi(psi), 0.0);
    EXPECT_DOUBLE_EQ(rii_no_prior(psi), rii_no_prior(pulse(), MultipathChannel{{0.0}, {1.0}, true}));
}

TEST(Rii, OverlapReducesInformation)
{
    const MultipathChannel alone{{0.0}, {1.0}, true};
    const MultipathChannel close{{0.0, 0.8e-9}, {1.0, 0.7}, true};
    const double chi = path_overlap_chi(psi_matrix(pulse(), close));
    EXPECT_GT(chi, 0.01);
    EXPECT_LT(rii_no_prior(pulse(), close), rii_no_prior(pulse(), alone));
    EXPECT_NEAR(rii_no_prior(pulse(), close), (1.0 - chi) * rii_no_prior(pulse(), alone),
                1e-12 * rii_no_prior(pulse(), alone));
}

TEST(Rii, InvariantToPathsOutsideFirstCluster)
{
    auto rng = CounterRng::stream(33, 1);
    for (int t = 0; t < 50; ++t) {
        MultipathChannel ch = lt::random_channel(rng, 1 + static_cast<std::size_t>(rng.uniform() * 3), 0.4 * kSigma,
                                             2.0 * kSigma);
        const double base = rii_no_prior(pulse(), ch);
        const std::size_t cluster = first_cluster_size(pulse(), ch);
        ASSERT_EQ(cluster, ch.paths());
        double tail = ch.delays.back() + pulse().support_length() * rng.uniform(1.05, 3.0);
        for (int extra = 0; extra < 3; ++extra) {
            ch.delays.push_back(tail);
            ch.amplitudes.push_back(rng.uniform(-1.0, 1.0));
            tail += rng.uniform(0.4, 3.0) * kSigma;
        }
        EXPECT_NEAR(rii_no_prior(pulse(), ch), base, 1e-8 * base);
    }
}

TEST(Rii, MatchesFullFisherInformationOracle)
{
    auto rng = CounterRng::stream(34, 1);
    const GaussianPulse g{kSigma};
    for (int t = 0; t < 50; ++t) {
        const MultipathChannel ch = lt::random_channel(rng, 2, 0.3 * kSigma, 4.0 * kSigma);
        ASSERT_EQ(first_cluster_size(pulse(), ch), 2u);
        const double want = lt::gaussian_full_fim_rii(g, ch, kSpeedOfLight, 1.0);
        EXPECT_NEAR(rii_no_prior(pulse(), ch), want, 1e-6 * want);
    }
}

TEST(Rii, NlosWithoutPriorIsZero)
{
    MultipathChannel ch{{0.0, 1e-9}, {1.0, 0.5}, false};
    EXPECT_DOUBLE_EQ(rii_no_prior(pulse(), ch), 0.0);
    const PsiMatrix psi = psi_matrix(pulse(), ch);
    EXPECT_DOUBLE_EQ(rii_with_channel_prior(psi, ChannelPriorBlocks::zeros(2)), 0.0);
}

TEST(Rii, ChannelPriorAddsInformation)
{
    const MultipathChannel ch{{0.0, 0.9e-9, 2.1e-9}, {1.0, 0.6, -0.4}, true};
    const PsiMatrix psi = psi_matrix(pulse(), ch);
    const double known_bias = rii_with_channel_prior(psi, los_bias_prior(psi));
    // A known first-path bias reproduces the no-prior LOS value.
    EXPECT_NEAR(known_bias, rii_no_prior(psi), 1e-6 * known_bias);

    ChannelPriorBlocks prior = los_bias_prior(psi);
    prior.xi_kk(2, 2) = 1e20;  // information on b_2 (1/m^2 scale)
    EXPECT_GT(rii_with_channel_prior(psi, prior), known_bias);
    EXPECT_THROW(rii_with_channel_prior(psi, ChannelPriorBlocks::zeros(2)), std::invalid_argument);
}

TEST(Rii, DegenerateChannelReported)
{
    const MultipathChannel ch{{1e-9, 1e-9}, {1.0, 0.5}, true};
    EXPECT_THROW(path_overlap_chi(psi_matrix(pulse(), ch)), DegenerateChannelError);
}

TEST(Rii, Pathloss)
{
    EXPECT_DOUBLE_EQ(rii_pathloss(2.0, 1.0), 0.25);
    EXPECT_DOUBLE_EQ(rii_pathloss(2.0, 2.0, 3.0), 3.0 / 16.0);
    EXPECT_DOUBLE_EQ(rii_pathloss(0.5, 1.0, 1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(rii_pathloss(5.0, 1.0, 1.0, 0.0, 4.0), 0.0);
    EXPECT_THROW(rii_pathloss(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(rii_pathloss(1.0, 0.0), std::invalid_argument);
}

TEST(Channel, ValidationAndGeometry)
{
    EXPECT_THROW((MultipathChannel{{}, {}, true}).validate(), std::invalid_argument);
    EXPECT_THROW((MultipathChannel{{1.0, 0.5}, {1.0, 1.0}, true}).validate(), std::invalid_argument);
    EXPECT_THROW((MultipathChannel{{1.0}, {1.0, 2.0}, true}).validate(), std::invalid_argument);
    const MultipathChannel g = MultipathChannel::from_geometry(3.0, {0.0, 0.6}, {1.0, 0.5});
    EXPECT_TRUE(g.los);
    EXPECT_NEAR(g.delays[1], 3.6 / kSpeedOfLight, 1e-22);
    EXPECT_FALSE(MultipathChannel::from_geometry(3.0, {0.1}, {1.0}).los);
    EXPECT_THROW(MultipathChannel::from_geometry(3.0, {-0.1}, {1.0}), std::invalid_argument);
}

TEST(PulseFile, ParsesCommentsHeaderAndSeparators)
{
    std::ostringstream text;
    text.precision(17);
    text << "# gaussian\n time amplitude\n";
    const double sigma = 1e-9;
    for (int i = -200; i <= 200; ++i) {
        const double t = i * 5e-11;
        text << t << (i % 2 ? "\t" : " , ") << std::exp(-t * t / (4 * sigma * sigma)) << "\n";
        if (i == 0) {
            text << "\n";
        }
    }
    std::istringstream in(text.str());
    const WaveformModel w = parse_pulse(in);
    EXPECT_EQ(w.samples().size(), 401u);
    EXPECT_NEAR(w.dt(), 5e-11, 1e-20);
    EXPECT_NEAR(effective_bandwidth(w), effective_bandwidth(pulse()), 1e-9 * effective_bandwidth(pulse()));
}

TEST(PulseFile, ReportsLineNumbers)
{
    std::istringstream bad("time,amp\n0,1\n1e-9,oops\n");
    try {
        (void)parse_pulse(bad);
        FAIL() << "expected WaveformError";
    } catch (const WaveformError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    std::istringstream uneven("0,1\n1,1\n3,1\n4,1\n");
    EXPECT_THROW(parse_pulse(uneven), WaveformError);
    std::istringstream one("0,1\n");
    EXPECT_THROW(parse_pulse(one), WaveformError);
    EXPECT_THROW(load_pulse_file("/nonexistent/pulse.csv"), WaveformError);
}
