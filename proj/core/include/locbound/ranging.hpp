#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace locbound {

inline constexpr double kSpeedOfLight = 299792458.0;

// Known-bias limit for the first LOS path: the prior information on b(1) is
// set to kKnownBiasScale * trace(Psi) / c^2 instead of +infinity.
inline constexpr double kKnownBiasScale = 1e12;

// Minimum pulse RMS width expressed in samples.
inline constexpr double kMinSamplesPerRmsWidth = 16.0;

class WaveformError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when the delay-information partition of Psi cannot be inverted
/// (for example two paths with identical delays).
class DegenerateChannelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniformly sampled real pulse s(t) plus the propagation and noise constants.
///
/// Correlations are evaluated on the band-limited interpolant of the samples,
/// so R(x), R'(x) and R''(x) are exact for that interpolant at any lag.
class WaveformModel {
public:
    /// `samples[i]` is s(t0 + i*dt). `n0` is the one-sided level N0 (the noise
    /// two-sided PSD is N0/2). Throws WaveformError for zero energy, dt <= 0,
    /// or fewer than kMinSamplesPerRmsWidth samples per RMS width.
    WaveformModel(std::vector<double> samples, double dt, double t0 = 0.0,
                  double c = kSpeedOfLight, double n0 = 1.0);

    const std::vector<double>& samples() const { return samples_; }
    double dt() const { return dt_; }
    double t0() const { return t0_; }
    double c() const { return c_; }
    double n0() const { return n0_; }

    /// Energy E_s = integral of s(t)^2.
    double energy() const { return energy_; }
    /// RMS width of |s(t)|^2 about its centroid (s).
    double rms_width() const { return rms_width_; }
    /// Length of the central interval holding 99.99% of the energy (s).
    double support_length() const { return support_length_; }

    /// R(x) = integral s(t) s(t + x) dt and its first two derivatives.
    double autocorr(double lag) const;
    double autocorr_d1(double lag) const;
    double autocorr_d2(double lag) const;

    /// Optional observation window [0, T_ob); delays must lie inside it.
    std::optional<double> observation_window;

private:
    std::vector<double> samples_;
    std::vector<double> acf_;   // acf_[k] = sum_n s[n] s[n+k], k >= 0
    std::vector<double> dacf_;  // same for the band-limited derivative samples, in 1/s^2
    double dt_;
    double t0_;
    double c_;
    double n0_;
    double energy_ = 0.0;
    double rms_width_ = 0.0;
    double support_length_ = 0.0;
};

/// Gaussian pulse exp(-t^2 / (4 sigma^2)); |s|^2 has standard deviation sigma.
/// Sampled on [-half_span_sigmas*sigma, +half_span_sigmas*sigma].
WaveformModel gaussian_pulse(double sigma, double dt, double half_span_sigmas = 10.0,
                             double c = kSpeedOfLight, double n0 = 1.0);

/// Multipath channel: delays (s), amplitudes, LOS flag.
struct MultipathChannel {
    std::vector<double> delays;
    std::vector<double> amplitudes;
    bool los = true;

    std::size_t paths() const { return delays.size(); }

    /// Throws std::invalid_argument unless L >= 1, sizes match and delays are
    /// nondecreasing and finite.
    void validate() const;

    /// tau_l = (d + b_l) / c. The channel is LOS iff b_1 == 0. Biases must be
    /// nonnegative and nondecreasing.
    static MultipathChannel from_geometry(double distance, const std::vector<double>& biases,
                                          const std::vector<double>& amplitudes,
                                          double c = kSpeedOfLight);
};

/// Fisher information of the received waveform over the reparametrized
/// channel vector [tau_1, alpha_1/c, tau_2, alpha_2/c, ...].
struct PsiMatrix {
    Eigen::MatrixXd values;
    /// Number of paths in the first contiguous cluster.
    std::size_t first_cluster = 1;
    bool los = true;
    double c = kSpeedOfLight;

    std::size_t paths() const { return static_cast<std::size_t>(values.rows()) / 2; }
};

/// Channel-parameter prior blocks in (d, kappa) coordinates with
/// kappa = [b_1, alpha_1, b_2, alpha_2, ...].
struct ChannelPriorBlocks {
    double xi_dd = 0.0;
    Eigen::RowVectorXd xi_dk;
    Eigen::MatrixXd xi_kk;

    /// All-zero blocks sized for `paths` paths.
    static ChannelPriorBlocks zeros(std::size_t paths);
};

/// Effective bandwidth beta (Hz): second spectral moment over energy.
double effective_bandwidth(const WaveformModel& w);

/// |alpha_1|^2 E_s / N0.
double first_path_snr(const WaveformModel& w, const MultipathChannel& ch);

/// Number of leading paths chained by gaps shorter than the pulse support.
std::size_t first_cluster_size(const WaveformModel& w, const MultipathChannel& ch);

/// Throws std::invalid_argument when a delay falls outside the observation
/// window of `w`.
PsiMatrix psi_matrix(const WaveformModel& w, const MultipathChannel& ch);

/// k^T Psi_breve^-1 k / Psi(0,0) on the first contiguous cluster, clamped to
/// [0, 1]. Throws DegenerateChannelError when Psi_breve is singular.
double path_overlap_chi(const PsiMatrix& psi);

/// RII without channel priors (1/m^2): 0 for NLOS, otherwise
/// 8 pi^2 beta^2 (1 - chi) SNR / c^2.
double rii_no_prior(const WaveformModel& w, const MultipathChannel& ch);
double rii_no_prior(const PsiMatrix& psi);

/// General RII with channel-parameter prior information (1/m^2). Uses every
/// path in psi. Throws DegenerateChannelError when Psi + c^2 Xi_kk is singular.
double rii_with_channel_prior(const PsiMatrix& psi, const ChannelPriorBlocks& prior);

/// Prior blocks expressing a known zero bias on the first path.
ChannelPriorBlocks los_bias_prior(const PsiMatrix& psi);

/// z / d^(2b) when r0 <= d <= rmax, else 0.
double rii_pathloss(double d, double b, double z = 1.0, double r0 = 0.0,
                    std::optional<double> rmax = std::nullopt);

/// Directed link: node `from` (an agent) receives from node `to`. phi and
/// distance default to the node geometry; set them to override it.
struct RangingLink {
    std::string from;
    std::string to;
    double lambda = 0.0;  ///< RII, 1/m^2
    bool los = true;
    std::optional<double> phi;
    std::optional<double> distance;
};

/// Reads a two-column (time, amplitude) pulse table. Blank lines and lines
/// starting with '#' are skipped; a non-numeric first line is taken as a
/// header. Times must be uniformly spaced. Throws WaveformError with the line
/// number on malformed input.
WaveformModel parse_pulse(std::istream& in, double c = kSpeedOfLight, double n0 = 1.0);
WaveformModel load_pulse_file(const std::string& path, double c = kSpeedOfLight, double n0 = 1.0);

}  // namespace locbound
