#include "locbound/ranging.hpp"

#include "locbound/block_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

namespace locbound {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSeriesCut = 0.2;

// Band-limited interpolation kernel sin(pi y)/(pi y) and its derivatives in y,
// given sn = sin(pi y) and cs = cos(pi y). Below the cut the closed forms
// cancel, so Taylor series are used instead; the R'' sum amplifies kernel
// error by roughly pulse width / dt.
double kernel0(double y, double sn, double /*cs*/)
{
    const double u = kPi * y;
    if (std::abs(u) < kSeriesCut) {
        const double v = u * u;
        return 1.0 + v * (-1.0 / 6.0 + v * (1.0 / 120.0 + v * (-1.0 / 5040.0 + v * (1.0 / 362880.0 - v / 39916800.0))));
    }
    return sn / u;
}

double kernel1(double y, double sn, double cs)
{
    const double u = kPi * y;
    if (std::abs(u) < kSeriesCut) {
        const double v = u * u;
        return kPi * u *
               (-1.0 / 3.0 + v * (1.0 / 30.0 + v * (-1.0 / 840.0 + v * (1.0 / 45360.0 + v * (-1.0 / 3991680.0 + v / 518918400.0)))));
    }
    return kPi * (u * cs - sn) / (u * u);
}

// sum_k acf[|k|] * g(x - k), pairing k and -k so odd kernels cancel exactly at x = 0.
// sin and cos of pi (x -+ k) are (-1)^k times those of pi x, reduced once to
// avoid per-term argument error.
template <class G>
double correlate(const std::vector<double>& acf, double x, G g)
{
    const double whole = std::nearbyint(x);
    const double flip = std::fmod(std::abs(whole), 2.0) == 0.0 ? 1.0 : -1.0;
    const double sx = flip * std::sin(kPi * (x - whole));
    const double cx = flip * std::cos(kPi * (x - whole));
    double sum = acf[0] * g(x, sx, cx);
    double sign = -1.0;
    for (std::size_t k = 1; k < acf.size(); ++k, sign = -sign) {
        const double kk = static_cast<double>(k);
        sum += acf[k] * (g(x - kk, sign * sx, sign * cx) + g(x + kk, sign * sx, sign * cx));
    }
    return sum;
}

bool is_comment_or_blank(const std::string& line)
{
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '#';
}

bool parse_row(const std::string& line, double& t, double& a)
{
    std::string buf = line;
    std::replace(buf.begin(), buf.end(), ',', ' ');
    std::replace(buf.begin(), buf.end(), '\t', ' ');
    std::istringstream is(buf);
    std::string f1;
    std::string f2;
    std::string extra;
    if (!(is >> f1 >> f2) || (is >> extra)) {
        return false;
    }
    auto parse = [](const std::string& f, double& v) {
        const char* end = f.data() + f.size();
        auto [ptr, ec] = std::from_chars(f.data(), end, v);
        return ec == std::errc() && ptr == end && std::isfinite(v);
    };
    return parse(f1, t) && parse(f2, a);
}

}  // namespace

WaveformModel::WaveformModel(std::vector<double> samples, double dt, double t0, double c, double n0)
    : samples_(std::move(samples)), dt_(dt), t0_(t0), c_(c), n0_(n0)
{
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
        throw WaveformError("sample period must be positive");
    }
    if (!(c_ > 0.0) || !(n0_ > 0.0)) {
        throw WaveformError("propagation speed and noise level must be positive");
    }
    const std::size_t n = samples_.size();
    double sum_sq = 0.0;
    for (double v : samples_) {
        if (!std::isfinite(v)) {
            throw WaveformError("pulse samples must be finite");
        }
        sum_sq += v * v;
    }
    if (!(sum_sq > 0.0)) {
        throw WaveformError("pulse has zero energy");
    }
    energy_ = sum_sq * dt_;

    double centroid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        centroid += static_cast<double>(i) * samples_[i] * samples_[i];
    }
    centroid /= sum_sq;
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double off = static_cast<double>(i) - centroid;
        spread += off * off * samples_[i] * samples_[i];
    }
    const double rms_samples = std::sqrt(spread / sum_sq);
    rms_width_ = rms_samples * dt_;
    if (rms_samples < kMinSamplesPerRmsWidth) {
        std::ostringstream msg;
        msg << "pulse is undersampled: " << rms_samples << " samples per RMS width, need at least "
            << kMinSamplesPerRmsWidth;
        throw WaveformError(msg.str());
    }

    // central 99.99% energy interval, linear interpolation inside a sample
    const double tail = 0.5e-4 * sum_sq;
    auto crossing = [&](double level) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = samples_[i] * samples_[i];
            if (acc + e >= level) {
                return static_cast<double>(i) + (e > 0.0 ? (level - acc) / e : 0.0);
            }
            acc += e;
        }
        return static_cast<double>(n);
    };
    support_length_ = (crossing(sum_sq - tail) - crossing(tail)) * dt_;

    acf_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        long double s = 0.0L;
        for (std::size_t i = 0; i + k < n; ++i) {
            s += static_cast<long double>(samples_[i]) * samples_[i + k];
        }
        acf_[k] = static_cast<double>(s);
    }

    // R'' = -(autocorrelation of s'). Differentiating the samples first avoids the
    // (width / dt)^2 cancellation of a second-derivative kernel sum. The derivative
    // of the interpolant decays like 1/distance, so it is kept on a padded grid.
    const std::size_t pad = n;
    const std::size_t m = n + 2 * pad;
    std::vector<double> ds(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        long double d = 0.0L;
        for (std::size_t j = 0; j < n; ++j) {
            const auto off = static_cast<long>(i) - static_cast<long>(pad + j);
            if (off != 0) {
                d += static_cast<long double>(samples_[j]) * ((off % 2 == 0) ? 1.0L : -1.0L) / off;
            }
        }
        ds[i] = static_cast<double>(d / dt_);
    }
    dacf_.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        long double s = 0.0L;
        for (std::size_t i = 0; i + k < m; ++i) {
            s += static_cast<long double>(ds[i]) * ds[i + k];
        }
        dacf_[k] = static_cast<double>(s);
    }
}

double WaveformModel::autocorr(double lag) const
{
    return dt_ * correlate(acf_, lag / dt_, kernel0);
}

double WaveformModel::autocorr_d1(double lag) const
{
    return correlate(acf_, lag / dt_, kernel1);
}

double WaveformModel::autocorr_d2(double lag) const
{
    return -dt_ * correlate(dacf_, lag / dt_, kernel0);
}

WaveformModel gaussian_pulse(double sigma, double dt, double half_span_sigmas, double c, double n0)
{
    if (!(sigma > 0.0) || !(dt > 0.0) || !(half_span_sigmas > 0.0)) {
        throw WaveformError("gaussian pulse needs positive sigma, dt and span");
    }
    const auto half = static_cast<long>(std::ceil(half_span_sigmas * sigma / dt));
    std::vector<double> s;
    s.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long i = -half; i <= half; ++i) {
        const double t = static_cast<double>(i) * dt;
        s.push_back(std::exp(-t * t / (4.0 * sigma * sigma)));
    }
    return WaveformModel(std::move(s), dt, -static_cast<double>(half) * dt, c, n0);
}

void MultipathChannel::validate() const
{
    if (delays.empty()) {
        throw std::invalid_argument("channel needs at least one path");
    }
    if (delays.size() != amplitudes.size()) {
        throw std::invalid_argument("channel delays and amplitudes differ in length");
    }
    for (std::size_t l = 0; l < delays.size(); ++l) {
        if (!std::isfinite(delays[l]) || !std::isfinite(amplitudes[l])) {
            throw std::invalid_argument("channel parameters must be finite");
        }
        if (l > 0 && delays[l] < delays[l - 1]) {
            throw std::invalid_argument("channel delays must be nondecreasing");
        }
    }
}

MultipathChannel MultipathChannel::from_geometry(double distance, const std::vector<double>& biases,
                                                 const std::vector<double>& amplitudes, double c)
{
    if (!(distance >= 0.0) || !(c > 0.0)) {
        throw std::invalid_argument("distance must be nonnegative and c positive");
    }
    MultipathChannel ch;
    for (std::size_t l = 0; l < biases.size(); ++l) {
        if (!(biases[l] >= 0.0)) {
            throw std::invalid_argument("range biases must be nonnegative");
        }
        ch.delays.push_back((distance + biases[l]) / c);
    }
    ch.amplitudes = amplitudes;
    ch.los = !biases.empty() && biases.front() == 0.0;
    ch.validate();
    return ch;
}

ChannelPriorBlocks ChannelPriorBlocks::zeros(std::size_t paths)
{
    const auto m = static_cast<Eigen::Index>(2 * paths);
    return {0.0, Eigen::RowVectorXd::Zero(m), Eigen::MatrixXd::Zero(m, m)};
}

double effective_bandwidth(const WaveformModel& w)
{
    const double r0 = w.autocorr(0.0);
    const double r2 = -w.autocorr_d2(0.0);
    return std::sqrt(r2 / r0) / (2.0 * kPi);
}

double first_path_snr(const WaveformModel& w, const MultipathChannel& ch)
{
    ch.validate();
    const double a = ch.amplitudes.front();
    return a * a * w.energy() / w.n0();
}

std::size_t first_cluster_size(const WaveformModel& w, const MultipathChannel& ch)
{
    ch.validate();
    std::size_t n = 1;
    while (n < ch.paths() && ch.delays[n] - ch.delays[n - 1] < w.support_length()) {
        ++n;
    }
    return n;
}

PsiMatrix psi_matrix(const WaveformModel& w, const MultipathChannel& ch)
{
    ch.validate();
    if (w.observation_window) {
        for (double tau : ch.delays) {
            if (tau < 0.0 || tau >= *w.observation_window) {
                throw std::invalid_argument("path delay lies outside the observation window");
            }
        }
    }
    const std::size_t paths = ch.paths();
    const auto n = static_cast<Eigen::Index>(2 * paths);
    const double scale = 2.0 / w.n0();
    const double c = w.c();

    PsiMatrix psi;
    psi.values = Eigen::MatrixXd::Zero(n, n);
    psi.first_cluster = first_cluster_size(w, ch);
    psi.los = ch.los;
    psi.c = c;
    auto& p = psi.values;
    for (std::size_t l = 0; l < paths; ++l) {
        for (std::size_t m = l; m < paths; ++m) {
            const double lag = ch.delays[l] - ch.delays[m];
            const double al = ch.amplitudes[l];
            const double am = ch.amplitudes[m];
            const auto tl = static_cast<Eigen::Index>(2 * l);
            const auto tm = static_cast<Eigen::Index>(2 * m);
            const double r0 = w.autocorr(lag);
            const double r1 = w.autocorr_d1(lag);
            const double r2 = w.autocorr_d2(lag);

            p(tl, tm) = -scale * al * am * r2;
            p(tl + 1, tm + 1) = scale * c * c * r0;
            // tau_l vs alpha~_m and tau_m vs alpha~_l (R' is odd)
            p(tl, tm + 1) = scale * al * c * r1;
            p(tm, tl + 1) = -scale * am * c * r1;
            p(tm, tl) = p(tl, tm);
            p(tm + 1, tl + 1) = p(tl + 1, tm + 1);
            p(tm + 1, tl) = p(tl, tm + 1);
            p(tl + 1, tm) = p(tm, tl + 1);
        }
    }
    return psi;
}

namespace {

// Psi(0,0) - k^T Psi_breve^-1 k on the first cluster.
double delay_efi(const PsiMatrix& psi)
{
    const auto m = static_cast<Eigen::Index>(2 * std::min(psi.first_cluster, psi.paths()));
    const Eigen::MatrixXd sub = psi.values.topLeftCorner(m, m);
    try {
        return schur_complement(sub, 1, ReductionPolicy::strict)(0, 0);
    } catch (const SingularComplementError&) {
        throw DegenerateChannelError("multipath channel is degenerate: overlap block of Psi is singular");
    }
}

}  // namespace

double path_overlap_chi(const PsiMatrix& psi)
{
    if (psi.values.rows() < 2) {
        throw std::invalid_argument("Psi must cover at least one path");
    }
    const double u2 = psi.values(0, 0);
    if (!(u2 > 0.0)) {
        throw DegenerateChannelError("first path carries no delay information");
    }
    const double chi = (u2 - delay_efi(psi)) / u2;
    return std::clamp(chi, 0.0, 1.0);
}

double rii_no_prior(const PsiMatrix& psi)
{
    if (!psi.los) {
        return 0.0;
    }
    if (!(psi.values(0, 0) > 0.0)) {
        return 0.0;
    }
    return std::max(delay_efi(psi), 0.0) / (psi.c * psi.c);
}

double rii_no_prior(const WaveformModel& w, const MultipathChannel& ch)
{
    if (!ch.los) {
        ch.validate();
        return 0.0;
    }
    return rii_no_prior(psi_matrix(w, ch));
}

double rii_with_channel_prior(const PsiMatrix& psi, const ChannelPriorBlocks& prior)
{
    const Eigen::Index n = psi.values.rows();
    if (prior.xi_dk.size() != n || prior.xi_kk.rows() != n || prior.xi_kk.cols() != n) {
        throw std::invalid_argument("channel prior blocks do not match the number of paths");
    }
    const double c2 = psi.c * psi.c;
    Eigen::VectorXd l = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; i += 2) {
        l(i) = 1.0;
    }
    const Eigen::RowVectorXd lpsi = l.transpose() * psi.values;

    Eigen::MatrixXd full(n + 1, n + 1);
    full(0, 0) = lpsi.dot(l) + c2 * prior.xi_dd;
    full.block(0, 1, 1, n) = lpsi + c2 * prior.xi_dk;
    full.block(1, 0, n, 1) = full.block(0, 1, 1, n).transpose();
    full.bottomRightCorner(n, n) = psi.values + c2 * prior.xi_kk;

    double efi = 0.0;
    try {
        efi = schur_complement(full, 1, ReductionPolicy::strict)(0, 0);
    } catch (const SingularComplementError&) {
        throw DegenerateChannelError("Psi plus channel prior information is singular");
    }
    // cancellation noise around an exact zero (NLOS without prior)
    if (efi < 0.0 && -efi <= 1e-9 * std::abs(full(0, 0))) {
        efi = 0.0;
    }
    return efi / c2;
}

ChannelPriorBlocks los_bias_prior(const PsiMatrix& psi)
{
    ChannelPriorBlocks prior = ChannelPriorBlocks::zeros(psi.paths());
    prior.xi_kk(0, 0) = kKnownBiasScale * psi.values.trace() / (psi.c * psi.c);
    return prior;
}

double rii_pathloss(double d, double b, double z, double r0, std::optional<double> rmax)
{
    if (!(d > 0.0) || !(b > 0.0) || !(z >= 0.0)) {
        throw std::invalid_argument("path-loss RII needs d > 0, b > 0 and z >= 0");
    }
    if (d < r0 || (rmax && d > *rmax)) {
        return 0.0;
    }
    return z / std::pow(d, 2.0 * b);
}

WaveformModel parse_pulse(std::istream& in, double c, double n0)
{
    std::vector<double> times;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) {
            continue;
        }
        double t = 0.0;
        double a = 0.0;
        const bool ok = parse_row(line, t, a);
        if (!ok) {
            if (!seen_content) {
                seen_content = true;  // header
                continue;
            }
            throw WaveformError("pulse file line " + std::to_string(line_no) +
                                ": expected two numeric columns (time, amplitude)");
        }
        seen_content = true;
        times.push_back(t);
        values.push_back(a);
    }
    if (times.size() < 2) {
        throw WaveformError("pulse file needs at least two samples");
    }
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) {
        throw WaveformError("pulse times must be increasing");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double step = times[i] - times[i - 1];
        if (std::abs(step - dt) > 1e-6 * dt) {
            throw WaveformError("pulse file: sample times are not uniformly spaced near sample " +
                                std::to_string(i + 1));
        }
    }
    return WaveformModel(std::move(values), dt, times.front(), c, n0);
}

WaveformModel load_pulse_file(const std::string& path, double c, double n0)
{
    std::ifstream in(path);
    if (!in) {
        throw WaveformError("cannot open pulse file '" + path + "'");
    }
    return parse_pulse(in, c, n0);
}

}  // namespace locbound
