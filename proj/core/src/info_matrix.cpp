#include "locbound/info_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace locbound {

InfoMatrix2 InfoMatrix2::from_matrix(const Eigen::Matrix2d& m)
{
    return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)};
}

Eigen::Matrix2d InfoMatrix2::matrix() const
{
    Eigen::Matrix2d m;
    m << a11_, a12_, a12_, a22_;
    return m;
}

double InfoMatrix2::quad(const Eigen::Vector2d& u) const
{
    return a11_ * u.x() * u.x() + 2.0 * a12_ * u.x() * u.y() + a22_ * u.y() * u.y();
}

bool InfoMatrix2::is_psd() const
{
    const double half_diff = 0.5 * (a11_ - a22_);
    const double r = std::hypot(half_diff, a12_);
    const double min_eig = 0.5 * trace() - r;
    return min_eig >= -kPsdRelTol * std::abs(trace());
}

InfoMatrix2& InfoMatrix2::operator+=(const InfoMatrix2& o)
{
    a11_ += o.a11_;
    a12_ += o.a12_;
    a22_ += o.a22_;
    return *this;
}

InfoMatrix2& InfoMatrix2::operator-=(const InfoMatrix2& o)
{
    a11_ -= o.a11_;
    a12_ -= o.a12_;
    a22_ -= o.a22_;
    return *this;
}

InfoMatrix2& InfoMatrix2::operator*=(double s)
{
    a11_ *= s;
    a12_ *= s;
    a22_ *= s;
    return *this;
}

InfoMatrix2 InfoMatrix2::rotated_frame(double theta) const
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2d u;
    u << c, -s, s, c;
    return from_matrix(u.transpose() * matrix() * u);
}

double InfoMatrix2::max_abs_diff(const InfoMatrix2& o) const
{
    return std::max({std::abs(a11_ - o.a11_), std::abs(a12_ - o.a12_), std::abs(a22_ - o.a22_)});
}

InfoMatrix2 EllipseForm::to_matrix() const
{
    return ellipse_matrix(mu, eta, theta);
}

double ErrorBound::value() const
{
    if (!localizable_) {
        throw std::logic_error("error bound requested for an unlocalizable EFIM");
    }
    return value_;
}

Eigen::Vector2d direction(double phi)
{
    return {std::cos(phi), std::sin(phi)};
}

InfoMatrix2 rdm(double phi)
{
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return {c * c, c * s, s * s};
}

Eigen::Matrix3d rdm3d(double azimuth, double elevation)
{
    const Eigen::Vector3d q(std::cos(azimuth) * std::cos(elevation),
                            std::sin(azimuth) * std::cos(elevation),
                            std::sin(elevation));
    return q * q.transpose();
}

double wrap_half_turn(double angle)
{
    double w = std::fmod(angle, std::numbers::pi);
    if (w < 0.0) {
        w += std::numbers::pi;
    }
    // fmod can land exactly on pi after the shift for tiny negative inputs
    if (w >= std::numbers::pi) {
        w = 0.0;
    }
    return w;
}

EllipseForm to_ellipse(const InfoMatrix2& j)
{
    const double tr = j.trace();
    const double half_diff = 0.5 * (j.a11() - j.a22());
    const double r = std::hypot(half_diff, j.a12());
    const double mu = 0.5 * tr + r;
    const double tol = kPsdRelTol * std::abs(tr);

    // eta from det/mu avoids cancellation when eta << mu
    double eta = mu > 0.0 ? j.det() / mu : 0.5 * tr - r;
    if (eta < -tol || mu < -tol) {
        throw NotPsdError("information matrix is not positive semi-definite");
    }
    eta = std::max(eta, 0.0);

    EllipseForm e;
    e.mu = std::max(mu, 0.0);
    e.eta = std::min(eta, e.mu);
    if (r <= 1e-15 * std::abs(tr)) {
        e.theta = 0.0;
    } else {
        e.theta = wrap_half_turn(0.5 * std::atan2(2.0 * j.a12(), j.a11() - j.a22()));
    }
    return e;
}

InfoMatrix2 ellipse_matrix(double mu, double eta, double theta)
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {mu * c * c + eta * s * s, (mu - eta) * c * s, mu * s * s + eta * c * c};
}

namespace {

bool singular(const EllipseForm& e)
{
    return e.mu <= 0.0 || e.eta <= kSingularRelTol * (e.mu + e.eta);
}

}  // namespace

ErrorBound speb(const InfoMatrix2& j)
{
    const EllipseForm e = to_ellipse(j);
    if (singular(e)) {
        return ErrorBound::unlocalizable();
    }
    return ErrorBound::finite(1.0 / e.mu + 1.0 / e.eta);
}

ErrorBound dpeb(const InfoMatrix2& j, const Eigen::Vector2d& u)
{
    if (std::abs(u.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("dpeb direction must be a unit vector");
    }
    const EllipseForm e = to_ellipse(j);
    if (singular(e)) {
        return ErrorBound::unlocalizable();
    }
    const double along_major = u.dot(direction(e.theta));
    const double along_minor = u.dot(direction(e.theta + 0.5 * std::numbers::pi));
    return ErrorBound::finite(along_major * along_major / e.mu + along_minor * along_minor / e.eta);
}

FusionResult fuse_anchor(const EllipseForm& e, double nu, double phi)
{
    if (!(nu >= 0.0)) {
        throw std::invalid_argument("ranging information intensity must be non-negative");
    }
    const double rel = phi - e.theta;
    const double c2 = std::cos(2.0 * rel);
    const double s2 = std::sin(2.0 * rel);
    const double s1 = std::sin(rel);

    const double sum = e.mu + e.eta + nu;
    const double x = e.mu - e.eta + nu * c2;
    const double y = nu * s2;
    const double root = std::hypot(x, y);

    // product of the new eigenvalues (area term of the SPEB denominator)
    const double area = e.mu * e.eta + nu * (e.eta + (e.mu - e.eta) * s1 * s1);

    EllipseForm fused;
    fused.mu = 0.5 * (sum + root);
    fused.eta = fused.mu > 0.0 ? std::max(area, 0.0) / fused.mu : 0.0;
    // atan2 keeps the major axis when mu - eta + nu cos(2 phi') < 0
    fused.theta = root <= 1e-15 * sum ? 0.0 : wrap_half_turn(e.theta + 0.5 * std::atan2(y, x));

    if (singular(fused)) {
        return {fused, ErrorBound::unlocalizable()};
    }
    return {fused, ErrorBound::finite(sum / area)};
}

}  // namespace locbound
