#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>
#include <string>

namespace locbound {

// Eigenvalues at or above -kPsdRelTol * trace are treated as zero.
inline constexpr double kPsdRelTol = 1e-9;

// A 2x2 EFIM whose minor eigenvalue is below kSingularRelTol * trace carries no
// information along that axis; such agents are reported as unlocalizable.
inline constexpr double kSingularRelTol = 1e-13;

class NotPsdError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Symmetric 2x2 information block (units 1/m^2). Only three scalars are
/// stored so symmetry holds by construction.
class InfoMatrix2 {
public:
    constexpr InfoMatrix2() = default;
    constexpr InfoMatrix2(double a11, double a12, double a22) : a11_(a11), a12_(a12), a22_(a22) {}

    /// Takes the symmetric part of m.
    static InfoMatrix2 from_matrix(const Eigen::Matrix2d& m);
    static constexpr InfoMatrix2 zero() { return {}; }
    static constexpr InfoMatrix2 identity() { return {1.0, 0.0, 1.0}; }
    static constexpr InfoMatrix2 diag(double d1, double d2) { return {d1, 0.0, d2}; }

    double a11() const { return a11_; }
    double a12() const { return a12_; }
    double a22() const { return a22_; }

    double trace() const { return a11_ + a22_; }
    double det() const { return a11_ * a22_ - a12_ * a12_; }

    Eigen::Matrix2d matrix() const;

    /// Quadratic form u^T J u.
    double quad(const Eigen::Vector2d& u) const;

    /// True when the minimum eigenvalue is >= -kPsdRelTol * trace.
    bool is_psd() const;

    InfoMatrix2& operator+=(const InfoMatrix2& o);
    InfoMatrix2& operator-=(const InfoMatrix2& o);
    InfoMatrix2& operator*=(double s);

    friend InfoMatrix2 operator+(InfoMatrix2 a, const InfoMatrix2& b) { return a += b; }
    friend InfoMatrix2 operator-(InfoMatrix2 a, const InfoMatrix2& b) { return a -= b; }
    friend InfoMatrix2 operator*(double s, InfoMatrix2 a) { return a *= s; }
    friend InfoMatrix2 operator*(InfoMatrix2 a, double s) { return a *= s; }
    friend bool operator==(const InfoMatrix2&, const InfoMatrix2&) = default;

    /// U^T J U for the rotation U by angle theta (coordinate change).
    InfoMatrix2 rotated_frame(double theta) const;

    /// Largest absolute entry difference.
    double max_abs_diff(const InfoMatrix2& o) const;

private:
    double a11_ = 0.0;
    double a12_ = 0.0;
    double a22_ = 0.0;
};

/// Eigen-parametrization F(mu, eta, theta) = U_theta diag(mu, eta) U_theta^T.
struct EllipseForm {
    double mu = 0.0;     ///< major information eigenvalue
    double eta = 0.0;    ///< minor information eigenvalue
    double theta = 0.0;  ///< rotation of the major axis, in [0, pi)

    InfoMatrix2 to_matrix() const;
};

/// Tagged error bound: either a finite value (m^2) or "unlocalizable", which is
/// what a singular EFIM yields. Experiment code counts the latter as outage.
class ErrorBound {
public:
    static ErrorBound finite(double v) { return ErrorBound(v, true); }
    static ErrorBound unlocalizable() { return ErrorBound(std::numeric_limits<double>::infinity(), false); }

    bool localizable() const { return localizable_; }
    explicit operator bool() const { return localizable_; }

    /// Throws std::logic_error when unlocalizable.
    double value() const;
    double value_or(double fallback) const { return localizable_ ? value_ : fallback; }

private:
    ErrorBound(double v, bool ok) : value_(v), localizable_(ok) {}
    double value_;
    bool localizable_;
};

/// Unit vector [cos phi, sin phi].
Eigen::Vector2d direction(double phi);

/// Ranging direction matrix q q^T.
InfoMatrix2 rdm(double phi);

/// 3D ranging direction matrix for azimuth `azimuth` and elevation `elevation`:
/// q = [cos az cos el, sin az cos el, sin el].
Eigen::Matrix3d rdm3d(double azimuth, double elevation);

/// Wrap an angle into [0, pi).
double wrap_half_turn(double angle);

/// Eigen-decomposition of a PSD block. Throws NotPsdError when an eigenvalue is
/// below -kPsdRelTol * trace; tiny negative eigenvalues are clamped to zero.
/// When mu == eta the angle is fixed at 0.
EllipseForm to_ellipse(const InfoMatrix2& j);

/// F(mu, eta, theta).
InfoMatrix2 ellipse_matrix(double mu, double eta, double theta);

/// trace(J^-1), or unlocalizable when J is singular.
ErrorBound speb(const InfoMatrix2& j);

/// u^T J^-1 u for a unit vector u, or unlocalizable when J is singular.
ErrorBound dpeb(const InfoMatrix2& j, const Eigen::Vector2d& u);

/// Closed-form ellipse update when an anchor adds RI nu * rdm(phi).
struct FusionResult {
    EllipseForm ellipse;
    ErrorBound speb;
};

/// Closed-form information-ellipse update for a new anchor with intensity nu
/// along phi. Throws std::invalid_argument for nu < 0.
FusionResult fuse_anchor(const EllipseForm& e, double nu, double phi);

}  // namespace locbound
