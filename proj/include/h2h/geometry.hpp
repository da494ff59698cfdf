#pragma once

// Hyperbolic geometry kernel (curvature -1) over the Lorentz hyperboloid,
// the Klein ball and the Poincare ball. Everything here is a pure function of
// its arguments and safe to call from any thread.

#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace h2h::geo {

using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Vector>;

/// Largest admissible norm for Klein and Poincare coordinates.
inline constexpr double kBallClamp = 1.0 - 1e-12;
/// Tolerance on |<x,x>_L + 1| accepted when validating a Lorentz point.
inline constexpr double kManifoldTol = 1e-9;
/// Tolerance on |<x,v>_L| accepted for a tangent vector at x.
inline constexpr double kTangentTol = 1e-6;
/// Below this Lorentz norm a tangent vector is treated as zero.
inline constexpr double kZeroTangent = 1e-12;

/// Point on the n-dimensional hyperboloid, stored as n+1 coordinates.
class LorentzPoint {
public:
    /// o = [1, 0, ..., 0]
    static LorentzPoint origin(std::size_t dim);

    /// Validates <x,x>_L = -1 (within `tol`) and x0 > 0.
    static LorentzPoint from_coords(Vector coords, double tol = kManifoldTol);

    /// Wraps coordinates without checking; callers guarantee the invariant.
    static LorentzPoint unchecked(Vector coords) { return LorentzPoint(std::move(coords)); }

    const Vector& coords() const { return coords_; }
    std::size_t dim() const { return static_cast<std::size_t>(coords_.size()) - 1; }
    double time() const { return coords_[0]; }
    auto spatial() const { return coords_.tail(coords_.size() - 1); }

private:
    explicit LorentzPoint(Vector coords) : coords_(std::move(coords)) {}
    Vector coords_;
};

/// Point of the open Klein ball.
class KleinPoint {
public:
    /// Throws DomainError when ||k|| >= 1; norms in [kBallClamp, 1) are pulled
    /// back to kBallClamp.
    static KleinPoint from_coords(Vector coords);
    const Vector& coords() const { return coords_; }
    std::size_t dim() const { return static_cast<std::size_t>(coords_.size()); }

private:
    explicit KleinPoint(Vector coords) : coords_(std::move(coords)) {}
    Vector coords_;
};

/// Point of the open Poincare ball.
class PoincarePoint {
public:
    /// Same clamping and domain rules as KleinPoint::from_coords.
    static PoincarePoint from_coords(Vector coords);
    const Vector& coords() const { return coords_; }
    std::size_t dim() const { return static_cast<std::size_t>(coords_.size()); }

private:
    explicit PoincarePoint(Vector coords) : coords_(std::move(coords)) {}
    Vector coords_;
};

/// Vector of the tangent space at `base`; <base, v>_L = 0.
class TangentVector {
public:
    /// Throws ContractViolation when |<base, coords>_L| > kTangentTol.
    TangentVector(LorentzPoint base, Vector coords);

    const LorentzPoint& base() const { return base_; }
    const Vector& coords() const { return coords_; }
    /// sqrt(max(<v,v>_L, 0))
    double norm() const;

private:
    LorentzPoint base_;
    Vector coords_;
};

/// -x0*y0 + sum_i xi*yi
double lorentz_inner(const VectorRef& x, const VectorRef& y);

/// arcosh(max(-<x,y>_L, 1)); close to the diagonal it is evaluated as
/// 2 asinh(||x - y||_L / 2), which is exact in value and much better conditioned.
double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y);

/// Orthogonal projection of an ambient vector onto the tangent space at x.
Vector tangent_projection(const LorentzPoint& x, const VectorRef& u);

LorentzPoint exp_map(const LorentzPoint& x, const VectorRef& v);
LorentzPoint exp_map(const TangentVector& v);
TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y);

PoincarePoint lorentz_to_poincare(const LorentzPoint& x);
LorentzPoint poincare_to_lorentz(const PoincarePoint& b);

KleinPoint lorentz_to_klein(const LorentzPoint& x);
LorentzPoint klein_to_lorentz(const KleinPoint& k);

/// 1 / sqrt(1 - ||k||^2)
double lorentz_factor(const KleinPoint& k);

/// Klein-coordinate Einstein midpoint: sum(gamma_j k_j) / sum(gamma_j).
KleinPoint einstein_midpoint(std::span<const KleinPoint> points);

/// The same midpoint computed on the hyperboloid as s / sqrt(-<s,s>_L) with
/// s the coordinate sum of the points.
LorentzPoint lorentz_midpoint(std::span<const LorentzPoint> points);

/// Recomputes x0 = sqrt(1 + ||x_{1:n}||^2) keeping the spatial part.
LorentzPoint project_to_lorentz(const VectorRef& raw);

}  // namespace h2h::geo
