#include "h2h/geometry.hpp"

#include <cmath>
#include <string>

#include "h2h/errors.hpp"

namespace h2h::geo {
namespace {

bool all_finite(const VectorRef& v) { return v.allFinite(); }

// Shared validation for the two ball models.
Vector clamp_to_ball(Vector coords, const char* model) {
    if (!all_finite(coords)) {
        throw DomainError(std::string(model) + " point has non-finite coordinates");
    }
    const double norm = coords.norm();
    if (norm >= 1.0) {
        throw DomainError(std::string(model) + " point has norm " + std::to_string(norm) + " >= 1");
    }
    if (norm > kBallClamp) {
        coords *= kBallClamp / norm;
    }
    return coords;
}

}  // namespace

LorentzPoint LorentzPoint::origin(std::size_t dim) {
    Vector c = Vector::Zero(static_cast<Eigen::Index>(dim) + 1);
    c[0] = 1.0;
    return LorentzPoint(std::move(c));
}

LorentzPoint LorentzPoint::from_coords(Vector coords, double tol) {
    if (coords.size() < 2) {
        throw DimensionError("Lorentz point needs at least 2 coordinates");
    }
    if (!all_finite(coords)) {
        throw DomainError("Lorentz point has non-finite coordinates");
    }
    const double self = lorentz_inner(coords, coords);
    if (std::abs(self + 1.0) > tol || coords[0] <= 0.0) {
        throw DomainError("coordinates are not on the hyperboloid: <x,x>_L = " + std::to_string(self) +
                          ", x0 = " + std::to_string(coords[0]));
    }
    return LorentzPoint(std::move(coords));
}

KleinPoint KleinPoint::from_coords(Vector coords) {
    return KleinPoint(clamp_to_ball(std::move(coords), "Klein"));
}

PoincarePoint PoincarePoint::from_coords(Vector coords) {
    return PoincarePoint(clamp_to_ball(std::move(coords), "Poincare"));
}

TangentVector::TangentVector(LorentzPoint base, Vector coords) : base_(std::move(base)), coords_(std::move(coords)) {
    const double off = lorentz_inner(base_.coords(), coords_);
    if (std::abs(off) > kTangentTol) {
        throw ContractViolation("vector is not tangent at base: <x,v>_L = " + std::to_string(off));
    }
}

double TangentVector::norm() const {
    return std::sqrt(std::max(lorentz_inner(coords_, coords_), 0.0));
}

double lorentz_inner(const VectorRef& x, const VectorRef& y) {
    if (x.size() != y.size()) {
        throw DimensionError("lorentz_inner: length mismatch " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    }
    if (x.size() < 2) {
        throw DimensionError("lorentz_inner: vectors need at least 2 coordinates");
    }
    const Eigen::Index n = x.size() - 1;
    return -x[0] * y[0] + x.tail(n).dot(y.tail(n));
}

double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y) {
    const double u = -lorentz_inner(x.coords(), y.coords());
    if (std::isnan(u)) {
        throw DomainError("lorentz_distance: NaN inner product");
    }
    if (u > 2.0) {
        return std::acosh(u);
    }
    // Near the diagonal arcosh is ill-conditioned; <x-y, x-y>_L = 2(u - 1)
    // computed from the difference keeps d(x, x) = 0 and full precision.
    const Vector diff = x.coords() - y.coords();
    const double q = std::max(lorentz_inner(diff, diff), 0.0);
    return 2.0 * std::asinh(0.5 * std::sqrt(q));
}

Vector tangent_projection(const LorentzPoint& x, const VectorRef& u) {
    return u + lorentz_inner(x.coords(), u) * x.coords();
}

LorentzPoint exp_map(const LorentzPoint& x, const VectorRef& v) {
    return exp_map(TangentVector(x, v));
}

LorentzPoint exp_map(const TangentVector& v) {
    const double r = v.norm();
    if (r < kZeroTangent) {
        return v.base();
    }
    Vector y = std::cosh(r) * v.base().coords() + (std::sinh(r) / r) * v.coords();
    return LorentzPoint::unchecked(std::move(y));
}

TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y) {
    const double inner = lorentz_inner(x.coords(), y.coords());
    const double u = -inner;
    if (std::isnan(u)) {
        throw DomainError("log_map: NaN inner product");
    }
    if (u < 1.0 + 1e-12) {
        return TangentVector(x, Vector::Zero(x.coords().size()));
    }
    const double scale = std::acosh(u) / std::sqrt(inner * inner - 1.0);
    Vector v = scale * (y.coords() + inner * x.coords());
    return TangentVector(x, std::move(v));
}

PoincarePoint lorentz_to_poincare(const LorentzPoint& x) {
    return PoincarePoint::from_coords(x.spatial() / (x.time() + 1.0));
}

LorentzPoint poincare_to_lorentz(const PoincarePoint& b) {
    const Vector& c = b.coords();
    const double sq = c.squaredNorm();
    const double denom = 1.0 - sq;
    Vector out(c.size() + 1);
    out[0] = (1.0 + sq) / denom;
    out.tail(c.size()) = (2.0 / denom) * c;
    return LorentzPoint::unchecked(std::move(out));
}

KleinPoint lorentz_to_klein(const LorentzPoint& x) {
    return KleinPoint::from_coords(x.spatial() / x.time());
}

LorentzPoint klein_to_lorentz(const KleinPoint& k) {
    const double gamma = lorentz_factor(k);
    const Vector& c = k.coords();
    Vector out(c.size() + 1);
    out[0] = gamma;
    out.tail(c.size()) = gamma * c;
    return LorentzPoint::unchecked(std::move(out));
}

double lorentz_factor(const KleinPoint& k) {
    const double sq = k.coords().squaredNorm();
    if (!(sq < 1.0)) {
        throw DomainError("lorentz_factor: Klein norm >= 1");
    }
    return 1.0 / std::sqrt(1.0 - sq);
}

KleinPoint einstein_midpoint(std::span<const KleinPoint> points) {
    if (points.empty()) {
        throw ContractViolation("einstein_midpoint: empty point set");
    }
    const Eigen::Index n = points.front().coords().size();
    Vector num = Vector::Zero(n);
    double den = 0.0;
    for (const KleinPoint& k : points) {
        if (k.coords().size() != n) {
            throw DimensionError("einstein_midpoint: mixed dimensions");
        }
        const double gamma = lorentz_factor(k);
        num += gamma * k.coords();
        den += gamma;
    }
    return KleinPoint::from_coords(num / den);
}

LorentzPoint lorentz_midpoint(std::span<const LorentzPoint> points) {
    if (points.empty()) {
        throw ContractViolation("lorentz_midpoint: empty point set");
    }
    const Eigen::Index n = points.front().coords().size();
    Vector sum = Vector::Zero(n);
    for (const LorentzPoint& p : points) {
        if (p.coords().size() != n) {
            throw DimensionError("lorentz_midpoint: mixed dimensions");
        }
        sum += p.coords();
    }
    const double a = -lorentz_inner(sum, sum);
    if (!(a > 0.0)) {
        throw NumericError("lorentz_midpoint: coordinate sum is not timelike");
    }
    return LorentzPoint::unchecked(sum / std::sqrt(a));
}

LorentzPoint project_to_lorentz(const VectorRef& raw) {
    if (raw.size() < 2) {
        throw DimensionError("project_to_lorentz: need at least 2 coordinates");
    }
    if (!raw.allFinite()) {
        throw DomainError("project_to_lorentz: non-finite input");
    }
    Vector out = raw;
    const Eigen::Index n = raw.size() - 1;
    out[0] = std::sqrt(1.0 + raw.tail(n).squaredNorm());
    return LorentzPoint::unchecked(std::move(out));
}

}  // namespace h2h::geo
