#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "h2h/autodiff.hpp"

namespace h2h::opt {

using ad::Matrix;

constexpr double kStiefelTol = 1e-8;

/// ||M^T M - I||_inf (max absolute entry).
double orthogonality_error(const Matrix& m);

/// Matrix with orthonormal columns, n' x n with n <= n'.
class StiefelMatrix {
public:
    /// Throws DomainError if the columns are not orthonormal within tol.
    static StiefelMatrix from_matrix(Matrix m, double tol = kStiefelTol);
    static StiefelMatrix unchecked(Matrix m) { return StiefelMatrix(std::move(m)); }

    const Matrix& matrix() const { return m_; }
    Eigen::Index rows() const { return m_.rows(); }
    Eigen::Index cols() const { return m_.cols(); }

private:
    explicit StiefelMatrix(Matrix m) : m_(std::move(m)) {}
    Matrix m_;
};

/// G - 1/2 W (W^T G + G^T W): projection onto the tangent space of St at W.
Matrix tangent_project(const Matrix& w, const Matrix& g);

/// Orthogonal factor of a thin Householder QR, with columns flipped so that R
/// has a positive diagonal. Throws NumericError when m is rank deficient.
Matrix qf(const Matrix& m);

/// qf(W - P).
StiefelMatrix qr_retract(const StiefelMatrix& w, const Matrix& p);

/// qr_retract(W, eta * tangent_project(W, G)); W itself when that step is exactly zero.
StiefelMatrix riemannian_step(const StiefelMatrix& w, const Matrix& g, double eta);

/// qf of a seeded standard Gaussian rows x cols matrix. ConfigError if cols > rows.
StiefelMatrix orthogonal_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

enum class EuclideanRule : std::uint8_t { Sgd, Adam };

struct OptConfig {
    double eta_riemannian = 0.01;
    double eta_euclidean = 0.01;
    EuclideanRule rule = EuclideanRule::Sgd;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Learning rates plus the Adam moments for unconstrained parameters.
struct OptState {
    OptConfig config;
    std::uint64_t step = 0;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;

    /// Throws ConfigError for non-positive learning rates (zero is allowed and
    /// freezes the group).
    explicit OptState(OptConfig cfg = {});
};

/// In-place first-order update of one unconstrained parameter.
void euclidean_step(Matrix& param, const Matrix& grad, OptState& state, std::size_t slot);

/// Updates every parameter: Stiefel ones by riemannian_step, the rest by the
/// Euclidean rule. Increments state.step once.
void apply_step(ad::ParamStore& params, const ad::Grad& grads, OptState& state);

}  // namespace h2h::opt
