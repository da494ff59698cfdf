#include "h2h/optimizer.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/QR>

#include "h2h/errors.hpp"

namespace h2h::opt {

double orthogonality_error(const Matrix& m) {
    const Matrix gram = m.transpose() * m;
    return (gram - Matrix::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
}

StiefelMatrix StiefelMatrix::from_matrix(Matrix m, double tol) {
    if (m.cols() > m.rows() || m.cols() == 0) {
        throw DimensionError("Stiefel matrix must be n' x n with 0 < n <= n'");
    }
    const double err = orthogonality_error(m);
    if (!(err <= tol)) {
        throw DomainError("columns are not orthonormal: ||M^T M - I||_inf = " + std::to_string(err));
    }
    return StiefelMatrix(std::move(m));
}

Matrix tangent_project(const Matrix& w, const Matrix& g) {
    if (w.rows() != g.rows() || w.cols() != g.cols()) {
        throw DimensionError("tangent_project: W and G shapes differ");
    }
    const Matrix sym = w.transpose() * g + g.transpose() * w;
    return g - 0.5 * w * sym;
}

Matrix qf(const Matrix& m) {
    if (m.cols() > m.rows()) {
        throw DimensionError("qf: more columns than rows");
    }
    if (!m.allFinite()) {
        throw NumericError("qf: non-finite input");
    }
    const Eigen::Index n = m.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), n);
    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = r(j, j);
        if (std::abs(d) <= 1e-12 * scale) {
            throw NumericError("qf: matrix is rank deficient (|R_" + std::to_string(j) + std::to_string(j) +
                               "| = " + std::to_string(std::abs(d)) + ")");
        }
        if (d < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return q;
}

StiefelMatrix qr_retract(const StiefelMatrix& w, const Matrix& p) {
    if (p.rows() != w.rows() || p.cols() != w.cols()) {
        throw DimensionError("qr_retract: step shape differs from W");
    }
    return StiefelMatrix::unchecked(qf(w.matrix() - p));
}

StiefelMatrix riemannian_step(const StiefelMatrix& w, const Matrix& g, double eta) {
    if (eta < 0.0) {
        throw ConfigError("riemannian_step: negative learning rate");
    }
    const Matrix p = eta * tangent_project(w.matrix(), g);
    if (p.isZero(0.0)) {
        return w;
    }
    return qr_retract(w, p);
}

StiefelMatrix orthogonal_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    if (cols > rows || cols <= 0) {
        throw ConfigError("orthogonal_init: need 0 < n <= n', got n' = " + std::to_string(rows) +
                          ", n = " + std::to_string(cols));
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(rows, cols);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        g.data()[k] = normal(rng);
    }
    return StiefelMatrix::unchecked(qf(g));
}

OptState::OptState(OptConfig cfg) : config(cfg) {
    if (config.eta_riemannian < 0.0 || config.eta_euclidean < 0.0 || !std::isfinite(config.eta_riemannian) ||
        !std::isfinite(config.eta_euclidean)) {
        throw ConfigError("learning rates must be finite and >= 0");
    }
}

void euclidean_step(Matrix& param, const Matrix& grad, OptState& state, std::size_t slot) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
        throw DimensionError("euclidean_step: gradient shape differs from parameter");
    }
    const OptConfig& c = state.config;
    if (c.rule == EuclideanRule::Sgd) {
        param -= c.eta_euclidean * grad;
        return;
    }
    if (state.first_moment.size() <= slot) {
        state.first_moment.resize(slot + 1);
        state.second_moment.resize(slot + 1);
    }
    Matrix& m = state.first_moment[slot];
    Matrix& v = state.second_moment[slot];
    if (m.size() == 0) {
        m = Matrix::Zero(param.rows(), param.cols());
        v = Matrix::Zero(param.rows(), param.cols());
    }
    const double t = static_cast<double>(state.step + 1);
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    param.array() -= c.eta_euclidean * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

void apply_step(ad::ParamStore& params, const ad::Grad& grads, OptState& state) {
    if (grads.size() != params.size()) {
        throw DimensionError("apply_step: " + std::to_string(grads.size()) + " gradients for " +
                             std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        ad::Param& p = params[i];
        if (p.kind == ad::ParamKind::Stiefel) {
            p.value = riemannian_step(StiefelMatrix::unchecked(p.value), grads[i], state.config.eta_riemannian).matrix();
        } else {
            euclidean_step(p.value, grads[i], state, i);
        }
    }
    ++state.step;
}

}  // namespace h2h::opt
