#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/LU>

#include "h2h/errors.hpp"
#include "h2h/optimizer.hpp"
#include "oracles.hpp"

using namespace h2h;
using opt::Matrix;

namespace {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("tangent_project examples") {
    const Matrix w = opt::orthogonal_init(4, 4, 1).matrix();
    CHECK(max_abs(opt::tangent_project(w, w)) < 1e-15);

    std::mt19937_64 rng(2);
    const Matrix b = gaussian(rng, 4, 4);
    const Matrix skew = b - b.transpose();
    const Matrix g = w * skew;
    CHECK(max_abs(opt::tangent_project(w, g) - g) < 1e-14);

    for (int i = 0; i < 100; ++i) {
        const Matrix ws = opt::orthogonal_init(6, 3, static_cast<std::uint64_t>(i)).matrix();
        const Matrix p = opt::tangent_project(ws, gaussian(rng, 6, 3));
        CHECK(max_abs(ws.transpose() * p + p.transpose() * ws) < 1e-10);
    }
}

TEST_CASE("qr retraction examples") {
    const auto w = opt::orthogonal_init(5, 3, 3);
    CHECK(max_abs(opt::qr_retract(w, Matrix::Zero(5, 3)).matrix() - w.matrix()) < 1e-12);
    const auto eye = opt::StiefelMatrix::from_matrix(Matrix::Identity(2, 2));
    CHECK(max_abs(opt::qr_retract(eye, Matrix::Zero(2, 2)).matrix() - Matrix::Identity(2, 2)) < 1e-15);
    Matrix m(2, 2);
    m << 2, 0, 0, 3;
    CHECK(max_abs(opt::qf(m) - Matrix::Identity(2, 2)) < 1e-15);
    // Negative diagonal entries flip the matching columns.
    m << -2, 0, 0, 3;
    Matrix expected(2, 2);
    expected << -1, 0, 0, 1;
    CHECK(max_abs(opt::qf(m) - expected) < 1e-15);

    Matrix rank_deficient(3, 2);
    rank_deficient << 1, 2, 2, 4, 3, 6;
    CHECK_THROWS_AS(opt::qf(rank_deficient), NumericError);
}

TEST_CASE("qf matches an independent Gram-Schmidt with positive diagonal") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = gaussian(rng, 6, 4);
        Matrix q = a;
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
            }
            q.col(j).normalize();
        }
        CHECK(max_abs(opt::qf(a) - q) < 1e-12);
    }
}

TEST_CASE("riemannian_step") {
    const auto w = opt::orthogonal_init(4, 4, 5);
    CHECK(opt::riemannian_step(w, Matrix::Zero(4, 4), 0.1).matrix() == w.matrix());

    std::mt19937_64 rng(6);
    auto drift = opt::orthogonal_init(6, 4, 7);
    for (int i = 0; i < 100; ++i) drift = opt::riemannian_step(drift, gaussian(rng, 6, 4), 0.1);
    CHECK(opt::orthogonality_error(drift.matrix()) < 1e-8);

    // Descent on J(W) = ||W - Q*||_F^2 with Euclidean gradient 2(W - Q*).
    const Matrix target = opt::orthogonal_init(4, 4, 8).matrix();
    const auto start = opt::orthogonal_init(4, 4, 9);
    auto loss = [&](const Matrix& m) { return (m - target).squaredNorm(); };
    const auto next = opt::riemannian_step(start, 2.0 * (start.matrix() - target), 1e-3);
    CHECK(loss(next.matrix()) < loss(start.matrix()));

    const Matrix g = gaussian(rng, 4, 4);
    const auto a = opt::riemannian_step(start, g, 0.05);
    const auto b = opt::riemannian_step(start, g, 0.05);
    CHECK(a.matrix() == b.matrix());
}

TEST_CASE("Stiefel membership survives ten thousand steps") {
    std::mt19937_64 rng(10);
    auto w = opt::orthogonal_init(8, 8, 11);
    for (int i = 0; i < 10000; ++i) {
        const Matrix g = gaussian(rng, 8, 8);
        if (i % 1000 == 0) {
            const Matrix p = opt::tangent_project(w.matrix(), g);
            CHECK(max_abs(w.matrix().transpose() * p + p.transpose() * w.matrix()) < 1e-10);
        }
        w = opt::riemannian_step(w, g, 0.05);
    }
    CHECK(opt::orthogonality_error(w.matrix()) < 1e-8);
}

TEST_CASE("orthogonal_init") {
    const auto a = opt::orthogonal_init(16, 16, 42);
    CHECK(opt::orthogonality_error(a.matrix()) < 1e-12);
    CHECK(opt::orthogonal_init(16, 16, 42).matrix() == a.matrix());
    CHECK(std::abs(std::abs(a.matrix().determinant()) - 1.0) < 1e-9);
    CHECK(opt::orthogonality_error(opt::orthogonal_init(7, 3, 1).matrix()) < 1e-12);
    CHECK_THROWS_AS(opt::orthogonal_init(3, 4, 1), ConfigError);
    CHECK_THROWS_AS(opt::StiefelMatrix::from_matrix(Matrix::Constant(2, 2, 1.0)), DomainError);
}

TEST_CASE("euclidean_step") {
    opt::OptState sgd(opt::OptConfig{.eta_riemannian = 0.1, .eta_euclidean = 0.1});
    Matrix p = Matrix::Constant(1, 1, 1.0);
    opt::euclidean_step(p, Matrix::Zero(1, 1), sgd, 0);
    CHECK(p(0, 0) == 1.0);
    opt::euclidean_step(p, Matrix::Constant(1, 1, 1.0), sgd, 0);
    CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-15));

    // Quadratic bowl f(x) = 1/2 (x - c)^T A (x - c) with SPD A.
    Matrix c(1, 3), diag(1, 3);
    c << 1.0, -2.0, 0.5;
    diag << 1.0, 2.0, 4.0;
    Matrix x = Matrix::Zero(1, 3);
    opt::OptState bowl(opt::OptConfig{.eta_riemannian = 0.1, .eta_euclidean = 0.1});
    int steps = 0;
    while (max_abs(x - c) > 1e-6 && steps < 1000) {
        const Matrix g = (x - c).cwiseProduct(diag);
        opt::euclidean_step(x, g, bowl, 0);
        ++steps;
    }
    CHECK(max_abs(x - c) <= 1e-6);
    CHECK(steps <= 1000);

    CHECK_THROWS_AS(opt::OptState(opt::OptConfig{.eta_riemannian = -1.0}), ConfigError);
}

TEST_CASE("apply_step routes parameters by kind") {
    ad::ParamStore ps;
    ps.add("w", opt::orthogonal_init(3, 3, 1).matrix(), ad::ParamKind::Stiefel);
    ps.add("b", Matrix::Constant(1, 3, 1.0));
    std::mt19937_64 rng(12);
    ad::Grad g;
    g.values = {gaussian(rng, 3, 3), Matrix::Constant(1, 3, 2.0)};

    for (auto rule : {opt::EuclideanRule::Sgd, opt::EuclideanRule::Adam}) {
        ad::ParamStore copy = ps;
        opt::OptState st(opt::OptConfig{.eta_riemannian = 0.1, .eta_euclidean = 0.1, .rule = rule});
        for (int i = 0; i < 50; ++i) opt::apply_step(copy, g, st);
        CHECK(st.step == 50);
        CHECK(opt::orthogonality_error(copy.value("w")) < 1e-8);
        CHECK(copy.value("b")(0, 0) < 1.0);
    }

    ad::ParamStore frozen = ps;
    opt::OptState zero(opt::OptConfig{.eta_riemannian = 0.0, .eta_euclidean = 0.0});
    opt::apply_step(frozen, g, zero);
    CHECK(frozen.value("w") == ps.value("w"));
    CHECK(frozen.value("b") == ps.value("b"));
}

TEST_CASE("Adam first step moves by the learning rate") {
    opt::OptState st(opt::OptConfig{.eta_riemannian = 0.1, .eta_euclidean = 0.01, .rule = opt::EuclideanRule::Adam});
    Matrix p = Matrix::Zero(1, 2);
    Matrix g(1, 2);
    g << 3.0, -0.5;
    opt::euclidean_step(p, g, st, 0);
    CHECK(std::abs(p(0, 0) + 0.01) < 1e-8);
    CHECK(std::abs(p(0, 1) - 0.01) < 1e-8);
}
