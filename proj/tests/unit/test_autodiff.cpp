#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "h2h/autodiff.hpp"
#include "h2h/errors.hpp"
#include "oracles.hpp"

using namespace h2h;
using ad::Matrix;
using ad::Var;

namespace {

Matrix mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> xs) {
    Matrix m(r, c);
    Eigen::Index i = 0;
    for (double x : xs) m.data()[i++] = x;
    return m;
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

// Lorentz rows with the given spatial parts.
Matrix lorentz_rows(const Matrix& spatial) {
    Matrix out(spatial.rows(), spatial.cols() + 1);
    for (Eigen::Index i = 0; i < spatial.rows(); ++i) {
        out(i, 0) = std::sqrt(1.0 + spatial.row(i).squaredNorm());
        out.row(i).tail(spatial.cols()) = spatial.row(i);
    }
    return out;
}

}  // namespace

TEST_CASE("matmul adjoint") {
    ad::ParamStore ps;
    ps.add("w", mat(2, 3, {1, 2, 3, 4, 5, 6}));
    ad::Tape tape;
    const auto b = tape.bind(ps);
    const Matrix x = mat(3, 1, {0.5, -1, 2});
    const Matrix c = mat(2, 1, {3, -2});
    const Var y = ad::matmul(b["w"], tape.constant(x));
    const auto g = tape.backward(ad::dot(y, tape.constant(c)));
    CHECK((g[0] - c * x.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("arcosh derivative at 2") {
    ad::ParamStore ps;
    ps.add("u", mat(1, 1, {2.0}));
    ad::Tape tape;
    const auto g = tape.backward(ad::arcosh(tape.bind(ps)["u"]));
    const double fd = oracle::central_difference([](double u) { return std::acosh(u); }, 2.0, 1e-6);
    CHECK(std::abs(g[0](0, 0) - fd) < 1e-8);
    CHECK(std::abs(g[0](0, 0) - 0.5773503) < 1e-7);
}

TEST_CASE("constants receive zero gradient") {
    ad::ParamStore ps;
    ps.add("p", mat(1, 2, {1, 2}));
    ad::Tape tape;
    const Var c = tape.constant(mat(1, 2, {3, 4}));
    const Var loss = ad::dot(ad::mul(tape.bind(ps)["p"], c), c);
    tape.backward(loss);
    CHECK(tape.gradient(c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("half squared norm gives the parameter back") {
    ad::ParamStore ps;
    ps.add("p", mat(2, 2, {1, -2, 3.5, 0.25}));
    ad::Tape tape;
    const Var p = tape.bind(ps)["p"];
    const auto g = tape.backward(ad::scale(ad::dot(p, p), 0.5));
    CHECK((g[0] - ps.value("p")).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tape contracts") {
    ad::ParamStore ps;
    ps.add("p", mat(1, 2, {1, 2}));
    ad::Tape tape;
    const Var p = tape.bind(ps)["p"];
    const Var loss = ad::sum(p);
    CHECK_THROWS_AS(tape.backward(p), ContractViolation);
    tape.backward(loss);
    CHECK(tape.consumed());
    CHECK_THROWS_AS(tape.backward(loss), StateError);
    CHECK_THROWS_AS(ad::sum(p), StateError);

    ad::Tape empty;
    CHECK_THROWS_AS(empty.backward(Var{}), StateError);

    ad::Tape other;
    const Var q = other.bind(ps)["p"];
    const std::vector<Var> leaky{q};
    CHECK_THROWS_AS(other.record(ad::Op::LeakyRelu, leaky), UnsupportedOp);
    const std::vector<Var> wrong{q, q};
    CHECK_THROWS_AS(other.record(ad::Op::Exp, wrong), ContractViolation);
    const std::vector<Var> one{q};
    CHECK(other.record(ad::Op::Exp, one).value().isApprox(ps.value("p").array().exp().matrix(), 1e-15));

    ad::ParamStore dup;
    dup.add("a", Matrix::Zero(1, 1));
    CHECK_THROWS_AS(dup.add("a", Matrix::Zero(1, 1)), ConfigError);
}

TEST_CASE("clear allows a fresh forward pass") {
    ad::ParamStore ps;
    ps.add("p", mat(1, 1, {3}));
    ad::Tape tape;
    auto g1 = tape.backward(ad::dot(tape.bind(ps)["p"], tape.bind(ps)["p"]));
    tape.clear();
    const Var p = tape.bind(ps)["p"];
    auto g2 = tape.backward(ad::dot(p, p));
    CHECK(g2[0](0, 0) == 6.0);
    CHECK(g1[0](0, 0) == 6.0);
}

TEST_CASE("grad_check on a linear function is exact") {
    ad::ParamStore ps;
    ps.add("p", mat(2, 3, {1, 2, 3, 4, 5, 6}));
    const Matrix c = mat(2, 3, {0.5, -1, 2, 7, 0, -3});
    const auto report = ad::grad_check(
        [&](ad::Tape& t, const ad::Bindings& b) { return ad::dot(b["p"], t.constant(c)); }, ps);
    CHECK(report.max_rel_error < 1e-9);
    CHECK(report.coordinates == 6);
}

TEST_CASE("grad_check rejects non-finite losses") {
    ad::ParamStore ps;
    ps.add("p", mat(1, 1, {1000.0}));
    CHECK_THROWS_AS(ad::grad_check([](ad::Tape&, const ad::Bindings& b) { return ad::sum(ad::exp(b["p"])); }, ps),
                    DomainError);
}

TEST_CASE("every primitive matches central differences") {
    std::mt19937_64 rng(7);
    using Builder = std::function<Var(ad::Tape&, Var, Var)>;
    struct Case {
        std::string name;
        Matrix a, b;
        Builder f;
    };
    const Matrix pos = random_matrix(rng, 3, 2, 0.5, 2.0);
    const Matrix any = random_matrix(rng, 3, 2, -1.0, 1.0);
    const Matrix big = random_matrix(rng, 3, 2, 1.2, 3.0);
    const Matrix sq = random_matrix(rng, 2, 2, -1.0, 1.0);
    const Matrix pts = lorentz_rows(random_matrix(rng, 4, 3, -0.8, 0.8));
    const Matrix ball = random_matrix(rng, 4, 3, -0.4, 0.4);
    const Matrix ctr = lorentz_rows(random_matrix(rng, 3, 3, -0.8, 0.8));
    const Matrix bias = random_matrix(rng, 1, 2, -1.0, 1.0);

    std::vector<Case> cases = {
        {"add", any, pos, [](ad::Tape&, Var a, Var b) { return ad::add(a, b); }},
        {"sub", any, pos, [](ad::Tape&, Var a, Var b) { return ad::sub(a, b); }},
        {"mul", any, pos, [](ad::Tape&, Var a, Var b) { return ad::mul(a, b); }},
        {"div", any, pos, [](ad::Tape&, Var a, Var b) { return ad::div(a, b); }},
        {"scale", any, pos, [](ad::Tape&, Var a, Var) { return ad::scale(a, -1.7); }},
        {"add_scalar", any, pos, [](ad::Tape&, Var a, Var) { return ad::add_scalar(a, 0.3); }},
        {"matmul", any, sq, [](ad::Tape&, Var a, Var b) { return ad::matmul(a, b); }},
        {"add_row_bias", any, bias, [](ad::Tape&, Var a, Var b) { return ad::add_row_bias(a, b); }},
        {"dot", any, pos, [](ad::Tape&, Var a, Var b) { return ad::dot(a, b); }},
        {"norm2", any, pos, [](ad::Tape&, Var a, Var) { return ad::norm2(a); }},
        {"mean_rows", any, pos, [](ad::Tape&, Var a, Var) { return ad::mean_rows(a); }},
        {"cosh", any, pos, [](ad::Tape&, Var a, Var) { return ad::cosh(a); }},
        {"sinh", any, pos, [](ad::Tape&, Var a, Var) { return ad::sinh(a); }},
        {"tanh", any, pos, [](ad::Tape&, Var a, Var) { return ad::tanh(a); }},
        {"arcosh", big, pos, [](ad::Tape&, Var a, Var) { return ad::arcosh(a); }},
        {"sqrt", pos, any, [](ad::Tape&, Var a, Var) { return ad::sqrt(a); }},
        {"exp", any, pos, [](ad::Tape&, Var a, Var) { return ad::exp(a); }},
        {"log", pos, any, [](ad::Tape&, Var a, Var) { return ad::log(a); }},
        {"relu", any, pos, [](ad::Tape&, Var a, Var) { return ad::relu(a); }},
        {"leaky_relu", any, pos, [](ad::Tape&, Var a, Var) { return ad::leaky_relu(a, 0.2); }},
        {"exp_map_origin", any, pos, [](ad::Tape&, Var a, Var) { return ad::exp_map_origin(a); }},
        {"lorentz_linear", pts, ad::Matrix::Identity(3, 3) * 0.9,
         [](ad::Tape&, Var a, Var b) { return ad::lorentz_linear(a, b); }},
        {"to_klein", pts, pos, [](ad::Tape&, Var a, Var) { return ad::to_klein(a); }},
        {"from_klein", ball, pos, [](ad::Tape&, Var a, Var) { return ad::from_klein(a); }},
        {"to_poincare", pts, pos, [](ad::Tape&, Var a, Var) { return ad::to_poincare(a); }},
        {"from_poincare", ball, pos, [](ad::Tape&, Var a, Var) { return ad::from_poincare(a); }},
        {"lorentz_normalize", pts * 1.3, pos, [](ad::Tape&, Var a, Var) { return ad::lorentz_normalize(a); }},
        {"project_to_lorentz", pts, pos, [](ad::Tape&, Var a, Var) { return ad::project_to_lorentz(a); }},
        {"centroid_distance", pts, ctr, [](ad::Tape&, Var a, Var b) { return ad::centroid_distance(a, b); }},
        {"centroid_euclidean", any, ball.topRows(2).leftCols(2),
         [](ad::Tape&, Var a, Var b) { return ad::centroid_euclidean(a, b); }},
        {"fermi_dirac", pos, any, [](ad::Tape&, Var a, Var) { return ad::fermi_dirac(a, 2.0, 0.7); }},
    };
    for (const Case& c : cases) {
        CAPTURE(c.name);
        ad::ParamStore ps;
        ps.add("a", c.a);
        ps.add("b", c.b);
        const auto report = ad::grad_check(
            [&](ad::Tape& t, const ad::Bindings& b) {
                const Var out = c.f(t, b["a"], b["b"]);
                // Random projection so every output entry contributes.
                std::mt19937_64 wr(99);
                return ad::dot(out, t.constant(random_matrix(wr, out.rows(), out.cols(), -1.0, 1.0)));
            },
            ps);
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("graph and pair primitives match central differences") {
    std::mt19937_64 rng(8);
    const std::vector<data::Edge> edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}, {1, 3}};
    const data::Graph g(5, edges);  // node 4 is isolated
    const std::vector<data::Edge> pairs{{0, 1}, {2, 4}, {3, 0}, {1, 4}};
    const Matrix pts = lorentz_rows(random_matrix(rng, 5, 3, -0.8, 0.8));
    const Matrix plain = random_matrix(rng, 5, 3, -1.0, 1.0);
    const std::vector<double> labels{1, 0, 1, 0};
    const std::vector<int> classes{0, 1, 2, 1, 1};
    const std::vector<std::uint32_t> rows{0, 2, 4};
    using Builder = std::function<Var(ad::Tape&, Var)>;
    const std::vector<std::pair<std::string, std::pair<Matrix, Builder>>> cases = {
        {"einstein_midpoint", {Matrix(pts.rightCols(3).array() / pts.col(0).replicate(1, 3).array()),
                               [&](ad::Tape&, Var k) { return ad::einstein_midpoint(k, g); }}},
        {"neighbor_sum", {plain, [&](ad::Tape&, Var x) { return ad::neighbor_sum(x, g); }}},
        {"mean_aggregate", {plain, [&](ad::Tape&, Var x) { return ad::mean_aggregate(x, g); }}},
        {"pair_sq_distance", {pts, [&](ad::Tape&, Var x) { return ad::pair_sq_distance(x, pairs); }}},
        {"pair_sq_euclidean", {plain, [&](ad::Tape&, Var x) { return ad::pair_sq_euclidean(x, pairs); }}},
        {"bce_with_logits", {plain.leftCols(1).topRows(4), [&](ad::Tape&, Var x) { return ad::bce_with_logits(x, labels); }}},
        {"softmax_cross_entropy", {plain, [&](ad::Tape&, Var x) { return ad::softmax_cross_entropy(x, classes, rows); }}},
    };
    for (const auto& [name, c] : cases) {
        CAPTURE(name);
        ad::ParamStore ps;
        ps.add("x", c.first);
        const auto report = ad::grad_check(
            [&](ad::Tape& t, const ad::Bindings& b) {
                const Var out = c.second(t, b["x"]);
                std::mt19937_64 wr(5);
                return ad::dot(out, t.constant(random_matrix(wr, out.rows(), out.cols(), -1.0, 1.0)));
            },
            ps);
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("squared distance gradient is finite at coincident points") {
    ad::ParamStore ps;
    Matrix x(2, 3);
    x.row(0) << std::cosh(0.4), std::sinh(0.4), 0.0;
    x.row(1) = x.row(0);
    ps.add("x", x);
    ad::Tape tape;
    const std::vector<data::Edge> pairs{{0, 1}};
    const auto g = tape.backward(ad::sum(ad::pair_sq_distance(tape.bind(ps)["x"], pairs)));
    CHECK(g[0].allFinite());
    // d^2 ~ 2(u - 1) near the diagonal, with u = -<x,y>_L.
    Matrix expected(2, 3);
    expected.row(0) << 2.0 * x(1, 0), -2.0 * x(1, 1), -2.0 * x(1, 2);
    expected.row(1) << 2.0 * x(0, 0), -2.0 * x(0, 1), -2.0 * x(0, 2);
    CHECK((g[0] - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backward is deterministic") {
    std::mt19937_64 rng(9);
    ad::ParamStore ps;
    ps.add("w", random_matrix(rng, 4, 3, -1, 1));
    auto run = [&] {
        ad::Tape t;
        const Var w = t.bind(ps)["w"];
        return t.backward(ad::norm2(ad::exp_map_origin(ad::tanh(w))));
    };
    const auto a = run();
    const auto b = run();
    CHECK(a[0] == b[0]);
}
