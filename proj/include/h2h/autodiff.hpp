#pragma once

// Reverse-mode differentiation over dense row-major matrices.
//
// A Tape records primitive ops in execution order (so inputs always precede
// the node that consumes them) together with a closure computing the
// vector-Jacobian product. Parameters live in a ParamStore outside the tape;
// binding them to a tape copies their current values in, and backward()
// returns one gradient per stored parameter. Manifold constraints are not
// known to the tape: gradients are Euclidean in ambient coordinates.
//
// A Tape has a single owner. Independent tapes may live on different threads.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "h2h/graph.hpp"

namespace h2h::ad {

using data::Matrix;

enum class Op : std::uint8_t {
    Constant,
    Parameter,
    // elementwise / linear algebra
    Add,
    Sub,
    Mul,
    Div,
    Scale,
    AddScalar,
    MatMul,
    AddRowBias,
    Dot,
    Norm2,
    Sum,
    MeanRows,
    Cosh,
    Sinh,
    Tanh,
    Arcosh,
    Sqrt,
    Exp,
    Log,
    Relu,
    LeakyRelu,
    // rowwise hyperbolic maps; each row is one point
    ExpMapOrigin,
    LorentzLinear,
    ToKlein,
    FromKlein,
    ToPoincare,
    FromPoincare,
    LorentzNormalize,
    ProjectToLorentz,
    // graph aggregation
    EinsteinMidpoint,
    NeighborSum,
    MeanAggregate,
    // heads and losses
    PairSqDistance,
    PairSqEuclidean,
    CentroidDistance,
    CentroidEuclidean,
    FermiDirac,
    BceWithLogits,
    SoftmaxCrossEntropy,
};

std::string_view op_name(Op op);

enum class ParamKind : std::uint8_t { Euclidean, Stiefel };

struct Param {
    std::string name;
    Matrix value;
    ParamKind kind = ParamKind::Euclidean;
};

/// Named, ordered parameter registry.
class ParamStore {
public:
    /// Throws ConfigError on a duplicate name.
    std::size_t add(std::string name, Matrix value, ParamKind kind = ParamKind::Euclidean);

    std::size_t size() const { return params_.size(); }
    bool contains(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }
    Matrix& value(std::string_view name) { return params_[index_of(name)].value; }
    const Matrix& value(std::string_view name) const { return params_[index_of(name)].value; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::size_t num_scalars() const;

private:
    std::vector<Param> params_;
};

/// Gradients parallel to a ParamStore (same order, same shapes).
struct Grad {
    std::vector<Matrix> values;

    const Matrix& operator[](std::size_t i) const { return values[i]; }
    Matrix& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const { return values.size(); }

    static Grad zeros_like(const ParamStore& params);
    /// this += scale * other
    void accumulate(const Grad& other, double scale = 1.0);
    bool all_finite() const;
};

class Tape;

/// Handle to a node on a tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    double scalar() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Parameters bound to one tape, indexed like the ParamStore they came from.
class Bindings {
public:
    Bindings() = default;
    Bindings(const ParamStore* store, std::vector<Var> vars) : store_(store), vars_(std::move(vars)) {}
    Var operator[](std::string_view name) const;
    Var operator[](std::size_t i) const { return vars_[i]; }
    std::size_t size() const { return vars_.size(); }

private:
    const ParamStore* store_ = nullptr;
    std::vector<Var> vars_;
};

class Tape {
public:
    /// Receives the node's inputs and output, the gradient of the output, and
    /// one accumulation slot per input (nullptr when that input does not
    /// require a gradient).
    using Backward = std::function<void(const Tape&, std::span<const std::size_t> inputs, const Matrix& out,
                                        const Matrix& grad_out, std::span<Matrix* const> grad_in)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var parameter(std::size_t slot, Matrix value);
    Bindings bind(const ParamStore& params);

    /// Appends a node. Every input must already be on this tape.
    Var push(Op op, Matrix value, std::vector<std::size_t> inputs, Backward backward);

    /// Generic entry point for primitives that need no attributes.
    /// Throws UnsupportedOp for anything else.
    Var record(Op op, std::span<const Var> inputs);

    /// Reverse accumulation from a 1x1 loss node. A tape supports exactly one
    /// backward pass; record a fresh forward (new tape or clear()) for the next.
    Grad backward(Var loss);

    /// Gradient reaching any node during the last backward pass; zeros for
    /// nodes that do not depend on a parameter.
    Matrix gradient(Var v) const;

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    Op op(std::size_t id) const { return nodes_[id].op; }
    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }
    void clear();

private:
    struct Node {
        Op op;
        Matrix value;
        std::vector<std::size_t> inputs;
        Backward backward;
        bool requires_grad = false;
    };

    void check_owned(Var v) const;

    std::vector<Node> nodes_;
    std::vector<std::pair<std::size_t, std::size_t>> param_nodes_;  // (slot, node)
    std::size_t num_slots_ = 0;
    std::vector<Matrix> grads_;
    bool consumed_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. All inputs must share one tape.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);
/// a (N x m) plus the 1 x m row `bias` broadcast over rows.
Var add_row_bias(Var a, Var bias);
/// Sum of elementwise products, 1 x 1.
Var dot(Var a, Var b);
/// Frobenius norm, 1 x 1.
Var norm2(Var a);
Var sum(Var a);
Var mean_rows(Var a);
Var cosh(Var a);
Var sinh(Var a);
Var tanh(Var a);
/// Argument clamped to >= 1; derivative is zero where the clamp is active.
Var arcosh(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var log(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);

/// Row i of z (N x n) -> exp_o([0, z_i]) (N x (n+1)).
Var exp_map_origin(Var z);
/// Row i -> [x0, W x_{1:n}] with W (n x n).
Var lorentz_linear(Var x, Var w);
Var to_klein(Var x);
Var from_klein(Var k);
Var to_poincare(Var x);
Var from_poincare(Var b);
/// Row s -> s / sqrt(-<s,s>_L).
Var lorentz_normalize(Var s);
/// Row x -> [sqrt(1 + |x_{1:n}|^2), x_{1:n}].
Var project_to_lorentz(Var x);

// The graph is referenced, not copied: it must outlive the tape.

/// Klein-coordinate Einstein midpoint over the closed neighbourhood of every node.
Var einstein_midpoint(Var k, const data::Graph& graph);
/// Row i -> sum of rows over the closed neighbourhood {i} u N(i).
Var neighbor_sum(Var x, const data::Graph& graph);
/// Row i -> x_i + (1/|N(i)|) sum_{j in N(i)} x_j  (x_i alone for isolated nodes).
Var mean_aggregate(Var x, const data::Graph& graph);

/// Squared geodesic distance per pair (P x 1). Uses the smooth limit of
/// d(arcosh(u)^2)/du = 2 as u -> 1.
Var pair_sq_distance(Var x, std::span<const data::Edge> pairs);
/// Squared Euclidean distance per pair (P x 1).
Var pair_sq_euclidean(Var x, std::span<const data::Edge> pairs);
/// D[i,j] = d_L(x_i, c_j)  (N x C).
Var centroid_distance(Var x, Var centroids);
/// D[i,j] = ||x_i - c_j||_2  (N x C).
Var centroid_euclidean(Var x, Var centroids);

/// 1 / (exp((d2 - r)/t) + 1), elementwise.
Var fermi_dirac(Var sq_dist, double r, double t);
/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.
Var bce_with_logits(Var logits, std::span<const double> labels);
/// Mean softmax cross-entropy over the listed rows.
Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const std::uint32_t> rows);

// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    Eigen::Index worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t coordinates = 0;
};

/// Builds the scalar loss on the given tape from the bound parameters.
using LossBuilder = std::function<Var(Tape&, const Bindings&)>;

/// Compares backward() against central differences for every scalar of every
/// parameter. Relative error uses max(|a|, |b|, 1e-8) as denominator.
GradCheckReport grad_check(const LossBuilder& f, ParamStore params, double step = 1e-5);

/// Evaluates the loss without keeping the tape around.
double evaluate(const LossBuilder& f, const ParamStore& params);

}  // namespace h2h::ad
