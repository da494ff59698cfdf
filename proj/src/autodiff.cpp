#include "h2h/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "h2h/errors.hpp"

namespace h2h::ad {
namespace {

using Row = Eigen::RowVectorXd;

Tape& tape_of(Var a) {
    if (!a.valid()) {
        throw ContractViolation("operation on an unbound variable");
    }
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    Tape& t = tape_of(a);
    if (b.tape() != &t) {
        throw ContractViolation("operands live on different tapes");
    }
    return t;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

void require_points(const Matrix& x, const char* what) {
    if (x.cols() < 2) {
        throw DimensionError(std::string(what) + ": rows need at least 2 Lorentz coordinates");
    }
}

void require_graph_rows(const Matrix& x, const data::Graph& g, const char* what) {
    if (static_cast<std::size_t>(x.rows()) != g.num_nodes()) {
        throw DimensionError(std::string(what) + ": " + std::to_string(x.rows()) + " rows for a graph with " +
                             std::to_string(g.num_nodes()) + " nodes");
    }
}

Var unary(Op op, Var a, Matrix value, Tape::Backward bw) {
    return tape_of(a).push(op, std::move(value), {a.id()}, std::move(bw));
}

Var binary(Op op, Var a, Var b, Matrix value, Tape::Backward bw) {
    return tape_of(a, b).push(op, std::move(value), {a.id(), b.id()}, std::move(bw));
}

// [x0, -x_{1:n}] per row: the gradient of -<x, y>_L with respect to y.
Matrix flip_spatial(const Matrix& x) {
    Matrix out = -x;
    out.col(0) = x.col(0);
    return out;
}

// sinh(r)/r and (cosh(r) - sinh(r)/r)/r^2, stable near r = 0.
void exp_coefficients(double r, double& s1, double& s2) {
    const double r2 = r * r;
    s1 = r < 1e-4 ? 1.0 + r2 / 6.0 : std::sinh(r) / r;
    s2 = r < 1e-2 ? 1.0 / 3.0 + r2 / 30.0 + r2 * r2 / 840.0 : (std::cosh(r) - s1) / r2;
}

// Rescales rows whose norm exceeds the ball clamp; returns the mask of rows
// that were modified so their gradient can be zeroed.
std::vector<char> clamp_rows_to_ball(Matrix& m) {
    std::vector<char> clamped(static_cast<std::size_t>(m.rows()), 0);
    constexpr double kClamp = 1.0 - 1e-12;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm > kClamp) {
            m.row(i) *= kClamp / norm;
            clamped[static_cast<std::size_t>(i)] = 1;
        }
    }
    return clamped;
}

double sq_distance_slope(double u) {
    // d/du arcosh(u)^2 = 2 arcosh(u) / sqrt(u^2 - 1), which tends to 2 at u = 1.
    const double delta = u - 1.0;
    if (delta <= 0.0) {
        return 2.0;
    }
    if (delta < 1e-6) {
        return 2.0 * (1.0 - delta / 3.0);
    }
    return 2.0 * std::acosh(u) / std::sqrt(delta * (u + 1.0));
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

std::string_view op_name(Op op) {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Parameter: return "parameter";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Scale: return "scale";
        case Op::AddScalar: return "add_scalar";
        case Op::MatMul: return "matmul";
        case Op::AddRowBias: return "add_row_bias";
        case Op::Dot: return "dot";
        case Op::Norm2: return "norm2";
        case Op::Sum: return "sum";
        case Op::MeanRows: return "mean_rows";
        case Op::Cosh: return "cosh";
        case Op::Sinh: return "sinh";
        case Op::Tanh: return "tanh";
        case Op::Arcosh: return "arcosh";
        case Op::Sqrt: return "sqrt";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Relu: return "relu";
        case Op::LeakyRelu: return "leaky_relu";
        case Op::ExpMapOrigin: return "exp_map_origin";
        case Op::LorentzLinear: return "lorentz_linear";
        case Op::ToKlein: return "to_klein";
        case Op::FromKlein: return "from_klein";
        case Op::ToPoincare: return "to_poincare";
        case Op::FromPoincare: return "from_poincare";
        case Op::LorentzNormalize: return "lorentz_normalize";
        case Op::ProjectToLorentz: return "project_to_lorentz";
        case Op::EinsteinMidpoint: return "einstein_midpoint";
        case Op::NeighborSum: return "neighbor_sum";
        case Op::MeanAggregate: return "mean_aggregate";
        case Op::PairSqDistance: return "pair_sq_distance";
        case Op::PairSqEuclidean: return "pair_sq_euclidean";
        case Op::CentroidDistance: return "centroid_distance";
        case Op::CentroidEuclidean: return "centroid_euclidean";
        case Op::FermiDirac: return "fermi_dirac";
        case Op::BceWithLogits: return "bce_with_logits";
        case Op::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ParamStore / Grad / Bindings

std::size_t ParamStore::add(std::string name, Matrix value, ParamKind kind) {
    if (contains(name)) {
        throw ConfigError("duplicate parameter name '" + name + "'");
    }
    params_.push_back(Param{std::move(name), std::move(value), kind});
    return params_.size() - 1;
}

bool ParamStore::contains(std::string_view name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const Param& p) { return p.name == name; });
}

std::size_t ParamStore::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return i;
        }
    }
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParamStore::num_scalars() const {
    std::size_t n = 0;
    for (const Param& p : params_) {
        n += static_cast<std::size_t>(p.value.size());
    }
    return n;
}

Grad Grad::zeros_like(const ParamStore& params) {
    Grad g;
    g.values.reserve(params.size());
    for (const Param& p : params) {
        g.values.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
    return g;
}

void Grad::accumulate(const Grad& other, double scale) {
    if (other.size() != size()) {
        throw DimensionError("gradient sets have different lengths");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        require_same_shape(values[i], other.values[i], "Grad::accumulate");
        values[i] += scale * other.values[i];
    }
}

bool Grad::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](const Matrix& m) { return m.allFinite(); });
}

Var Bindings::operator[](std::string_view name) const {
    if (store_ == nullptr) {
        throw StateError("bindings are empty");
    }
    return vars_.at(store_->index_of(name));
}

const Matrix& Var::value() const { return tape_of(*this).value(id_); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.size() != 1) {
        throw DimensionError("expected a 1x1 value, got " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
    }
    return v(0, 0);
}

// ---------------------------------------------------------------------------
// Tape

void Tape::check_owned(Var v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
        throw ContractViolation("variable is not recorded on this tape");
    }
}

Var Tape::constant(Matrix value) { return push(Op::Constant, std::move(value), {}, nullptr); }

Var Tape::parameter(std::size_t slot, Matrix value) {
    Var v = push(Op::Parameter, std::move(value), {}, nullptr);
    nodes_[v.id()].requires_grad = true;
    param_nodes_.emplace_back(slot, v.id());
    num_slots_ = std::max(num_slots_, slot + 1);
    return v;
}

Bindings Tape::bind(const ParamStore& params) {
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        vars.push_back(parameter(i, params[i].value));
    }
    return Bindings(&params, std::move(vars));
}

Var Tape::push(Op op, Matrix value, std::vector<std::size_t> inputs, Backward backward) {
    if (consumed_) {
        throw StateError("tape already ran backward; clear() it before recording a new forward pass");
    }
    bool requires_grad = false;
    for (std::size_t in : inputs) {
        if (in >= nodes_.size()) {
            throw ContractViolation(std::string(op_name(op)) + ": input is not on the tape");
        }
        requires_grad = requires_grad || nodes_[in].requires_grad;
    }
    nodes_.push_back(Node{op, std::move(value), std::move(inputs), std::move(backward), requires_grad});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Op op, std::span<const Var> inputs) {
    auto arity = [&](std::size_t n) {
        if (inputs.size() != n) {
            throw ContractViolation(std::string(op_name(op)) + " takes " + std::to_string(n) + " inputs, got " +
                                    std::to_string(inputs.size()));
        }
        for (const Var& v : inputs) {
            check_owned(v);
        }
    };
    switch (op) {
        case Op::Add: arity(2); return add(inputs[0], inputs[1]);
        case Op::Sub: arity(2); return sub(inputs[0], inputs[1]);
        case Op::Mul: arity(2); return mul(inputs[0], inputs[1]);
        case Op::Div: arity(2); return div(inputs[0], inputs[1]);
        case Op::MatMul: arity(2); return matmul(inputs[0], inputs[1]);
        case Op::AddRowBias: arity(2); return add_row_bias(inputs[0], inputs[1]);
        case Op::Dot: arity(2); return dot(inputs[0], inputs[1]);
        case Op::LorentzLinear: arity(2); return lorentz_linear(inputs[0], inputs[1]);
        case Op::CentroidDistance: arity(2); return centroid_distance(inputs[0], inputs[1]);
        case Op::CentroidEuclidean: arity(2); return centroid_euclidean(inputs[0], inputs[1]);
        case Op::Norm2: arity(1); return norm2(inputs[0]);
        case Op::Sum: arity(1); return sum(inputs[0]);
        case Op::MeanRows: arity(1); return mean_rows(inputs[0]);
        case Op::Cosh: arity(1); return cosh(inputs[0]);
        case Op::Sinh: arity(1); return sinh(inputs[0]);
        case Op::Tanh: arity(1); return tanh(inputs[0]);
        case Op::Arcosh: arity(1); return arcosh(inputs[0]);
        case Op::Sqrt: arity(1); return sqrt(inputs[0]);
        case Op::Exp: arity(1); return exp(inputs[0]);
        case Op::Log: arity(1); return log(inputs[0]);
        case Op::Relu: arity(1); return relu(inputs[0]);
        case Op::ExpMapOrigin: arity(1); return exp_map_origin(inputs[0]);
        case Op::ToKlein: arity(1); return to_klein(inputs[0]);
        case Op::FromKlein: arity(1); return from_klein(inputs[0]);
        case Op::ToPoincare: arity(1); return to_poincare(inputs[0]);
        case Op::FromPoincare: arity(1); return from_poincare(inputs[0]);
        case Op::LorentzNormalize: arity(1); return lorentz_normalize(inputs[0]);
        case Op::ProjectToLorentz: arity(1); return project_to_lorentz(inputs[0]);
        default: break;
    }
    const auto raw = static_cast<unsigned>(op);
    if (raw > static_cast<unsigned>(Op::SoftmaxCrossEntropy)) {
        throw UnsupportedOp("unknown primitive id " + std::to_string(raw));
    }
    throw UnsupportedOp("primitive '" + std::string(op_name(op)) +
                        "' needs attributes and cannot be recorded generically; call its typed function");
}

Grad Tape::backward(Var loss) {
    if (consumed_) {
        throw StateError("backward already ran on this tape; record a new forward pass first");
    }
    if (nodes_.empty() || loss.tape() != this || loss.id() >= nodes_.size()) {
        throw StateError("backward called before a forward pass recorded the loss on this tape");
    }
    if (nodes_[loss.id()].value.size() != 1) {
        throw ContractViolation("backward needs a scalar (1x1) loss");
    }
    consumed_ = true;
    grads_.assign(nodes_.size(), Matrix());
    grads_[loss.id()] = Matrix::Ones(1, 1);

    std::vector<Matrix*> slots;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!node.requires_grad || grads_[id].size() == 0 || !node.backward) {
            continue;
        }
        slots.assign(node.inputs.size(), nullptr);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            const std::size_t in = node.inputs[k];
            if (!nodes_[in].requires_grad) {
                continue;
            }
            if (grads_[in].size() == 0) {
                grads_[in] = Matrix::Zero(nodes_[in].value.rows(), nodes_[in].value.cols());
            }
            slots[k] = &grads_[in];
        }
        node.backward(*this, node.inputs, node.value, grads_[id], slots);
    }

    Grad out;
    out.values.resize(num_slots_);
    for (const auto& [slot, node] : param_nodes_) {
        Matrix& dst = out.values[slot];
        if (dst.size() == 0) {
            dst = Matrix::Zero(nodes_[node].value.rows(), nodes_[node].value.cols());
        }
        if (grads_[node].size() != 0) {
            dst += grads_[node];
        }
    }
    return out;
}

Matrix Tape::gradient(Var v) const {
    check_owned(v);
    if (v.id() < grads_.size() && grads_[v.id()].size() != 0) {
        return grads_[v.id()];
    }
    return Matrix::Zero(nodes_[v.id()].value.rows(), nodes_[v.id()].value.cols());
}

void Tape::clear() {
    nodes_.clear();
    param_nodes_.clear();
    grads_.clear();
    num_slots_ = 0;
    consumed_ = false;
}

// ---------------------------------------------------------------------------
// Elementwise and linear algebra

Var add(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "add");
    return binary(Op::Add, a, b, a.value() + b.value(),
                  [](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                      if (gi[0]) *gi[0] += g;
                      if (gi[1]) *gi[1] += g;
                  });
}

Var sub(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "sub");
    return binary(Op::Sub, a, b, a.value() - b.value(),
                  [](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                      if (gi[0]) *gi[0] += g;
                      if (gi[1]) *gi[1] -= g;
                  });
}

Var mul(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "mul");
    return binary(Op::Mul, a, b, a.value().cwiseProduct(b.value()),
                  [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                     std::span<Matrix* const> gi) {
                      if (gi[0]) *gi[0] += g.cwiseProduct(t.value(in[1]));
                      if (gi[1]) *gi[1] += g.cwiseProduct(t.value(in[0]));
                  });
}

Var div(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "div");
    return binary(Op::Div, a, b, a.value().cwiseQuotient(b.value()),
                  [](const Tape& t, std::span<const std::size_t> in, const Matrix& out, const Matrix& g,
                     std::span<Matrix* const> gi) {
                      const Matrix& den = t.value(in[1]);
                      if (gi[0]) *gi[0] += g.cwiseQuotient(den);
                      if (gi[1]) *gi[1] -= g.cwiseProduct(out).cwiseQuotient(den);
                  });
}

Var scale(Var a, double s) {
    return unary(Op::Scale, a, s * a.value(),
                 [s](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) *gi[0] += s * g;
                 });
}

Var add_scalar(Var a, double s) {
    return unary(Op::AddScalar, a, a.value().array() + s,
                 [](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) *gi[0] += g;
                 });
}

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()));
    }
    return binary(Op::MatMul, a, b, a.value() * b.value(),
                  [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                     std::span<Matrix* const> gi) {
                      if (gi[0]) gi[0]->noalias() += g * t.value(in[1]).transpose();
                      if (gi[1]) gi[1]->noalias() += t.value(in[0]).transpose() * g;
                  });
}

Var add_row_bias(Var a, Var bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw DimensionError("add_row_bias: bias must be 1x" + std::to_string(a.cols()));
    }
    Matrix out = a.value().rowwise() + bias.value().row(0);
    return binary(Op::AddRowBias, a, bias, std::move(out),
                  [](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                      if (gi[0]) *gi[0] += g;
                      if (gi[1]) *gi[1] += g.colwise().sum();
                  });
}

Var dot(Var a, Var b) {
    require_same_shape(a.value(), b.value(), "dot");
    Matrix out(1, 1);
    out(0, 0) = a.value().cwiseProduct(b.value()).sum();
    return binary(Op::Dot, a, b, std::move(out),
                  [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                     std::span<Matrix* const> gi) {
                      if (gi[0]) *gi[0] += g(0, 0) * t.value(in[1]);
                      if (gi[1]) *gi[1] += g(0, 0) * t.value(in[0]);
                  });
}

Var norm2(Var a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().norm();
    return unary(Op::Norm2, a, std::move(out),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix& out, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (gi[0] && out(0, 0) > 0.0) *gi[0] += (g(0, 0) / out(0, 0)) * t.value(in[0]);
                 });
}

Var sum(Var a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return unary(Op::Sum, a, std::move(out),
                 [](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() += g(0, 0);
                 });
}

Var mean_rows(Var a) {
    if (a.rows() == 0) {
        throw DimensionError("mean_rows: empty matrix");
    }
    Matrix out = a.value().colwise().mean();
    return unary(Op::MeanRows, a, std::move(out),
                 [](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) {
                         const double inv = 1.0 / static_cast<double>(gi[0]->rows());
                         gi[0]->rowwise() += inv * g.row(0);
                     }
                 });
}

Var cosh(Var a) {
    return unary(Op::Cosh, a, a.value().array().cosh(),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() += g.array() * t.value(in[0]).array().sinh();
                 });
}

Var sinh(Var a) {
    return unary(Op::Sinh, a, a.value().array().sinh(),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() += g.array() * t.value(in[0]).array().cosh();
                 });
}

Var tanh(Var a) {
    return unary(Op::Tanh, a, a.value().array().tanh(),
                 [](const Tape&, auto, const Matrix& out, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() += g.array() * (1.0 - out.array().square());
                 });
}

Var arcosh(Var a) {
    Matrix out = a.value().unaryExpr([](double u) { return std::acosh(std::max(u, 1.0)); });
    return unary(Op::Arcosh, a, std::move(out),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& u = t.value(in[0]);
                     for (Eigen::Index k = 0; k < u.size(); ++k) {
                         const double v = u.data()[k];
                         if (v > 1.0) {
                             gi[0]->data()[k] += g.data()[k] / std::sqrt((v - 1.0) * (v + 1.0));
                         }
                     }
                 });
}

Var sqrt(Var a) {
    if ((a.value().array() < 0.0).any()) {
        throw DomainError("sqrt of a negative entry");
    }
    return unary(Op::Sqrt, a, a.value().array().sqrt(),
                 [](const Tape&, auto, const Matrix& out, const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     for (Eigen::Index k = 0; k < out.size(); ++k) {
                         if (out.data()[k] > 0.0) {
                             gi[0]->data()[k] += 0.5 * g.data()[k] / out.data()[k];
                         }
                     }
                 });
}

Var exp(Var a) {
    return unary(Op::Exp, a, a.value().array().exp(),
                 [](const Tape&, auto, const Matrix& out, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() += g.array() * out.array();
                 });
}

Var log(Var a) {
    if ((a.value().array() <= 0.0).any()) {
        throw DomainError("log of a non-positive entry");
    }
    return unary(Op::Log, a, a.value().array().log(),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() += g.array() / t.value(in[0]).array();
                 });
}

Var relu(Var a) { return leaky_relu(a, 0.0); }

Var leaky_relu(Var a, double slope) {
    Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    return unary(slope == 0.0 ? Op::Relu : Op::LeakyRelu, a, std::move(out),
                 [slope](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                         std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& x = t.value(in[0]);
                     gi[0]->array() += g.array() * x.array().unaryExpr([slope](double v) {
                         return v > 0.0 ? 1.0 : slope;
                     });
                 });
}

// ---------------------------------------------------------------------------
// Rowwise hyperbolic maps

Var exp_map_origin(Var z) {
    const Matrix& zv = z.value();
    const Eigen::Index n = zv.cols();
    Matrix out(zv.rows(), n + 1);
    for (Eigen::Index i = 0; i < zv.rows(); ++i) {
        const double r = zv.row(i).norm();
        if (r < 1e-12) {
            out(i, 0) = 1.0;
            out.row(i).tail(n).setZero();
            continue;
        }
        double s1 = 0;
        double s2 = 0;
        exp_coefficients(r, s1, s2);
        out(i, 0) = std::cosh(r);
        out.row(i).tail(n) = s1 * zv.row(i);
    }
    return unary(Op::ExpMapOrigin, z, std::move(out),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& zv = t.value(in[0]);
                     const Eigen::Index n = zv.cols();
                     for (Eigen::Index i = 0; i < zv.rows(); ++i) {
                         const auto zi = zv.row(i);
                         const auto gs = g.row(i).tail(n);
                         double s1 = 0;
                         double s2 = 0;
                         exp_coefficients(zi.norm(), s1, s2);
                         gi[0]->row(i) += (g(i, 0) * s1 + s2 * zi.dot(gs)) * zi + s1 * gs;
                     }
                 });
}

Var lorentz_linear(Var x, Var w) {
    const Matrix& xv = x.value();
    require_points(xv, "lorentz_linear");
    const Eigen::Index n = xv.cols() - 1;
    if (w.rows() != n || w.cols() != n) {
        throw DimensionError("lorentz_linear: transform must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    Matrix out(xv.rows(), n + 1);
    out.col(0) = xv.col(0);
    out.rightCols(n).noalias() = xv.rightCols(n) * w.value().transpose();
    return binary(Op::LorentzLinear, x, w, std::move(out),
                  [](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                     std::span<Matrix* const> gi) {
                      const Matrix& xv = t.value(in[0]);
                      const Matrix& wv = t.value(in[1]);
                      const Eigen::Index n = wv.rows();
                      if (gi[0]) {
                          gi[0]->col(0) += g.col(0);
                          gi[0]->rightCols(n).noalias() += g.rightCols(n) * wv;
                      }
                      if (gi[1]) gi[1]->noalias() += g.rightCols(n).transpose() * xv.rightCols(n);
                  });
}

Var to_klein(Var x) {
    const Matrix& xv = x.value();
    require_points(xv, "to_klein");
    const Eigen::Index n = xv.cols() - 1;
    Matrix out = xv.rightCols(n).array().colwise() / xv.col(0).array();
    auto clamped = clamp_rows_to_ball(out);
    return unary(Op::ToKlein, x, std::move(out),
                 [clamped = std::move(clamped)](const Tape& t, std::span<const std::size_t> in, const Matrix&,
                                                const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& xv = t.value(in[0]);
                     const Eigen::Index n = xv.cols() - 1;
                     for (Eigen::Index i = 0; i < xv.rows(); ++i) {
                         if (clamped[static_cast<std::size_t>(i)]) continue;
                         const double x0 = xv(i, 0);
                         (*gi[0])(i, 0) -= g.row(i).dot(xv.row(i).tail(n)) / (x0 * x0);
                         gi[0]->row(i).tail(n) += g.row(i) / x0;
                     }
                 });
}

Var from_klein(Var k) {
    Matrix kv = k.value();
    if ((kv.rowwise().squaredNorm().array() >= 1.0).any()) {
        throw DomainError("from_klein: Klein norm >= 1");
    }
    auto clamped = clamp_rows_to_ball(kv);
    const Eigen::Index n = kv.cols();
    Matrix out(kv.rows(), n + 1);
    for (Eigen::Index i = 0; i < kv.rows(); ++i) {
        const double gamma = 1.0 / std::sqrt(1.0 - kv.row(i).squaredNorm());
        out(i, 0) = gamma;
        out.row(i).tail(n) = gamma * kv.row(i);
    }
    return unary(Op::FromKlein, k, std::move(out),
                 [clamped = std::move(clamped)](const Tape&, auto, const Matrix& out, const Matrix& g,
                                                std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Eigen::Index n = out.cols() - 1;
                     for (Eigen::Index i = 0; i < out.rows(); ++i) {
                         if (clamped[static_cast<std::size_t>(i)]) continue;
                         const double gamma = out(i, 0);
                         const Row ki = out.row(i).tail(n) / gamma;
                         const auto gs = g.row(i).tail(n);
                         const double g3 = gamma * gamma * gamma;
                         gi[0]->row(i) += (g(i, 0) * g3 + g3 * ki.dot(gs)) * ki + gamma * gs;
                     }
                 });
}

Var to_poincare(Var x) {
    const Matrix& xv = x.value();
    require_points(xv, "to_poincare");
    const Eigen::Index n = xv.cols() - 1;
    Matrix out = xv.rightCols(n).array().colwise() / (xv.col(0).array() + 1.0);
    auto clamped = clamp_rows_to_ball(out);
    return unary(Op::ToPoincare, x, std::move(out),
                 [clamped = std::move(clamped)](const Tape& t, std::span<const std::size_t> in, const Matrix&,
                                                const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& xv = t.value(in[0]);
                     const Eigen::Index n = xv.cols() - 1;
                     for (Eigen::Index i = 0; i < xv.rows(); ++i) {
                         if (clamped[static_cast<std::size_t>(i)]) continue;
                         const double d = xv(i, 0) + 1.0;
                         (*gi[0])(i, 0) -= g.row(i).dot(xv.row(i).tail(n)) / (d * d);
                         gi[0]->row(i).tail(n) += g.row(i) / d;
                     }
                 });
}

Var from_poincare(Var b) {
    Matrix bv = b.value();
    if ((bv.rowwise().squaredNorm().array() >= 1.0).any()) {
        throw DomainError("from_poincare: Poincare norm >= 1");
    }
    auto clamped = clamp_rows_to_ball(bv);
    const Eigen::Index n = bv.cols();
    Matrix out(bv.rows(), n + 1);
    for (Eigen::Index i = 0; i < bv.rows(); ++i) {
        const double sq = bv.row(i).squaredNorm();
        const double den = 1.0 - sq;
        out(i, 0) = (1.0 + sq) / den;
        out.row(i).tail(n) = (2.0 / den) * bv.row(i);
    }
    return unary(Op::FromPoincare, b, std::move(out),
                 [clamped = std::move(clamped), bv](const Tape&, auto, const Matrix&, const Matrix& g,
                                                    std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Eigen::Index n = bv.cols();
                     for (Eigen::Index i = 0; i < bv.rows(); ++i) {
                         if (clamped[static_cast<std::size_t>(i)]) continue;
                         const auto bi = bv.row(i);
                         const double den = 1.0 - bi.squaredNorm();
                         const auto gs = g.row(i).tail(n);
                         const double den2 = den * den;
                         gi[0]->row(i) += (4.0 * g(i, 0) / den2 + 4.0 * bi.dot(gs) / den2) * bi + (2.0 / den) * gs;
                     }
                 });
}

Var lorentz_normalize(Var s) {
    const Matrix& sv = s.value();
    require_points(sv, "lorentz_normalize");
    const Eigen::Index n = sv.cols() - 1;
    Matrix out(sv.rows(), sv.cols());
    for (Eigen::Index i = 0; i < sv.rows(); ++i) {
        const double a = sv(i, 0) * sv(i, 0) - sv.row(i).tail(n).squaredNorm();
        if (!(a > 0.0)) {
            throw NumericError("lorentz_normalize: row " + std::to_string(i) + " is not timelike");
        }
        out.row(i) = sv.row(i) / std::sqrt(a);
    }
    return unary(Op::LorentzNormalize, s, std::move(out),
                 [](const Tape& t, std::span<const std::size_t> in, const Matrix& out, const Matrix& g,
                    std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& sv = t.value(in[0]);
                     const Eigen::Index n = sv.cols() - 1;
                     for (Eigen::Index i = 0; i < sv.rows(); ++i) {
                         // out = s / sqrt(a): inv_sqrt_a = out0 / s0 avoids recomputing a.
                         const double a = sv(i, 0) * sv(i, 0) - sv.row(i).tail(n).squaredNorm();
                         const double inv = 1.0 / std::sqrt(a);
                         const double c = g.row(i).dot(sv.row(i)) * inv * inv * inv;
                         gi[0]->row(i) += inv * g.row(i);
                         (*gi[0])(i, 0) -= c * sv(i, 0);
                         gi[0]->row(i).tail(n) += c * sv.row(i).tail(n);
                     }
                     (void)out;
                 });
}

Var project_to_lorentz(Var x) {
    const Matrix& xv = x.value();
    require_points(xv, "project_to_lorentz");
    if (!xv.allFinite()) {
        throw DomainError("project_to_lorentz: non-finite input");
    }
    const Eigen::Index n = xv.cols() - 1;
    Matrix out = xv;
    out.col(0) = (1.0 + xv.rightCols(n).rowwise().squaredNorm().array()).sqrt();
    return unary(Op::ProjectToLorentz, x, std::move(out),
                 [](const Tape&, auto, const Matrix& out, const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Eigen::Index n = out.cols() - 1;
                     gi[0]->rightCols(n) += g.rightCols(n);
                     gi[0]->rightCols(n).array() +=
                         out.rightCols(n).array().colwise() * (g.col(0).array() / out.col(0).array());
                 });
}

// ---------------------------------------------------------------------------
// Graph aggregation

Var einstein_midpoint(Var k, const data::Graph& graph) {
    const Matrix& kv = k.value();
    require_graph_rows(kv, graph, "einstein_midpoint");
    const Eigen::Index rows = kv.rows();
    std::vector<double> gamma(static_cast<std::size_t>(rows));
    for (Eigen::Index j = 0; j < rows; ++j) {
        const double sq = kv.row(j).squaredNorm();
        if (!(sq < 1.0)) {
            throw DomainError("einstein_midpoint: Klein norm >= 1");
        }
        gamma[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(1.0 - sq);
    }
    std::vector<double> weight(static_cast<std::size_t>(rows));
    Matrix out(rows, kv.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto ui = static_cast<data::NodeId>(i);
        double w = gamma[ui];
        Row num = gamma[ui] * kv.row(i);
        for (data::NodeId j : graph.neighbors(ui)) {
            w += gamma[j];
            num += gamma[j] * kv.row(j);
        }
        weight[ui] = w;
        out.row(i) = num / w;
    }
    return unary(Op::EinsteinMidpoint, k, std::move(out),
                 [&graph, gamma = std::move(gamma), weight = std::move(weight)](
                     const Tape& t, std::span<const std::size_t> in, const Matrix& out, const Matrix& g,
                     std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& kv = t.value(in[0]);
                     auto contribute = [&](data::NodeId i, data::NodeId j) {
                         const double gj = gamma[j];
                         const double c = g.row(i).dot(kv.row(j) - out.row(i)) * gj * gj * gj;
                         gi[0]->row(j) += (gj * g.row(i) + c * kv.row(j)) / weight[i];
                     };
                     for (Eigen::Index ii = 0; ii < kv.rows(); ++ii) {
                         const auto i = static_cast<data::NodeId>(ii);
                         contribute(i, i);
                         for (data::NodeId j : graph.neighbors(i)) {
                             contribute(i, j);
                         }
                     }
                 });
}

namespace {

Matrix closed_neighbourhood_sum(const Matrix& x, const data::Graph& graph) {
    Matrix out = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (data::NodeId j : graph.neighbors(static_cast<data::NodeId>(i))) {
            out.row(i) += x.row(j);
        }
    }
    return out;
}

}  // namespace

Var neighbor_sum(Var x, const data::Graph& graph) {
    require_graph_rows(x.value(), graph, "neighbor_sum");
    return unary(Op::NeighborSum, x, closed_neighbourhood_sum(x.value(), graph),
                 [&graph](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     // The closed-neighbourhood operator is symmetric.
                     if (gi[0]) *gi[0] += closed_neighbourhood_sum(g, graph);
                 });
}

Var mean_aggregate(Var x, const data::Graph& graph) {
    const Matrix& xv = x.value();
    require_graph_rows(xv, graph, "mean_aggregate");
    Matrix out = xv;
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
        const auto ui = static_cast<data::NodeId>(i);
        const auto nbrs = graph.neighbors(ui);
        if (nbrs.empty()) continue;
        const double w = 1.0 / static_cast<double>(nbrs.size());
        for (data::NodeId j : nbrs) {
            out.row(i) += w * xv.row(j);
        }
    }
    return unary(Op::MeanAggregate, x, std::move(out),
                 [&graph](const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     *gi[0] += g;
                     for (Eigen::Index i = 0; i < g.rows(); ++i) {
                         const auto nbrs = graph.neighbors(static_cast<data::NodeId>(i));
                         if (nbrs.empty()) continue;
                         const double w = 1.0 / static_cast<double>(nbrs.size());
                         for (data::NodeId j : nbrs) {
                             gi[0]->row(j) += w * g.row(i);
                         }
                     }
                 });
}

// ---------------------------------------------------------------------------
// Heads and losses

namespace {

void require_pairs(const Matrix& x, std::span<const data::Edge> pairs, const char* what) {
    const auto rows = static_cast<std::size_t>(x.rows());
    for (const data::Edge& e : pairs) {
        if (e.u >= rows || e.v >= rows) {
            throw DimensionError(std::string(what) + ": pair references row outside the embedding matrix");
        }
    }
}

}  // namespace

Var pair_sq_distance(Var x, std::span<const data::Edge> pairs) {
    const Matrix& xv = x.value();
    require_points(xv, "pair_sq_distance");
    require_pairs(xv, pairs, "pair_sq_distance");
    const Eigen::Index n = xv.cols() - 1;
    std::vector<data::Edge> kept(pairs.begin(), pairs.end());
    std::vector<double> inner(kept.size());
    Matrix out(static_cast<Eigen::Index>(kept.size()), 1);
    for (std::size_t p = 0; p < kept.size(); ++p) {
        const auto a = xv.row(kept[p].u);
        const auto b = xv.row(kept[p].v);
        const double u = a(0) * b(0) - a.tail(n).dot(b.tail(n));
        inner[p] = u;
        const double d = std::acosh(std::max(u, 1.0));
        out(static_cast<Eigen::Index>(p), 0) = d * d;
    }
    return unary(Op::PairSqDistance, x, std::move(out),
                 [kept = std::move(kept), inner = std::move(inner)](const Tape& t, std::span<const std::size_t> in,
                                                                    const Matrix&, const Matrix& g,
                                                                    std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& xv = t.value(in[0]);
                     const Eigen::Index n = xv.cols() - 1;
                     for (std::size_t p = 0; p < kept.size(); ++p) {
                         const double c = g(static_cast<Eigen::Index>(p), 0) * sq_distance_slope(inner[p]);
                         const auto a = xv.row(kept[p].u);
                         const auto b = xv.row(kept[p].v);
                         (*gi[0])(kept[p].u, 0) += c * b(0);
                         gi[0]->row(kept[p].u).tail(n) -= c * b.tail(n);
                         (*gi[0])(kept[p].v, 0) += c * a(0);
                         gi[0]->row(kept[p].v).tail(n) -= c * a.tail(n);
                     }
                 });
}

Var pair_sq_euclidean(Var x, std::span<const data::Edge> pairs) {
    const Matrix& xv = x.value();
    require_pairs(xv, pairs, "pair_sq_euclidean");
    std::vector<data::Edge> kept(pairs.begin(), pairs.end());
    Matrix out(static_cast<Eigen::Index>(kept.size()), 1);
    for (std::size_t p = 0; p < kept.size(); ++p) {
        out(static_cast<Eigen::Index>(p), 0) = (xv.row(kept[p].u) - xv.row(kept[p].v)).squaredNorm();
    }
    return unary(Op::PairSqEuclidean, x, std::move(out),
                 [kept = std::move(kept)](const Tape& t, std::span<const std::size_t> in, const Matrix&,
                                          const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& xv = t.value(in[0]);
                     for (std::size_t p = 0; p < kept.size(); ++p) {
                         const Row diff = xv.row(kept[p].u) - xv.row(kept[p].v);
                         const double c = 2.0 * g(static_cast<Eigen::Index>(p), 0);
                         gi[0]->row(kept[p].u) += c * diff;
                         gi[0]->row(kept[p].v) -= c * diff;
                     }
                 });
}

Var centroid_distance(Var x, Var centroids) {
    const Matrix& xv = x.value();
    const Matrix& cv = centroids.value();
    require_points(xv, "centroid_distance");
    if (xv.cols() != cv.cols()) {
        throw DimensionError("centroid_distance: points and centroids differ in dimension");
    }
    Matrix inner = xv * flip_spatial(cv).transpose();  // -<x_i, c_j>_L
    Matrix out = inner.unaryExpr([](double u) { return std::acosh(std::max(u, 1.0)); });
    return binary(Op::CentroidDistance, x, centroids, std::move(out),
                  [inner = std::move(inner)](const Tape& t, std::span<const std::size_t> in, const Matrix&,
                                             const Matrix& g, std::span<Matrix* const> gi) {
                      Matrix coef(g.rows(), g.cols());
                      for (Eigen::Index k = 0; k < g.size(); ++k) {
                          const double u = inner.data()[k];
                          coef.data()[k] = u > 1.0 + 1e-12 ? g.data()[k] / std::sqrt((u - 1.0) * (u + 1.0)) : 0.0;
                      }
                      if (gi[0]) gi[0]->noalias() += coef * flip_spatial(t.value(in[1]));
                      if (gi[1]) gi[1]->noalias() += coef.transpose() * flip_spatial(t.value(in[0]));
                  });
}

Var centroid_euclidean(Var x, Var centroids) {
    const Matrix& xv = x.value();
    const Matrix& cv = centroids.value();
    if (xv.cols() != cv.cols()) {
        throw DimensionError("centroid_euclidean: points and centroids differ in dimension");
    }
    Matrix out(xv.rows(), cv.rows());
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
        for (Eigen::Index j = 0; j < cv.rows(); ++j) {
            out(i, j) = (xv.row(i) - cv.row(j)).norm();
        }
    }
    return binary(Op::CentroidEuclidean, x, centroids, std::move(out),
                  [](const Tape& t, std::span<const std::size_t> in, const Matrix& out, const Matrix& g,
                     std::span<Matrix* const> gi) {
                      const Matrix& xv = t.value(in[0]);
                      const Matrix& cv = t.value(in[1]);
                      for (Eigen::Index i = 0; i < xv.rows(); ++i) {
                          for (Eigen::Index j = 0; j < cv.rows(); ++j) {
                              if (out(i, j) <= 0.0) continue;
                              const Row dir = (g(i, j) / out(i, j)) * (xv.row(i) - cv.row(j));
                              if (gi[0]) gi[0]->row(i) += dir;
                              if (gi[1]) gi[1]->row(j) -= dir;
                          }
                      }
                  });
}

Var fermi_dirac(Var sq_dist, double r, double t) {
    if (!(t > 0.0)) {
        throw ConfigError("fermi_dirac: temperature t must be > 0");
    }
    Matrix out = sq_dist.value().unaryExpr([r, t](double d2) { return sigmoid((r - d2) / t); });
    return unary(Op::FermiDirac, sq_dist, std::move(out),
                 [t](const Tape&, auto, const Matrix& out, const Matrix& g, std::span<Matrix* const> gi) {
                     if (gi[0]) gi[0]->array() -= g.array() * out.array() * (1.0 - out.array()) / t;
                 });
}

Var bce_with_logits(Var logits, std::span<const double> labels) {
    const Matrix& z = logits.value();
    if (static_cast<std::size_t>(z.size()) != labels.size()) {
        throw DimensionError("bce_with_logits: " + std::to_string(z.size()) + " logits for " +
                             std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) {
        throw ContractViolation("bce_with_logits: no examples");
    }
    std::vector<double> y(labels.begin(), labels.end());
    double total = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double zk = z.data()[k];
        total += y[k] * softplus(-zk) + (1.0 - y[k]) * softplus(zk);
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(y.size());
    return unary(Op::BceWithLogits, logits, std::move(out),
                 [y = std::move(y)](const Tape& t, std::span<const std::size_t> in, const Matrix&, const Matrix& g,
                                    std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const Matrix& z = t.value(in[0]);
                     const double c = g(0, 0) / static_cast<double>(y.size());
                     for (std::size_t k = 0; k < y.size(); ++k) {
                         gi[0]->data()[k] += c * (sigmoid(z.data()[k]) - y[k]);
                     }
                 });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const std::uint32_t> rows) {
    const Matrix& z = logits.value();
    if (rows.empty()) {
        throw ContractViolation("softmax_cross_entropy: no rows selected");
    }
    const Eigen::Index classes = z.cols();
    std::vector<std::uint32_t> kept(rows.begin(), rows.end());
    std::vector<int> targets;
    targets.reserve(kept.size());
    for (std::uint32_t r : kept) {
        if (r >= static_cast<std::uint32_t>(z.rows()) || r >= labels.size()) {
            throw DimensionError("softmax_cross_entropy: row " + std::to_string(r) + " out of range");
        }
        if (labels[r] < 0 || labels[r] >= classes) {
            throw DomainError("label " + std::to_string(labels[r]) + " outside [0, " + std::to_string(classes) + ")");
        }
        targets.push_back(labels[r]);
    }
    Matrix probs(static_cast<Eigen::Index>(kept.size()), classes);
    double total = 0.0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto row = z.row(kept[k]);
        const double m = row.maxCoeff();
        const Row e = (row.array() - m).exp();
        const double s = e.sum();
        probs.row(static_cast<Eigen::Index>(k)) = e / s;
        total += (m + std::log(s)) - row(targets[k]);
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(kept.size());
    return unary(Op::SoftmaxCrossEntropy, logits, std::move(out),
                 [kept = std::move(kept), targets = std::move(targets), probs = std::move(probs)](
                     const Tape&, auto, const Matrix&, const Matrix& g, std::span<Matrix* const> gi) {
                     if (!gi[0]) return;
                     const double c = g(0, 0) / static_cast<double>(kept.size());
                     for (std::size_t k = 0; k < kept.size(); ++k) {
                         Row d = probs.row(static_cast<Eigen::Index>(k));
                         d(targets[k]) -= 1.0;
                         gi[0]->row(kept[k]) += c * d;
                     }
                 });
}

// ---------------------------------------------------------------------------

double evaluate(const LossBuilder& f, const ParamStore& params) {
    Tape tape;
    const Bindings b = tape.bind(params);
    return f(tape, b).scalar();
}

GradCheckReport grad_check(const LossBuilder& f, ParamStore params, double step) {
    if (!(step > 0.0)) {
        throw ConfigError("grad_check: step must be > 0");
    }
    Grad analytic;
    {
        Tape tape;
        const Bindings b = tape.bind(params);
        analytic = tape.backward(f(tape, b));
    }
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& value = params[p].value;
        for (Eigen::Index k = 0; k < value.size(); ++k) {
            const double saved = value.data()[k];
            value.data()[k] = saved + step;
            const double plus = evaluate(f, params);
            value.data()[k] = saved - step;
            const double minus = evaluate(f, params);
            value.data()[k] = saved;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw DomainError("grad_check: loss is not finite around parameter '" + params[p].name + "'");
            }
            const double numeric = (plus - minus) / (2.0 * step);
            const double a = analytic[p].data()[k];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            ++report.coordinates;
            if (rel > report.max_rel_error || report.worst_index < 0) {
                report.max_rel_error = rel;
                report.worst_param = params[p].name;
                report.worst_index = k;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace h2h::ad
