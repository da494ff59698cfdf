#include "h2h/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "h2h/errors.hpp"
#include "h2h/optimizer.hpp"

namespace h2h::model {
namespace {

double apply_sigma(double v, Activation act, double slope) {
    switch (act) {
        case Activation::Identity: return v;
        case Activation::Relu: return v > 0.0 ? v : 0.0;
        case Activation::LeakyRelu: return v > 0.0 ? v : slope * v;
    }
    return v;
}

double sigma_slope(Activation act, double slope) { return act == Activation::LeakyRelu ? slope : 0.0; }

Matrix glorot(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        m.data()[k] = u(rng);
    }
    return m;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
    std::normal_distribution<double> n(0.0, stddev);
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        m.data()[k] = n(rng);
    }
    return m;
}

bool is_h2h(const ModelConfig& cfg) { return cfg.arch == Architecture::H2H; }

}  // namespace

Architecture parse_architecture(std::string_view s) {
    if (s == "h2h") return Architecture::H2H;
    if (s == "gcn") return Architecture::EuclideanGcn;
    throw ConfigError("unknown model '" + std::string(s) + "' (expected h2h or gcn)");
}

Activation parse_activation(std::string_view s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "leaky_relu") return Activation::LeakyRelu;
    throw ConfigError("unknown activation '" + std::string(s) + "' (expected identity, relu or leaky_relu)");
}

Aggregation parse_aggregation(std::string_view s) {
    if (s == "lorentz_sum") return Aggregation::LorentzSum;
    if (s == "klein") return Aggregation::Klein;
    throw ConfigError("unknown aggregation '" + std::string(s) + "' (expected lorentz_sum or klein)");
}

std::string_view to_string(Architecture a) { return a == Architecture::H2H ? "h2h" : "gcn"; }

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky_relu";
    }
    return "unknown";
}

std::string_view to_string(Aggregation a) { return a == Aggregation::LorentzSum ? "lorentz_sum" : "klein"; }

void ModelConfig::validate() const {
    if (dim == 0 || layers == 0 || feature_dim == 0) {
        throw ConfigError("dim, layers and feature dimension must be >= 1");
    }
    if (!(slope >= 0.0 && slope < 1.0)) {
        throw ConfigError("activation slope must lie in [0, 1) so the Poincare ball maps into itself");
    }
    if (!(t > 0.0)) {
        throw ConfigError("Fermi-Dirac temperature t must be > 0");
    }
    if (!std::isfinite(r)) {
        throw ConfigError("Fermi-Dirac radius r must be finite");
    }
    if (num_classes > 0 && num_centroids < num_classes) {
        throw ConfigError("num_centroids (" + std::to_string(num_centroids) + ") must be >= number of classes (" +
                          std::to_string(num_classes) + ")");
    }
}

std::string layer_param_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".w"; }

ad::ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(cfg.dim);
    const auto d = static_cast<Eigen::Index>(cfg.feature_dim);
    ad::ParamStore params;
    params.add("input_proj", glorot(rng, d, n));
    params.add("input_bias", Matrix::Zero(1, n));
    const ad::ParamKind kind = is_h2h(cfg) ? ad::ParamKind::Stiefel : ad::ParamKind::Euclidean;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        params.add(layer_param_name(l), opt::orthogonal_init(n, n, rng()).matrix(), kind);
    }
    if (cfg.num_classes > 0) {
        const auto c = static_cast<Eigen::Index>(cfg.num_centroids);
        const auto k = static_cast<Eigen::Index>(cfg.num_classes);
        params.add("centroids", gaussian(rng, c, n, 1.0 / std::sqrt(static_cast<double>(n))));
        params.add("classifier", glorot(rng, c, k));
        params.add("classifier_bias", Matrix::Zero(1, k));
    }
    return params;
}

// ---------------------------------------------------------------------------
// Point-level reference path

geo::LorentzPoint embed_input(const geo::VectorRef& features, const Matrix& input_proj, const Matrix& bias) {
    if (features.size() != input_proj.rows()) {
        throw DimensionError("embed_input: " + std::to_string(features.size()) + " features for a " +
                             std::to_string(input_proj.rows()) + "-row projection");
    }
    if (bias.size() != input_proj.cols()) {
        throw DimensionError("embed_input: bias length differs from projection width");
    }
    if (!features.allFinite()) {
        throw DomainError("embed_input: non-finite features");
    }
    const Eigen::Index n = input_proj.cols();
    const geo::Vector z = input_proj.transpose() * features + bias.transpose().reshaped();
    geo::Vector tangent = geo::Vector::Zero(n + 1);
    tangent.tail(n) = z;
    return geo::exp_map(geo::LorentzPoint::origin(static_cast<std::size_t>(n)), tangent);
}

geo::LorentzPoint lorentz_linear(const geo::LorentzPoint& x, const Matrix& w) {
    const auto n = static_cast<Eigen::Index>(x.dim());
    if (w.rows() != n || w.cols() != n) {
        throw DimensionError("lorentz_linear: transform must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    const double err = opt::orthogonality_error(w);
    if (!(err <= 1e-6)) {
        throw ContractViolation("lorentz_linear: transform is not orthogonal (error " + std::to_string(err) + ")");
    }
    geo::Vector y(n + 1);
    y[0] = x.time();
    y.tail(n) = w * x.spatial();
    return geo::LorentzPoint::unchecked(std::move(y));
}

geo::LorentzPoint aggregate_neighbors(std::span<const geo::LorentzPoint> states, const data::Graph& graph,
                                      data::NodeId i) {
    if (states.size() != graph.num_nodes() || i >= graph.num_nodes()) {
        throw DimensionError("aggregate_neighbors: state count or node id does not match the graph");
    }
    std::vector<geo::KleinPoint> members;
    members.reserve(graph.degree(i) + 1);
    members.push_back(geo::lorentz_to_klein(states[i]));
    for (data::NodeId j : graph.neighbors(i)) {
        members.push_back(geo::lorentz_to_klein(states[j]));
    }
    return geo::klein_to_lorentz(geo::einstein_midpoint(members));
}

geo::LorentzPoint hyperbolic_activation(const geo::LorentzPoint& m, Activation act, double slope) {
    if (!(slope >= 0.0 && slope < 1.0)) {
        throw ContractViolation("activation slope must lie in [0, 1)");
    }
    geo::Vector b = geo::lorentz_to_poincare(m).coords();
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        b[k] = apply_sigma(b[k], act, slope);
    }
    if (!(b.norm() < 1.0)) {
        throw ContractViolation("activation moved a point out of the Poincare ball");
    }
    return geo::poincare_to_lorentz(geo::PoincarePoint::from_coords(std::move(b)));
}

double fermi_dirac_sq(double sq_dist, double r, double t) {
    if (!(t > 0.0)) {
        throw ConfigError("fermi_dirac: temperature t must be > 0");
    }
    return 1.0 / (std::exp((sq_dist - r) / t) + 1.0);
}

double fermi_dirac(const geo::LorentzPoint& a, const geo::LorentzPoint& b, double r, double t) {
    const double d = geo::lorentz_distance(a, b);
    return fermi_dirac_sq(d * d, r, t);
}

Matrix centroid_distances(const Matrix& embeddings, const Matrix& centroids) {
    if (embeddings.cols() != centroids.cols()) {
        throw DimensionError("centroid_distances: embeddings and centroids differ in dimension");
    }
    Matrix flipped = -centroids;
    flipped.col(0) = centroids.col(0);
    const Matrix inner = embeddings * flipped.transpose();
    Matrix out(inner.rows(), inner.cols());
    for (Eigen::Index i = 0; i < inner.rows(); ++i) {
        for (Eigen::Index j = 0; j < inner.cols(); ++j) {
            const double u = inner(i, j);
            if (u > 2.0) {
                out(i, j) = std::acosh(u);
                continue;
            }
            const geo::Vector diff = embeddings.row(i).transpose() - centroids.row(j).transpose();
            out(i, j) = 2.0 * std::asinh(0.5 * std::sqrt(std::max(geo::lorentz_inner(diff, diff), 0.0)));
        }
    }
    return out;
}

Matrix materialize_centroids(const Matrix& tangent) {
    const Eigen::Index n = tangent.cols();
    Matrix out(tangent.rows(), n + 1);
    for (Eigen::Index j = 0; j < tangent.rows(); ++j) {
        geo::Vector v = geo::Vector::Zero(n + 1);
        v.tail(n) = tangent.row(j).transpose();
        out.row(j) = geo::exp_map(geo::LorentzPoint::origin(static_cast<std::size_t>(n)), v).coords().transpose();
    }
    return out;
}

Matrix nc_logits(const Matrix& distances, const Matrix& classifier, const Matrix& bias) {
    if (distances.cols() != classifier.rows() || bias.rows() != 1 || bias.cols() != classifier.cols()) {
        throw DimensionError("nc_logits: classifier must be C x K with a 1 x K bias");
    }
    Matrix out = distances * classifier;
    out.rowwise() += bias.row(0);
    return out;
}

Matrix gc_readout(const Matrix& distances) {
    if (distances.rows() == 0) {
        throw DimensionError("gc_readout: empty graph");
    }
    return distances.colwise().mean();
}

Matrix euclidean_gcn_layer(const Matrix& states, const data::Graph& graph, const Matrix& w, Activation act,
                           double slope) {
    if (static_cast<std::size_t>(states.rows()) != graph.num_nodes() || w.cols() != states.cols()) {
        throw DimensionError("euclidean_gcn_layer: shapes do not match the graph or weight");
    }
    const Matrix transformed = states * w.transpose();
    Matrix out = transformed;
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        const auto nbrs = graph.neighbors(static_cast<data::NodeId>(i));
        if (nbrs.empty()) continue;
        const double weight = 1.0 / static_cast<double>(nbrs.size());
        for (data::NodeId j : nbrs) {
            out.row(i) += weight * transformed.row(j);
        }
    }
    return out.unaryExpr([act, slope](double v) { return apply_sigma(v, act, slope); });
}

// ---------------------------------------------------------------------------
// Tape path

std::vector<ad::Var> build_layers(ad::Tape& tape, const ad::Bindings& params, const data::Graph& graph,
                                  const Matrix& features, const ModelConfig& cfg) {
    if (static_cast<std::size_t>(features.rows()) != graph.num_nodes()) {
        throw DimensionError("feature rows (" + std::to_string(features.rows()) + ") differ from node count (" +
                             std::to_string(graph.num_nodes()) + ")");
    }
    if (static_cast<std::size_t>(features.cols()) != cfg.feature_dim) {
        throw DimensionError("feature width " + std::to_string(features.cols()) + " differs from configured " +
                             std::to_string(cfg.feature_dim));
    }
    const ad::Var x = tape.constant(features);
    const ad::Var z = ad::add_row_bias(ad::matmul(x, params["input_proj"]), params["input_bias"]);
    const double slope = sigma_slope(cfg.activation, cfg.slope);
    std::vector<ad::Var> states;
    states.reserve(cfg.layers + 1);

    if (!is_h2h(cfg)) {
        states.push_back(z);
        ad::Var h = z;
        for (std::size_t l = 0; l < cfg.layers; ++l) {
            h = ad::mean_aggregate(ad::matmul(h, params[layer_param_name(l)]), graph);
            if (cfg.activation != Activation::Identity) {
                h = ad::leaky_relu(h, slope);
            }
            states.push_back(h);
        }
        return states;
    }

    ad::Var h = ad::exp_map_origin(z);
    states.push_back(h);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        h = ad::lorentz_linear(h, params[layer_param_name(l)]);
        if (cfg.aggregation == Aggregation::Klein) {
            h = ad::from_klein(ad::einstein_midpoint(ad::to_klein(h), graph));
        } else {
            h = ad::lorentz_normalize(ad::neighbor_sum(h, graph));
        }
        if (cfg.activation != Activation::Identity) {
            h = ad::from_poincare(ad::leaky_relu(ad::to_poincare(h), slope));
        }
        if (cfg.reproject) {
            h = ad::project_to_lorentz(h);
        }
        states.push_back(h);
    }
    return states;
}

ad::Var build_embeddings(ad::Tape& tape, const ad::Bindings& params, const data::Graph& graph,
                         const Matrix& features, const ModelConfig& cfg) {
    return build_layers(tape, params, graph, features, cfg).back();
}

NodeStates forward(const data::Graph& graph, const Matrix& features, const ad::ParamStore& params,
                   const ModelConfig& cfg) {
    if (graph.num_nodes() == 0) {
        throw ContractViolation("forward: empty graph");
    }
    ad::Tape tape;
    const ad::Bindings b = tape.bind(params);
    NodeStates out;
    for (const ad::Var& v : build_layers(tape, b, graph, features, cfg)) {
        out.layers.push_back(v.value());
    }
    return out;
}

ad::Var pair_sq_dist(const ad::Var& embeddings, std::span<const data::Edge> pairs, const ModelConfig& cfg) {
    return is_h2h(cfg) ? ad::pair_sq_distance(embeddings, pairs) : ad::pair_sq_euclidean(embeddings, pairs);
}

ad::Var lp_loss(const ad::Var& embeddings, std::span<const data::Edge> positives,
                std::span<const data::Edge> negatives, const ModelConfig& cfg) {
    std::vector<data::Edge> pairs(positives.begin(), positives.end());
    pairs.insert(pairs.end(), negatives.begin(), negatives.end());
    std::vector<double> labels(pairs.size(), 0.0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives.size()), 1.0);
    // sigmoid((r - d^2) / t) is the Fermi-Dirac probability, so BCE on these
    // logits is the cross-entropy of the decoder.
    const ad::Var sq = pair_sq_dist(embeddings, pairs, cfg);
    const ad::Var logits = ad::add_scalar(ad::scale(sq, -1.0 / cfg.t), cfg.r / cfg.t);
    return ad::bce_with_logits(logits, labels);
}

ad::Var distance_matrix(const ad::Var& embeddings, const ad::Bindings& params, const ModelConfig& cfg) {
    if (cfg.num_classes == 0) {
        throw ConfigError("model has no classification head");
    }
    if (is_h2h(cfg)) {
        return ad::centroid_distance(embeddings, ad::exp_map_origin(params["centroids"]));
    }
    return ad::centroid_euclidean(embeddings, params["centroids"]);
}

ad::Var node_logits(const ad::Var& embeddings, const ad::Bindings& params, const ModelConfig& cfg) {
    const ad::Var d = distance_matrix(embeddings, params, cfg);
    return ad::add_row_bias(ad::matmul(d, params["classifier"]), params["classifier_bias"]);
}

ad::Var graph_logits(const ad::Var& embeddings, const ad::Bindings& params, const ModelConfig& cfg) {
    const ad::Var pooled = ad::mean_rows(distance_matrix(embeddings, params, cfg));
    return ad::add_row_bias(ad::matmul(pooled, params["classifier"]), params["classifier_bias"]);
}

std::vector<double> score_pairs(const Matrix& embeddings, std::span<const data::Edge> pairs, const ModelConfig& cfg) {
    std::vector<double> scores;
    scores.reserve(pairs.size());
    const Eigen::Index n = embeddings.cols() - 1;
    for (const data::Edge& e : pairs) {
        const auto a = embeddings.row(e.u);
        const auto b = embeddings.row(e.v);
        double sq = 0.0;
        if (is_h2h(cfg)) {
            const double u = a(0) * b(0) - a.tail(n).dot(b.tail(n));
            const double d = std::acosh(std::max(u, 1.0));
            sq = d * d;
        } else {
            sq = (a - b).squaredNorm();
        }
        scores.push_back(fermi_dirac_sq(sq, cfg.r, cfg.t));
    }
    return scores;
}

}  // namespace h2h::model
