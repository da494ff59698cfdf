#pragma once

// Lorentz layer stack, task heads, and a Euclidean GCN baseline.
//
// Two evaluation paths exist. The point-level functions below (embed_input,
// lorentz_linear, aggregate_neighbors, ...) work on single geometry points and
// serve as the reference path. build_embeddings() records the same pipeline on
// a Tape for training.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2h/autodiff.hpp"
#include "h2h/geometry.hpp"
#include "h2h/graph.hpp"

namespace h2h::model {

using ad::Matrix;

enum class Architecture : std::uint8_t { H2H, EuclideanGcn };
enum class Activation : std::uint8_t { Identity, Relu, LeakyRelu };
/// LorentzSum normalizes the coordinate sum; Klein routes through Einstein's
/// formula. Both compute the same midpoint.
enum class Aggregation : std::uint8_t { LorentzSum, Klein };

Architecture parse_architecture(std::string_view s);
Activation parse_activation(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
std::string_view to_string(Architecture a);
std::string_view to_string(Activation a);
std::string_view to_string(Aggregation a);

struct ModelConfig {
    Architecture arch = Architecture::H2H;
    std::size_t feature_dim = 1;
    std::size_t dim = 16;
    std::size_t layers = 2;
    std::size_t num_centroids = 16;
    /// 0 disables the classification head (link prediction only).
    std::size_t num_classes = 0;
    Activation activation = Activation::LeakyRelu;
    double slope = 0.01;
    Aggregation aggregation = Aggregation::LorentzSum;
    bool reproject = true;
    double r = 2.0;
    double t = 1.0;

    /// Throws ConfigError on inconsistent values.
    void validate() const;
};

/// Parameter layout:
///   input_proj (feature_dim x n), input_bias (1 x n),
///   layer<l>.w (n x n; Stiefel for H2H, Euclidean for the baseline),
///   centroids (C x n tangent vectors at the origin), classifier (C x K),
///   classifier_bias (1 x K). The last three exist only when num_classes > 0.
ad::ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

std::string layer_param_name(std::size_t layer);

// ---------------------------------------------------------------------------
// Point-level reference path

geo::LorentzPoint embed_input(const geo::VectorRef& features, const Matrix& input_proj, const Matrix& bias);
/// y = [x0, W x_{1:n}]. ContractViolation when W is not orthogonal within 1e-6.
geo::LorentzPoint lorentz_linear(const geo::LorentzPoint& x, const Matrix& w);
/// Einstein midpoint of {i} u N(i) through the Klein model.
geo::LorentzPoint aggregate_neighbors(std::span<const geo::LorentzPoint> states, const data::Graph& graph,
                                      data::NodeId i);
/// Applies sigma to the Poincare coordinates of m and maps back.
geo::LorentzPoint hyperbolic_activation(const geo::LorentzPoint& m, Activation act, double slope = 0.01);

double fermi_dirac(const geo::LorentzPoint& a, const geo::LorentzPoint& b, double r, double t);
/// Same decoder applied directly to a squared distance.
double fermi_dirac_sq(double sq_dist, double r, double t);

/// D[i,j] = d_L(embeddings row i, centroids row j); both hold Lorentz rows.
Matrix centroid_distances(const Matrix& embeddings, const Matrix& centroids);
/// Tangent parameters (C x n) -> Lorentz centroids (C x (n+1)).
Matrix materialize_centroids(const Matrix& tangent);
/// Row-wise D * classifier + bias.
Matrix nc_logits(const Matrix& distances, const Matrix& classifier, const Matrix& bias);
/// Column mean of D (1 x C).
Matrix gc_readout(const Matrix& distances);

/// sigma(H' + A_rw H') with rows h'_i = W h_i and A_rw the row-normalized
/// adjacency (isolated nodes keep h'_i).
Matrix euclidean_gcn_layer(const Matrix& states, const data::Graph& graph, const Matrix& w, Activation act,
                           double slope = 0.01);

// ---------------------------------------------------------------------------
// Full forward

struct NodeStates {
    /// layers[0] is the input embedding; layers.back() the final embedding.
    /// Rows are Lorentz points for H2H and Euclidean vectors for the baseline.
    std::vector<Matrix> layers;

    const Matrix& final() const { return layers.back(); }
};

NodeStates forward(const data::Graph& graph, const Matrix& features, const ad::ParamStore& params,
                   const ModelConfig& cfg);

/// Records the embedding pipeline; returns every layer's state.
std::vector<ad::Var> build_layers(ad::Tape& tape, const ad::Bindings& params, const data::Graph& graph,
                                  const Matrix& features, const ModelConfig& cfg);
ad::Var build_embeddings(ad::Tape& tape, const ad::Bindings& params, const data::Graph& graph,
                         const Matrix& features, const ModelConfig& cfg);

/// Squared distances for pairs (geodesic for H2H, Euclidean for the baseline).
ad::Var pair_sq_dist(const ad::Var& embeddings, std::span<const data::Edge> pairs, const ModelConfig& cfg);
/// Mean BCE of the Fermi-Dirac decoder over positives (label 1) and negatives (label 0).
ad::Var lp_loss(const ad::Var& embeddings, std::span<const data::Edge> positives,
                std::span<const data::Edge> negatives, const ModelConfig& cfg);
/// Distances from every node to every centroid (N x C).
ad::Var distance_matrix(const ad::Var& embeddings, const ad::Bindings& params, const ModelConfig& cfg);
ad::Var node_logits(const ad::Var& embeddings, const ad::Bindings& params, const ModelConfig& cfg);
ad::Var graph_logits(const ad::Var& embeddings, const ad::Bindings& params, const ModelConfig& cfg);

/// Edge-probability scores for pairs given final embeddings.
std::vector<double> score_pairs(const Matrix& embeddings, std::span<const data::Edge> pairs, const ModelConfig& cfg);

}  // namespace h2h::model
