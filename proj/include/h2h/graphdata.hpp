#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2h/graph.hpp"

namespace h2h::data {

// ---------------------------------------------------------------------------
// Text formats
//
//   edges.txt     "u v" per line, zero-based ids, '#' starts a comment line
//   features.txt  "id f1 f2 ... fd" per line
//   labels.txt    "id label" per line
//
// Malformed lines raise ParseError naming the file and line number.

std::vector<Edge> read_edges(const std::filesystem::path& path);
/// Rows indexed by id; every id in [0, max id] must appear exactly once.
Matrix read_features(const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path);

/// Node count comes from the feature or label file when given, otherwise from
/// the largest edge endpoint. Out-of-range ids raise DomainError.
Graph load_graph(const std::filesystem::path& edges, const std::optional<std::filesystem::path>& features = {},
                 const std::optional<std::filesystem::path>& labels = {});

void write_edges(const std::filesystem::path& path, std::span<const Edge> edges);
void write_features(const std::filesystem::path& path, const Matrix& features);
void write_labels(const std::filesystem::path& path, std::span<const int> labels);

/// Writes edges.txt, and features.txt / labels.txt when present, into dir.
void write_graph(const std::filesystem::path& dir, const Graph& g);
/// Reads a directory produced by write_graph.
Graph read_graph_dir(const std::filesystem::path& dir);

/// One sub-directory per graph (graph_00000, ...) plus graph_labels.txt.
void write_graph_set(const std::filesystem::path& dir, std::span<const Graph> graphs);
std::vector<Graph> read_graph_set(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Generators

struct TreeSpec {
    std::size_t depth = 6;
    std::size_t branching = 3;
    /// Extra uniformly sampled edges as a fraction of the tree edge count.
    double noise_frac = 0.05;
    /// Std of the root's noise step; a node at depth k steps by
    /// feature_noise * feature_decay^k away from its parent.
    double feature_noise = 0.5;
    double feature_decay = 0.5;
    /// Noise columns appended after the depth one-hot.
    std::size_t noise_dims = 16;
    std::uint64_t seed = 0;
};

std::size_t tree_size(std::size_t depth, std::size_t branching);

/// Balanced tree in BFS order (root 0) plus round(noise_frac * tree edges)
/// random non-tree edges. Features are one-hot depth followed by noise_dims
/// columns of Gaussian noise accumulated along the root path; labels are 1
/// for nodes deeper than depth/2, else 0.
Graph generate_tree(const TreeSpec& spec);

/// Nodes [0, n) and the edges among them; features and labels are cut to match.
/// A prefix of a BFS-ordered tree is again a tree.
Graph prefix_subgraph(const Graph& g, std::size_t n);

/// Depth of every node of a BFS-ordered balanced tree.
std::vector<std::size_t> tree_depths(std::size_t depth, std::size_t branching);

enum class GraphKind : std::uint8_t { ErdosRenyi = 0, BarabasiAlbert = 1, WattsStrogatz = 2 };

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed);
/// Starts from an (m+1)-clique; each new node attaches to m distinct nodes
/// chosen proportionally to degree. m = 1 grows a tree.
Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed);
/// Ring lattice with k nearest neighbours (k even), each edge rewired with probability beta.
Graph watts_strogatz(std::size_t n, std::size_t k, double beta, std::uint64_t seed);

/// Per node: degree / max degree and local clustering coefficient.
Matrix structural_features(const Graph& g);

struct ClassificationSpec {
    std::size_t count_per_class = 200;
    std::size_t min_nodes = 30;
    std::size_t max_nodes = 60;
    double er_p = 0.1;
    std::size_t ba_m = 2;
    std::size_t ws_k = 4;
    double ws_beta = 0.2;
    std::uint64_t seed = 0;
};

/// count_per_class graphs of each kind, interleaved ER, BA, WS, ...; graph
/// label = kind id; node features from structural_features.
std::vector<Graph> generate_classification_set(const ClassificationSpec& spec);

// ---------------------------------------------------------------------------
// Splits and sampling

struct LpSplit {
    std::vector<Edge> train;
    std::vector<Edge> val;
    std::vector<Edge> test;
    std::vector<Edge> val_neg;
    std::vector<Edge> test_neg;
};

struct SplitFractions {
    double train = 0.85;
    double val = 0.05;
    double test = 0.10;
    /// ConfigError unless all are in [0,1] and they sum to 1.
    void validate() const;
};

/// Held-out positives are a uniform sample; val/test negatives are distinct
/// uniform non-edges of the full graph. Deterministic under seed.
LpSplit make_lp_split(const Graph& g, const SplitFractions& fractions, std::uint64_t seed);

/// k distinct uniform non-edges of g, none in exclude. Rejection sampling;
/// NumericError when the attempt cap is hit.
std::vector<Edge> sample_negatives(const Graph& g, std::size_t k, std::uint64_t seed,
                                   std::span<const Edge> exclude = {});

struct NodeSplit {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> val;
    std::vector<std::uint32_t> test;
};

/// Per-class shuffle and cut by the given fractions (sorted indices out).
NodeSplit stratified_split(std::span<const int> labels, const SplitFractions& fractions, std::uint64_t seed);

/// JSON manifest stored next to generated datasets.
nlohmann::json tree_manifest(const TreeSpec& spec, const Graph& g);
nlohmann::json classification_manifest(const ClassificationSpec& spec, std::span<const Graph> graphs);

}  // namespace h2h::data
