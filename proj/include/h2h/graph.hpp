#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace h2h::data {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using NodeId = std::uint32_t;

/// Undirected edge; canonical form has u < v.
struct Edge {
    NodeId u = 0;
    NodeId v = 0;

    Edge canonical() const { return u < v ? Edge{u, v} : Edge{v, u}; }
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected simple graph with CSR adjacency and optional node payload.
///
/// Edges are stored canonically, sorted and deduplicated; self-loops are
/// dropped (self-inclusion happens at aggregation time). Neighbour lists are
/// sorted ascending.
class Graph {
public:
    Graph() = default;
    /// Throws DomainError when an endpoint is >= num_nodes.
    Graph(std::size_t num_nodes, std::span<const Edge> edges);

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const NodeId> neighbors(NodeId i) const {
        return {indices_.data() + offsets_[i], indices_.data() + offsets_[i + 1]};
    }
    std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
    bool has_edge(NodeId a, NodeId b) const;

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<NodeId>& indices() const { return indices_; }

    /// Same nodes and payload, different edge set.
    Graph with_edges(std::span<const Edge> edges) const;

    bool has_features() const { return features_.rows() > 0; }
    const Matrix& features() const { return features_; }
    /// Throws DimensionError if the row count differs from num_nodes().
    void set_features(Matrix features);

    bool has_node_labels() const { return !node_labels_.empty(); }
    const std::vector<int>& node_labels() const { return node_labels_; }
    void set_node_labels(std::vector<int> labels);

    std::optional<int> graph_label() const { return graph_label_; }
    void set_graph_label(std::optional<int> label) { graph_label_ = label; }

private:
    std::size_t num_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> indices_;
    Matrix features_;
    std::vector<int> node_labels_;
    std::optional<int> graph_label_;
};

}  // namespace h2h::data
