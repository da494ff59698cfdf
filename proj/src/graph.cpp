#include "h2h/graph.hpp"

#include <algorithm>
#include <string>

#include "h2h/errors.hpp"

namespace h2h::data {

Graph::Graph(std::size_t num_nodes, std::span<const Edge> edges) : num_nodes_(num_nodes) {
    edges_.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.u >= num_nodes || e.v >= num_nodes) {
            throw DomainError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                              ") references a node outside [0, " + std::to_string(num_nodes) + ")");
        }
        if (e.u != e.v) {
            edges_.push_back(e.canonical());
        }
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    std::vector<std::size_t> degree(num_nodes, 0);
    for (const Edge& e : edges_) {
        ++degree[e.u];
        ++degree[e.v];
    }
    offsets_.assign(num_nodes + 1, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        offsets_[i + 1] = offsets_[i] + degree[i];
    }
    indices_.resize(offsets_[num_nodes]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    // Edges are sorted by (u, v), so appending in this order keeps every list sorted
    // except for the back-references, which are fixed by the sort below.
    for (const Edge& e : edges_) {
        indices_[cursor[e.u]++] = e.v;
        indices_[cursor[e.v]++] = e.u;
    }
    for (std::size_t i = 0; i < num_nodes; ++i) {
        std::sort(indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
    }
}

bool Graph::has_edge(NodeId a, NodeId b) const {
    if (a >= num_nodes_ || b >= num_nodes_) {
        return false;
    }
    const auto nbrs = neighbors(a);
    return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

Graph Graph::with_edges(std::span<const Edge> edges) const {
    Graph g(num_nodes_, edges);
    g.features_ = features_;
    g.node_labels_ = node_labels_;
    g.graph_label_ = graph_label_;
    return g;
}

void Graph::set_features(Matrix features) {
    if (static_cast<std::size_t>(features.rows()) != num_nodes_) {
        throw DimensionError("feature matrix has " + std::to_string(features.rows()) + " rows for " +
                             std::to_string(num_nodes_) + " nodes");
    }
    features_ = std::move(features);
}

void Graph::set_node_labels(std::vector<int> labels) {
    if (labels.size() != num_nodes_) {
        throw DimensionError("label vector has " + std::to_string(labels.size()) + " entries for " +
                             std::to_string(num_nodes_) + " nodes");
    }
    node_labels_ = std::move(labels);
}

}  // namespace h2h::data
