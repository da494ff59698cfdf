#include "h2h/graphdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "h2h/errors.hpp"

namespace h2h::data {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ParseError("cannot write '" + path.string() + "'");
    }
    return out;
}

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool skip_line(const std::vector<std::string_view>& toks) { return toks.empty() || toks.front().front() == '#'; }

template <class T>
bool parse_number(std::string_view s, T& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

NodeId parse_id(const fs::path& path, std::size_t line, std::string_view tok) {
    std::uint64_t v = 0;
    if (!parse_number(tok, v) || v > std::numeric_limits<NodeId>::max()) {
        fail(path, line, "invalid node id '" + std::string(tok) + "'");
    }
    return static_cast<NodeId>(v);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::uint64_t pair_key(Edge e) {
    e = e.canonical();
    return (static_cast<std::uint64_t>(e.u) << 32) | e.v;
}

template <class T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(v[i - 1], v[pick(rng)]);
    }
}

std::size_t rounded(double frac, std::size_t n) { return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))); }

}  // namespace

// ---------------------------------------------------------------------------
// Text formats

std::vector<Edge> read_edges(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::vector<Edge> edges;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto toks = tokens(line);
        if (skip_line(toks)) continue;
        if (toks.size() != 2) {
            fail(path, no, "expected 'u v', got " + std::to_string(toks.size()) + " fields");
        }
        edges.push_back(Edge{parse_id(path, no, toks[0]), parse_id(path, no, toks[1])});
    }
    return edges;
}

Matrix read_features(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<NodeId, std::vector<double>>> rows;
    std::string line;
    std::size_t width = 0;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto toks = tokens(line);
        if (skip_line(toks)) continue;
        if (toks.size() < 2) {
            fail(path, no, "expected 'id f1 ... fd'");
        }
        if (rows.empty()) {
            width = toks.size() - 1;
        } else if (toks.size() - 1 != width) {
            fail(path, no, "expected " + std::to_string(width) + " features, got " + std::to_string(toks.size() - 1));
        }
        std::vector<double> vals(width);
        for (std::size_t k = 0; k < width; ++k) {
            if (!parse_number(toks[k + 1], vals[k]) || !std::isfinite(vals[k])) {
                fail(path, no, "invalid feature value '" + std::string(toks[k + 1]) + "'");
            }
        }
        rows.emplace_back(parse_id(path, no, toks[0]), std::move(vals));
    }
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    std::vector<char> seen(rows.size(), 0);
    for (const auto& [id, vals] : rows) {
        if (id >= rows.size() || seen[id]) {
            throw ParseError(path.string() + ": node ids must be 0.." + std::to_string(rows.size() - 1) +
                             " each exactly once (offending id " + std::to_string(id) + ")");
        }
        seen[id] = 1;
        for (std::size_t k = 0; k < width; ++k) {
            out(id, static_cast<Eigen::Index>(k)) = vals[k];
        }
    }
    return out;
}

std::vector<int> read_labels(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<NodeId, int>> rows;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto toks = tokens(line);
        if (skip_line(toks)) continue;
        int label = 0;
        if (toks.size() != 2 || !parse_number(toks[1], label) || label < 0) {
            fail(path, no, "expected 'id label' with a non-negative integer label");
        }
        rows.emplace_back(parse_id(path, no, toks[0]), label);
    }
    std::vector<int> out(rows.size(), -1);
    for (const auto& [id, label] : rows) {
        if (id >= rows.size() || out[id] != -1) {
            throw ParseError(path.string() + ": node ids must be 0.." + std::to_string(rows.size() - 1) +
                             " each exactly once (offending id " + std::to_string(id) + ")");
        }
        out[id] = label;
    }
    return out;
}

Graph load_graph(const fs::path& edges_path, const std::optional<fs::path>& features_path,
                 const std::optional<fs::path>& labels_path) {
    const std::vector<Edge> edges = read_edges(edges_path);
    std::optional<Matrix> features;
    std::optional<std::vector<int>> labels;
    if (features_path) features = read_features(*features_path);
    if (labels_path) labels = read_labels(*labels_path);

    std::size_t n = 0;
    if (features) {
        n = static_cast<std::size_t>(features->rows());
    } else if (labels) {
        n = labels->size();
    } else {
        for (const Edge& e : edges) n = std::max<std::size_t>(n, std::max(e.u, e.v) + 1);
    }
    if (features && labels && labels->size() != n) {
        throw DimensionError("feature file has " + std::to_string(n) + " nodes, label file " +
                             std::to_string(labels->size()));
    }
    Graph g(n, edges);
    if (features) g.set_features(std::move(*features));
    if (labels) g.set_node_labels(std::move(*labels));
    return g;
}

void write_edges(const fs::path& path, std::span<const Edge> edges) {
    std::ofstream out = open_output(path);
    for (const Edge& e : edges) {
        out << e.u << ' ' << e.v << '\n';
    }
}

void write_features(const fs::path& path, const Matrix& features) {
    std::ofstream out = open_output(path);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        out << i;
        for (Eigen::Index k = 0; k < features.cols(); ++k) {
            out << ' ' << format_double(features(i, k));
        }
        out << '\n';
    }
}

void write_labels(const fs::path& path, std::span<const int> labels) {
    std::ofstream out = open_output(path);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << i << ' ' << labels[i] << '\n';
    }
}

void write_graph(const fs::path& dir, const Graph& g) {
    fs::create_directories(dir);
    write_edges(dir / "edges.txt", g.edges());
    if (g.has_features()) write_features(dir / "features.txt", g.features());
    if (g.has_node_labels()) write_labels(dir / "labels.txt", g.node_labels());
}

Graph read_graph_dir(const fs::path& dir) {
    const fs::path edges = dir / "edges.txt";
    if (!fs::exists(edges)) {
        throw ParseError("no edges.txt in '" + dir.string() + "'");
    }
    std::optional<fs::path> features;
    std::optional<fs::path> labels;
    if (fs::exists(dir / "features.txt")) features = dir / "features.txt";
    if (fs::exists(dir / "labels.txt")) labels = dir / "labels.txt";
    return load_graph(edges, features, labels);
}

namespace {

std::string graph_dir_name(std::size_t i) {
    std::string digits = std::to_string(i);
    return "graph_" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

}  // namespace

void write_graph_set(const fs::path& dir, std::span<const Graph> graphs) {
    fs::create_directories(dir);
    std::vector<int> labels;
    labels.reserve(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        write_graph(dir / graph_dir_name(i), graphs[i]);
        labels.push_back(graphs[i].graph_label().value_or(0));
    }
    write_labels(dir / "graph_labels.txt", labels);
}

std::vector<Graph> read_graph_set(const fs::path& dir) {
    const std::vector<int> labels = read_labels(dir / "graph_labels.txt");
    std::vector<Graph> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Graph g = read_graph_dir(dir / graph_dir_name(i));
        if (!g.has_features()) g.set_features(structural_features(g));
        g.set_graph_label(labels[i]);
        out.push_back(std::move(g));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generators

std::size_t tree_size(std::size_t depth, std::size_t branching) {
    std::size_t total = 1;
    std::size_t level = 1;
    for (std::size_t d = 0; d < depth; ++d) {
        level *= branching;
        total += level;
    }
    return total;
}

std::vector<std::size_t> tree_depths(std::size_t depth, std::size_t branching) {
    std::vector<std::size_t> out;
    out.reserve(tree_size(depth, branching));
    std::size_t level = 1;
    for (std::size_t d = 0; d <= depth; ++d) {
        out.insert(out.end(), level, d);
        level *= branching;
    }
    return out;
}

Graph generate_tree(const TreeSpec& spec) {
    if (spec.depth < 1 || spec.branching < 1) {
        throw ConfigError("tree depth and branching must be >= 1");
    }
    if (spec.noise_frac < 0.0 || spec.feature_noise < 0.0 || spec.feature_decay < 0.0) {
        throw ConfigError("tree noise parameters must be >= 0");
    }
    const std::size_t n = tree_size(spec.depth, spec.branching);
    const std::vector<std::size_t> depth = tree_depths(spec.depth, spec.branching);
    std::vector<Edge> edges;
    edges.reserve(n - 1);
    // BFS numbering: children of node p are p*b + 1 .. p*b + b.
    for (std::size_t child = 1; child < n; ++child) {
        edges.push_back(Edge{static_cast<NodeId>((child - 1) / spec.branching), static_cast<NodeId>(child)});
    }
    std::mt19937_64 rng(spec.seed);
    const Graph tree(n, edges);
    const std::size_t extra = rounded(spec.noise_frac, edges.size());
    if (extra > 0) {
        const auto noise = sample_negatives(tree, extra, rng());
        edges.insert(edges.end(), noise.begin(), noise.end());
    }
    Graph g(n, edges);

    // Each node's noise is its parent's noise plus a fresh Gaussian step that
    // shrinks with depth, so siblings stay close and subtrees drift apart.
    const auto onehot = static_cast<Eigen::Index>(spec.depth + 1);
    const auto width = onehot + static_cast<Eigen::Index>(spec.noise_dims);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix features = Matrix::Zero(static_cast<Eigen::Index>(n), width);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double step = spec.feature_noise * std::pow(spec.feature_decay, static_cast<double>(depth[i]));
        for (Eigen::Index k = onehot; k < width; ++k) {
            features(row, k) = step * normal(rng);
        }
        if (i > 0) {
            const auto parent = static_cast<Eigen::Index>((i - 1) / spec.branching);
            features.row(row).tail(spec.noise_dims) += features.row(parent).tail(spec.noise_dims);
        }
        features(row, static_cast<Eigen::Index>(depth[i])) = 1.0;
        labels[i] = 2 * depth[i] > spec.depth ? 1 : 0;
    }
    g.set_features(std::move(features));
    g.set_node_labels(std::move(labels));
    return g;
}

Graph prefix_subgraph(const Graph& g, std::size_t n) {
    if (n > g.num_nodes()) {
        throw DomainError("prefix of " + std::to_string(n) + " nodes from a graph with " +
                          std::to_string(g.num_nodes()));
    }
    std::vector<Edge> kept;
    for (const Edge& e : g.edges()) {
        if (e.u < n && e.v < n) kept.push_back(e);
    }
    Graph out(n, kept);
    const auto rows = static_cast<Eigen::Index>(n);
    if (g.has_features()) out.set_features(g.features().topRows(rows));
    if (g.has_node_labels()) {
        out.set_node_labels(std::vector<int>(g.node_labels().begin(), g.node_labels().begin() + rows));
    }
    out.set_graph_label(g.graph_label());
    return out;
}

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("Erdos-Renyi edge probability must be in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
            if (coin(rng)) edges.push_back(Edge{u, v});
        }
    }
    return Graph(n, edges);
}

Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m < 1 || n < m + 1) {
        throw ConfigError("Barabasi-Albert needs m >= 1 and n >= m + 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    std::vector<NodeId> endpoints;  // node repeated once per incident edge
    for (NodeId u = 0; u <= m; ++u) {
        for (NodeId v = u + 1; v <= m; ++v) {
            edges.push_back(Edge{u, v});
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }
    std::vector<NodeId> targets;
    for (auto v = static_cast<NodeId>(m + 1); v < n; ++v) {
        targets.clear();
        std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
        while (targets.size() < m) {
            const NodeId t = endpoints[pick(rng)];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) {
                targets.push_back(t);
            }
        }
        for (NodeId t : targets) {
            edges.push_back(Edge{t, v});
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }
    return Graph(n, edges);
}

Graph watts_strogatz(std::size_t n, std::size_t k, double beta, std::uint64_t seed) {
    if (k % 2 != 0 || k < 2 || k >= n) {
        throw ConfigError("Watts-Strogatz needs an even k with 2 <= k < n");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ConfigError("Watts-Strogatz rewiring probability must be in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> present;
    std::vector<Edge> edges;
    for (std::size_t j = 1; j <= k / 2; ++j) {
        for (std::size_t u = 0; u < n; ++u) {
            const Edge e{static_cast<NodeId>(u), static_cast<NodeId>((u + j) % n)};
            edges.push_back(e);
            present.insert(pair_key(e));
        }
    }
    std::vector<std::size_t> degree(n, k);
    std::bernoulli_distribution rewire(beta);
    std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
    for (Edge& e : edges) {
        if (!rewire(rng)) continue;
        if (degree[e.u] >= n - 1) continue;  // u already adjacent to everyone
        NodeId w = 0;
        do {
            w = node(rng);
        } while (w == e.u || present.count(pair_key(Edge{e.u, w})) > 0);
        present.erase(pair_key(e));
        --degree[e.v];
        ++degree[w];
        e.v = w;
        present.insert(pair_key(e));
    }
    return Graph(n, edges);
}

Matrix structural_features(const Graph& g) {
    const std::size_t n = g.num_nodes();
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
    std::size_t max_degree = 0;
    for (NodeId i = 0; i < n; ++i) max_degree = std::max(max_degree, g.degree(i));
    for (NodeId i = 0; i < n; ++i) {
        const std::size_t d = g.degree(i);
        out(i, 0) = max_degree > 0 ? static_cast<double>(d) / static_cast<double>(max_degree) : 0.0;
        if (d < 2) continue;
        const auto nbrs = g.neighbors(i);
        std::size_t links = 0;
        for (std::size_t a = 0; a < nbrs.size(); ++a) {
            for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
                links += g.has_edge(nbrs[a], nbrs[b]);
            }
        }
        out(i, 1) = 2.0 * static_cast<double>(links) / static_cast<double>(d * (d - 1));
    }
    return out;
}

std::vector<Graph> generate_classification_set(const ClassificationSpec& spec) {
    if (spec.count_per_class < 1) {
        throw ConfigError("count_per_class must be >= 1");
    }
    if (spec.min_nodes > spec.max_nodes || spec.min_nodes < spec.ws_k + 1 || spec.min_nodes < spec.ba_m + 1) {
        throw ConfigError("node-count range is empty or too small for the generators");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::size_t> size(spec.min_nodes, spec.max_nodes);
    std::vector<Graph> out;
    out.reserve(3 * spec.count_per_class);
    for (std::size_t c = 0; c < spec.count_per_class; ++c) {
        for (int kind = 0; kind < 3; ++kind) {
            const std::size_t n = size(rng);
            const std::uint64_t seed = rng();
            Graph g;
            switch (static_cast<GraphKind>(kind)) {
                case GraphKind::ErdosRenyi: g = erdos_renyi(n, spec.er_p, seed); break;
                case GraphKind::BarabasiAlbert: g = barabasi_albert(n, spec.ba_m, seed); break;
                case GraphKind::WattsStrogatz: g = watts_strogatz(n, spec.ws_k, spec.ws_beta, seed); break;
            }
            g.set_features(structural_features(g));
            g.set_graph_label(kind);
            out.push_back(std::move(g));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits and sampling

void SplitFractions::validate() const {
    for (double f : {train, val, test}) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw ConfigError("split fractions must lie in [0, 1]");
        }
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1");
    }
}

std::vector<Edge> sample_negatives(const Graph& g, std::size_t k, std::uint64_t seed, std::span<const Edge> exclude) {
    const std::size_t n = g.num_nodes();
    if (k == 0) return {};
    if (n < 2) {
        throw NumericError("sample_negatives: graph has fewer than 2 nodes");
    }
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(exclude.size() + k);
    for (const Edge& e : exclude) taken.insert(pair_key(e));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
    const std::size_t cap = std::max<std::size_t>(10000, 200 * k);
    std::vector<Edge> out;
    out.reserve(k);
    for (std::size_t attempt = 0; out.size() < k; ++attempt) {
        if (attempt >= cap) {
            throw NumericError("sample_negatives: found only " + std::to_string(out.size()) + " of " +
                               std::to_string(k) + " non-edges after " + std::to_string(cap) +
                               " draws; graph is too dense");
        }
        const NodeId a = node(rng);
        const NodeId b = node(rng);
        if (a == b || g.has_edge(a, b)) continue;
        const Edge e = Edge{a, b}.canonical();
        if (taken.insert(pair_key(e)).second) out.push_back(e);
    }
    return out;
}

LpSplit make_lp_split(const Graph& g, const SplitFractions& fractions, std::uint64_t seed) {
    fractions.validate();
    const std::size_t m = g.num_edges();
    if (m == 0) {
        throw ConfigError("make_lp_split: graph has no edges");
    }
    const std::size_t n_val = rounded(fractions.val, m);
    const std::size_t n_test = rounded(fractions.test, m);
    if (n_val + n_test > m || (fractions.train > 0.0 && n_val + n_test == m)) {
        throw ConfigError("make_lp_split: graph with " + std::to_string(m) + " edges is too small for the split");
    }
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges = g.edges();
    fisher_yates(edges, rng);
    LpSplit s;
    s.val.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.test.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val),
                  edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    s.train.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), edges.end());
    for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
    s.val_neg = sample_negatives(g, n_val, rng());
    s.test_neg = sample_negatives(g, n_test, rng(), s.val_neg);
    return s;
}

NodeSplit stratified_split(std::span<const int> labels, const SplitFractions& fractions, std::uint64_t seed) {
    fractions.validate();
    int classes = 0;
    for (int l : labels) {
        if (l < 0) throw DomainError("stratified_split: negative label");
        classes = std::max(classes, l + 1);
    }
    std::vector<std::vector<std::uint32_t>> by_class(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::uint32_t>(i));
    }
    std::mt19937_64 rng(seed);
    NodeSplit s;
    for (auto& members : by_class) {
        fisher_yates(members, rng);
        const std::size_t n_val = rounded(fractions.val, members.size());
        const std::size_t n_test = std::min(rounded(fractions.test, members.size()), members.size() - n_val);
        auto it = members.begin();
        s.val.insert(s.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
        it += static_cast<std::ptrdiff_t>(n_val);
        s.test.insert(s.test.end(), it, it + static_cast<std::ptrdiff_t>(n_test));
        it += static_cast<std::ptrdiff_t>(n_test);
        s.train.insert(s.train.end(), it, members.end());
    }
    for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
    return s;
}

nlohmann::json tree_manifest(const TreeSpec& spec, const Graph& g) {
    return {
        {"kind", "tree"},
        {"depth", spec.depth},
        {"branching", spec.branching},
        {"noise_frac", spec.noise_frac},
        {"feature_noise", spec.feature_noise},
        {"feature_decay", spec.feature_decay},
        {"noise_dims", spec.noise_dims},
        {"seed", spec.seed},
        {"num_nodes", g.num_nodes()},
        {"num_edges", g.num_edges()},
        {"feature_dim", g.features().cols()},
    };
}

nlohmann::json classification_manifest(const ClassificationSpec& spec, std::span<const Graph> graphs) {
    nlohmann::json labels = nlohmann::json::array();
    for (const Graph& g : graphs) labels.push_back(g.graph_label().value_or(-1));
    return {
        {"kind", "gc"},
        {"count_per_class", spec.count_per_class},
        {"min_nodes", spec.min_nodes},
        {"max_nodes", spec.max_nodes},
        {"er_p", spec.er_p},
        {"ba_m", spec.ba_m},
        {"ws_k", spec.ws_k},
        {"ws_beta", spec.ws_beta},
        {"seed", spec.seed},
        {"num_graphs", graphs.size()},
        {"graph_labels", labels},
    };
}

}  // namespace h2h::data
