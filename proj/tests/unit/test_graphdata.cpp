#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include <doctest.h>

#include "h2h/errors.hpp"
#include "h2h/graphdata.hpp"
#include "oracles.hpp"

using namespace h2h;
using namespace h2h::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("h2h_unit_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::vector<std::vector<std::size_t>> adjacency(const Graph& g) {
    std::vector<std::vector<std::size_t>> adj(g.num_nodes());
    for (const Edge& e : g.edges()) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    return adj;
}

bool acyclic_and_connected(const Graph& g) {
    const auto d = oracle::hop_distances(adjacency(g));
    for (int x : d[0]) {
        if (x < 0) return false;
    }
    return g.num_edges() + 1 == g.num_nodes();
}

}  // namespace

TEST_CASE("load_graph examples") {
    TempDir dir("load");
    write_text(dir.path / "path.txt", "0 1\n1 2\n");
    const Graph g = load_graph(dir.path / "path.txt");
    CHECK(g.num_nodes() == 3);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 2);
    CHECK(g.degree(2) == 1);

    write_text(dir.path / "dup.txt", "# comment\n0 1\n1 0\n0 1\n2 3\n");
    const Graph d = load_graph(dir.path / "dup.txt");
    CHECK(d.num_edges() == 2);

    write_text(dir.path / "bad.txt", "0 1\n1 x\n");
    try {
        (void)load_graph(dir.path / "bad.txt");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    write_text(dir.path / "labels.txt", "0 1\n1 0\n");
    CHECK_THROWS_AS(load_graph(dir.path / "path.txt", std::nullopt, dir.path / "labels.txt"), DomainError);
    CHECK_THROWS_AS(load_graph(dir.path / "missing.txt"), ParseError);
}

TEST_CASE("graph round trip through the text formats") {
    TempDir dir("roundtrip");
    const Graph g = generate_tree({.depth = 3, .branching = 3, .noise_frac = 0.2, .seed = 5});
    write_graph(dir.path / "g", g);
    const Graph back = read_graph_dir(dir.path / "g");
    CHECK(back.edges() == g.edges());
    CHECK(back.node_labels() == g.node_labels());
    CHECK((back.features() - g.features()).cwiseAbs().maxCoeff() == 0.0);
    write_graph(dir.path / "again", back);
    std::ifstream a(dir.path / "g" / "edges.txt"), b(dir.path / "again" / "edges.txt");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    ClassificationSpec spec;
    spec.count_per_class = 2;
    spec.min_nodes = 8;
    spec.max_nodes = 12;
    const auto set = generate_classification_set(spec);
    write_graph_set(dir.path / "set", set);
    const auto set_back = read_graph_set(dir.path / "set");
    REQUIRE(set_back.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(set_back[i].edges() == set[i].edges());
        CHECK(set_back[i].graph_label() == set[i].graph_label());
    }
}

TEST_CASE("CSR adjacency agrees with the edge list") {
    for (const Graph& g : {generate_tree({.depth = 6, .branching = 3, .seed = 1}), erdos_renyi(300, 0.05, 2),
                           watts_strogatz(200, 6, 0.3, 3)}) {
        std::set<std::pair<NodeId, NodeId>> from_csr;
        for (NodeId i = 0; i < g.num_nodes(); ++i) {
            const auto nb = g.neighbors(i);
            CHECK(std::is_sorted(nb.begin(), nb.end()));
            for (NodeId j : nb) from_csr.insert({std::min(i, j), std::max(i, j)});
        }
        std::set<std::pair<NodeId, NodeId>> from_list;
        for (const Edge& e : g.edges()) from_list.insert({e.u, e.v});
        CHECK(from_csr == from_list);
        CHECK(g.indices().size() == 2 * g.num_edges());
    }
}

TEST_CASE("lp split sizes, determinism and leakage") {
    const Graph g = erdos_renyi(40, 0.13, 4);
    const SplitFractions f;
    const auto s = make_lp_split(g, f, 9);
    const double m = static_cast<double>(g.num_edges());
    CHECK(std::abs(static_cast<double>(s.val.size()) - 0.05 * m) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.10 * m) <= 1.0);
    CHECK(s.train.size() + s.val.size() + s.test.size() == g.num_edges());
    CHECK(s.val_neg.size() == s.val.size());
    CHECK(s.test_neg.size() == s.test.size());

    const Graph train_graph = g.with_edges(s.train);
    for (const auto* held : {&s.val, &s.test}) {
        for (const Edge& e : *held) {
            CHECK_FALSE(train_graph.has_edge(e.u, e.v));
            CHECK(g.has_edge(e.u, e.v));
        }
    }
    std::set<Edge> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == g.num_edges());
    for (const auto* neg : {&s.val_neg, &s.test_neg}) {
        for (const Edge& e : *neg) CHECK_FALSE(g.has_edge(e.u, e.v));
    }

    const auto again = make_lp_split(g, f, 9);
    CHECK(again.train == s.train);
    CHECK(again.test_neg == s.test_neg);

    const auto all_train = make_lp_split(g, {.train = 1.0, .val = 0.0, .test = 0.0}, 1);
    CHECK(all_train.train.size() == g.num_edges());
    CHECK(all_train.val.empty());
    CHECK(all_train.test.empty());

    CHECK_THROWS_AS(make_lp_split(Graph(3, std::span<const Edge>{}), f, 1), ConfigError);
    CHECK_THROWS_AS((SplitFractions{.train = 0.5, .val = 0.1, .test = 0.1}.validate()), ConfigError);
}

TEST_CASE("negative sampling") {
    std::vector<Edge> edges;
    for (NodeId i = 0; i < 6; ++i)
        for (NodeId j = i + 1; j < 6; ++j)
            if (!(i == 2 && j == 4)) edges.push_back({i, j});
    const Graph almost(6, edges);
    const auto only = sample_negatives(almost, 1, 3);
    REQUIRE(only.size() == 1);
    CHECK(only[0] == Edge{2, 4});
    CHECK_THROWS_AS(sample_negatives(almost, 2, 3), NumericError);

    const Graph g = erdos_renyi(30, 0.2, 6);
    const std::vector<Edge> exclude{{0, 1}, {2, 3}, {5, 9}};
    for (const Edge& e : sample_negatives(g, 200, 7, exclude)) {
        CHECK(e.u < e.v);
        CHECK_FALSE(g.has_edge(e.u, e.v));
        CHECK(std::find(exclude.begin(), exclude.end(), e) == exclude.end());
    }
    CHECK(sample_negatives(g, 50, 8) == sample_negatives(g, 50, 8));
}

TEST_CASE("negative sampling is uniform over non-edges") {
    const Graph g = erdos_renyi(10, 0.3, 11);
    const std::size_t non_edges = 45 - g.num_edges();
    std::map<Edge, std::size_t> counts;
    const std::size_t draws = 100000;
    std::size_t total = 0;
    for (std::uint64_t batch = 0; total < draws; ++batch) {
        for (const Edge& e : sample_negatives(g, 1, 1000 + batch)) {
            ++counts[e];
            ++total;
        }
    }
    CHECK(counts.size() == non_edges);
    const double expected = static_cast<double>(draws) / static_cast<double>(non_edges);
    double chi2 = 0.0;
    for (const auto& [e, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    chi2 += static_cast<double>(non_edges - counts.size()) * expected;
    CHECK(oracle::chi_square_sf(chi2, static_cast<double>(non_edges - 1)) > 0.001);
}

TEST_CASE("within-call negatives are distinct and uniform") {
    const Graph g = erdos_renyi(10, 0.3, 12);
    const std::size_t non_edges = 45 - g.num_edges();
    std::map<Edge, std::size_t> counts;
    const std::size_t k = 5;
    const std::size_t calls = 20000;
    for (std::uint64_t s = 0; s < calls; ++s) {
        const auto batch = sample_negatives(g, k, s);
        CHECK(std::set<Edge>(batch.begin(), batch.end()).size() == k);
        for (const Edge& e : batch) ++counts[e];
    }
    const double expected = static_cast<double>(k * calls) / static_cast<double>(non_edges);
    double chi2 = 0.0;
    for (const auto& [e, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(oracle::chi_square_sf(chi2, static_cast<double>(non_edges - 1)) > 0.001);
}

TEST_CASE("tree generator") {
    const Graph small = generate_tree({.depth = 2, .branching = 2, .noise_frac = 0.0});
    CHECK(small.num_nodes() == 7);
    CHECK(small.num_edges() == 6);
    CHECK(tree_size(6, 3) == 1093);

    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Graph t = generate_tree({.depth = 3, .branching = 3, .noise_frac = 0.0, .seed = seed});
        CHECK(acyclic_and_connected(t));
        CHECK(oracle::four_point_delta(oracle::hop_distances(adjacency(t))) == 0.0);
    }
    const Graph noisy = generate_tree({.depth = 3, .branching = 3, .noise_frac = 0.3, .seed = 1});
    CHECK(noisy.num_edges() == 39 + 12);
    CHECK(oracle::four_point_delta(oracle::hop_distances(adjacency(noisy))) > 0.0);

    const TreeSpec spec{.depth = 4, .branching = 2, .noise_dims = 3, .seed = 4};
    const Graph t = generate_tree(spec);
    const auto depths = tree_depths(4, 2);
    CHECK(t.features().cols() == 5 + 3);
    for (NodeId i = 0; i < t.num_nodes(); ++i) {
        for (std::size_t k = 0; k <= 4; ++k) CHECK(t.features()(i, static_cast<Eigen::Index>(k)) == (k == depths[i] ? 1.0 : 0.0));
        CHECK(t.node_labels()[i] == (depths[i] > 2 ? 1 : 0));
    }
    CHECK((t.features().rightCols(3).row(0).array() != 0.0).all());

    const Graph a = generate_tree({.seed = 9});
    const Graph b = generate_tree({.seed = 9});
    CHECK(a.edges() == b.edges());
    CHECK(a.features() == b.features());
    CHECK_FALSE(generate_tree({.seed = 10}).features() == a.features());
}

TEST_CASE("tree noise features decay with depth") {
    const TreeSpec spec{.depth = 5, .branching = 3, .noise_frac = 0.0, .feature_noise = 1.0, .feature_decay = 0.5,
                        .noise_dims = 64, .seed = 2};
    const Graph t = generate_tree(spec);
    const auto depths = tree_depths(5, 3);
    for (std::size_t k = 1; k <= 5; ++k) {
        double sq = 0.0;
        std::size_t count = 0;
        for (const Edge& e : t.edges()) {
            if (depths[e.v] != k) continue;
            sq += (t.features().row(e.v).tail(64) - t.features().row(e.u).tail(64)).squaredNorm();
            count += 64;
        }
        const double expected = std::pow(0.5, static_cast<double>(k));
        CHECK(std::sqrt(sq / static_cast<double>(count)) == doctest::Approx(expected).epsilon(0.1));
    }
    CHECK_THROWS_AS(generate_tree({.feature_decay = -0.1}), ConfigError);
}

TEST_CASE("prefix_subgraph") {
    const Graph t = generate_tree({.depth = 5, .branching = 3, .noise_frac = 0.0, .seed = 7});
    const Graph p = prefix_subgraph(t, 200);
    CHECK(p.num_nodes() == 200);
    CHECK(acyclic_and_connected(p));
    CHECK(p.features() == t.features().topRows(200));
    CHECK(std::equal(p.node_labels().begin(), p.node_labels().end(), t.node_labels().begin()));
    for (const Edge& e : p.edges()) CHECK(t.has_edge(e.u, e.v));
    CHECK_THROWS_AS(prefix_subgraph(t, t.num_nodes() + 1), DomainError);
}

TEST_CASE("random graph generators") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Graph ba = barabasi_albert(50, 1, seed);
        CHECK(ba.num_edges() == 49);
        CHECK(acyclic_and_connected(ba));
        const Graph ws = watts_strogatz(30, 4, 0.0, seed);
        for (NodeId i = 0; i < 30; ++i) CHECK(ws.degree(i) == 4);
    }
    const std::size_t n = 40;
    const double p = 0.1;
    const double pairs = n * (n - 1) / 2.0;
    const double mean = p * pairs;
    const double sigma = std::sqrt(pairs * p * (1 - p));
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const double m = static_cast<double>(erdos_renyi(n, p, seed).num_edges());
        CHECK(std::abs(m - mean) <= 4.0 * sigma);
        total += m;
    }
    CHECK(std::abs(total / 100.0 - mean) <= 4.0 * sigma / 10.0);
    CHECK(erdos_renyi(n, p, 3).edges() == erdos_renyi(n, p, 3).edges());
}

TEST_CASE("structural features and the classification set") {
    const std::vector<Edge> tri{{0, 1}, {1, 2}, {0, 2}, {2, 3}};
    const Matrix f = structural_features(Graph(4, tri));
    CHECK(f(2, 0) == 1.0);
    CHECK(f(3, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(f(0, 1) == 1.0);
    CHECK(f(2, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(f(3, 1) == 0.0);

    ClassificationSpec spec;
    spec.count_per_class = 5;
    spec.seed = 3;
    const auto set = generate_classification_set(spec);
    REQUIRE(set.size() == 15);
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(set[i].graph_label() == static_cast<int>(i % 3));
        CHECK(set[i].num_nodes() >= 30);
        CHECK(set[i].num_nodes() <= 60);
        CHECK(set[i].features().cols() == 2);
    }
    const auto again = generate_classification_set(spec);
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(again[i].edges() == set[i].edges());
}

TEST_CASE("stratified split") {
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i < 30 ? 0 : 1);
    const auto s = stratified_split(labels, {.train = 0.3, .val = 0.2, .test = 0.5}, 4);
    CHECK(s.train.size() + s.val.size() + s.test.size() == 100);
    std::set<std::uint32_t> seen(s.train.begin(), s.train.end());
    seen.insert(s.val.begin(), s.val.end());
    seen.insert(s.test.begin(), s.test.end());
    CHECK(seen.size() == 100);
    const auto zeros = std::count_if(s.train.begin(), s.train.end(), [&](auto i) { return labels[i] == 0; });
    CHECK(zeros == 9);
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));
}
