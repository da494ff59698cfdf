#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "h2h/errors.hpp"
#include "h2h/geometry.hpp"
#include "h2h/graphdata.hpp"
#include "h2h/metrics.hpp"
#include "h2h/model.hpp"
#include "h2h/optimizer.hpp"
#include "h2h/runner.hpp"

namespace h2h::run {
namespace {

geo::LorentzPoint random_point(std::mt19937_64& rng, std::size_t n, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    geo::Vector v = geo::Vector::Zero(static_cast<Eigen::Index>(n) + 1);
    for (std::size_t k = 1; k <= n; ++k) v[static_cast<Eigen::Index>(k)] = normal(rng);
    return geo::exp_map(geo::LorentzPoint::origin(n), v);
}

bool manifold_closure() {
    const data::Graph g = data::prefix_subgraph(data::generate_tree({.depth = 5, .branching = 3, .seed = 7}), 200);
    model::ModelConfig mc;
    mc.feature_dim = static_cast<std::size_t>(g.features().cols());
    mc.reproject = false;
    const auto params = model::init_params(mc, 3);
    const auto states = model::forward(g, g.features(), params, mc);
    for (const auto& layer : states.layers) {
        for (Eigen::Index i = 0; i < layer.rows(); ++i) {
            const geo::Vector x = layer.row(i).transpose();
            if (std::abs(geo::lorentz_inner(x, x) + 1.0) >= 1e-6 || x[0] <= 0.0) return false;
        }
    }
    return true;
}

bool isometry_and_round_trips() {
    std::mt19937_64 rng(11);
    const std::size_t n = 5;
    const ad::Matrix w = opt::orthogonal_init(n, n, 5).matrix();
    std::vector<geo::LorentzPoint> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(random_point(rng, n, 1.0));
    for (const auto& a : pts) {
        const double scale = a.coords().cwiseAbs().maxCoeff();
        if ((geo::poincare_to_lorentz(geo::lorentz_to_poincare(a)).coords() - a.coords()).cwiseAbs().maxCoeff() >
            1e-12 * scale)
            return false;
        if ((geo::klein_to_lorentz(geo::lorentz_to_klein(a)).coords() - a.coords()).cwiseAbs().maxCoeff() >
            1e-12 * scale)
            return false;
        for (const auto& b : pts) {
            const double before = geo::lorentz_distance(a, b);
            const double after = geo::lorentz_distance(model::lorentz_linear(a, w), model::lorentz_linear(b, w));
            if (std::abs(before - after) > 1e-9) return false;
        }
    }
    return true;
}

bool midpoint_oracle() {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> size(1, 50);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<geo::LorentzPoint> pts;
        std::vector<geo::KleinPoint> ks;
        for (int k = size(rng); k > 0; --k) {
            pts.push_back(random_point(rng, 3, 0.8));
            ks.push_back(geo::lorentz_to_klein(pts.back()));
        }
        const auto klein = geo::klein_to_lorentz(geo::einstein_midpoint(ks));
        if ((klein.coords() - geo::lorentz_midpoint(pts).coords()).cwiseAbs().maxCoeff() > 1e-10) return false;
    }
    return true;
}

bool gradient_check() {
    const data::Graph g =
        data::prefix_subgraph(data::generate_tree({.depth = 3, .branching = 2, .noise_frac = 0.3, .seed = 2}), 10);
    model::ModelConfig mc;
    mc.feature_dim = static_cast<std::size_t>(g.features().cols());
    mc.dim = 4;
    mc.num_classes = 2;
    mc.num_centroids = 3;
    const auto params = model::init_params(mc, 9);
    const auto negatives = data::sample_negatives(g, g.num_edges(), 4);
    std::vector<std::uint32_t> rows(g.num_nodes());
    for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto report = ad::grad_check(
        [&](ad::Tape& tape, const ad::Bindings& b) {
            const ad::Var emb = model::build_embeddings(tape, b, g, g.features(), mc);
            const ad::Var ce = ad::softmax_cross_entropy(model::node_logits(emb, b, mc), g.node_labels(), rows);
            return ad::add(ce, model::lp_loss(emb, g.edges(), negatives, mc));
        },
        params);
    return report.max_rel_error < 1e-4;
}

bool stiefel_drift() {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal(0.0, 1.0);
    opt::StiefelMatrix w = opt::orthogonal_init(6, 6, 1);
    for (int step = 0; step < 10000; ++step) {
        ad::Matrix g(6, 6);
        for (Eigen::Index k = 0; k < g.size(); ++k) g.data()[k] = normal(rng);
        const ad::Matrix p = opt::tangent_project(w.matrix(), g);
        const ad::Matrix tangency = w.matrix().transpose() * p + p.transpose() * w.matrix();
        if (tangency.cwiseAbs().maxCoeff() > 1e-10) return false;
        w = opt::riemannian_step(w, g, 0.05);
    }
    return opt::orthogonality_error(w.matrix()) < 1e-8;
}

bool metric_examples() {
    const std::vector<double> p1{0.9, 0.8}, n1{0.2, 0.1}, same{0.5, 0.5}, p3{0.9, 0.3}, n3{0.5, 0.1};
    return roc_auc(p1, n1) == 1.0 && roc_auc(same, same) == 0.5 && roc_auc(p3, n3) == 0.75 &&
           std::abs(model::fermi_dirac_sq(2.0, 2.0, 1.0) - 0.5) <= 1e-15;
}

bool split_leakage() {
    const data::Graph g = data::generate_tree({.depth = 4, .branching = 3, .seed = 21});
    const auto s = data::make_lp_split(g, {}, 5);
    std::set<data::Edge> train(s.train.begin(), s.train.end());
    for (const auto* held : {&s.val, &s.test}) {
        for (const data::Edge& e : *held) {
            if (train.count(e)) return false;
        }
    }
    for (const auto* neg : {&s.val_neg, &s.test_neg}) {
        for (const data::Edge& e : *neg) {
            if (g.has_edge(e.u, e.v)) return false;
        }
    }
    return true;
}

}  // namespace

bool selftest(std::ostream& out) {
    const std::vector<std::pair<const char*, std::function<bool()>>> suites = {
        {"manifold_closure", manifold_closure}, {"isometry_and_round_trips", isometry_and_round_trips},
        {"midpoint_oracle", midpoint_oracle},   {"gradient_check", gradient_check},
        {"stiefel_drift", stiefel_drift},       {"metric_examples", metric_examples},
        {"lp_split_leakage", split_leakage},
    };
    bool all = true;
    for (const auto& [name, fn] : suites) {
        bool ok = false;
        std::string detail;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            detail = std::string(" (") + e.what() + ")";
        }
        out << (ok ? "PASS " : "FAIL ") << name << detail << '\n';
        all = all && ok;
    }
    return all;
}

}  // namespace h2h::run
