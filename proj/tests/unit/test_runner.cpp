#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <doctest.h>

#include "h2h/errors.hpp"
#include "h2h/metrics.hpp"
#include "h2h/optimizer.hpp"
#include "h2h/runner.hpp"
#include "oracles.hpp"

using namespace h2h;
using namespace h2h::run;
namespace fs = std::filesystem;

namespace {

TrainConfig tree_config(Task task, std::size_t depth, std::size_t branching) {
    TrainConfig c;
    c.task = task;
    c.dim = 3;
    c.epochs = 50;
    c.optimizer = "adam";
    c.seed = 3;
    c.patience = 1000;
    c.dataset.kind = "tree";
    c.dataset.tree = {.depth = depth, .branching = branching, .noise_frac = 0.0, .noise_dims = 4};
    return c;
}

TrainConfig gc_config(std::size_t per_class) {
    TrainConfig c;
    c.task = Task::GraphClassification;
    c.dim = 5;
    c.epochs = 200;
    c.optimizer = "adam";
    c.seed = 1;
    c.patience = 1000;
    c.dataset.kind = "gc";
    c.dataset.gc.count_per_class = per_class;
    return c;
}

}  // namespace

TEST_CASE("auc examples") {
    const std::vector<double> p1{0.9, 0.8}, n1{0.2, 0.1};
    CHECK(roc_auc(p1, n1) == 1.0);
    const std::vector<double> same{0.4, 0.4, 0.4};
    CHECK(roc_auc(same, same) == 0.5);
    const std::vector<double> p2{0.9, 0.3}, n2{0.5, 0.1};
    CHECK(roc_auc(p2, n2) == 0.75);
    CHECK(oracle::pair_count_auc(p2, n2) == 0.75);
    CHECK_THROWS_AS(roc_auc(p2, {}), ContractViolation);

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coarse(0, 6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> pos(1 + trial % 17), neg(1 + trial % 11);
        for (double& x : pos) x = coarse(rng) / 6.0;
        for (double& x : neg) x = coarse(rng) / 6.0 - 0.1;
        CHECK(roc_auc(pos, neg) == doctest::Approx(oracle::pair_count_auc(pos, neg)).epsilon(1e-14));
    }
}

TEST_CASE("classification metrics") {
    const std::vector<int> truth{0, 0, 1, 1, 1, 2};
    const std::vector<int> pred{0, 1, 1, 1, 0, 2};
    CHECK(accuracy(pred, truth) == doctest::Approx(4.0 / 6.0));
    CHECK(f1_score(pred, truth, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(macro_f1(pred, truth, 3) == doctest::Approx((0.5 + 2.0 / 3.0 + 1.0) / 3.0));
    const std::vector<int> single(5, 0);
    CHECK(macro_f1(single, single, 1) == 1.0);

    const std::vector<int> imbalanced{1, 1, 1, 0, 1, 1, 0, 1};
    const std::vector<int> majority(imbalanced.size(), 1);
    CHECK(accuracy(majority, imbalanced) == 0.75);
}

TEST_CASE("config parsing and validation") {
    const TrainConfig defaults;
    const TrainConfig back = config_from_json(config_to_json(defaults));
    CHECK(config_to_json(back) == config_to_json(defaults));
    CHECK(config_hash(back) == config_hash(defaults));
    CHECK(config_hash(defaults).size() == 16);

    TrainConfig other = defaults;
    other.dim = 8;
    CHECK(config_hash(other) != config_hash(defaults));

    CHECK_THROWS_AS(config_from_json({{"dimm", 3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"dataset", {{"kind", "tree"}, {"depht", 2}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"dim", "three"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"task", "regression"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"dim", 0}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"optimizer", "rmsprop"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"dataset", {{"split", {0.5, 0.1}}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"task", "gc"}, {"dataset", {{"kind", "tree"}}}}), ConfigError);

    try {
        (void)load_config("/nonexistent/c.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/c.json") != std::string::npos);
    }

    TrainConfig nc;
    nc.task = Task::NodeClassification;
    CHECK(nc.split().train == 0.3);
    const TrainConfig nc_back = config_from_json(config_to_json(nc));
    CHECK_FALSE(nc_back.dataset.split.has_value());
}

TEST_CASE("link prediction on a 7-node tree descends") {
    TrainConfig c = tree_config(Task::LinkPrediction, 2, 2);
    c.epochs = 200;
    c.dataset.split = data::SplitFractions{.train = 1.0, .val = 0.0, .test = 0.0};
    const auto t = train(c);
    REQUIRE(t.result.epochs.size() == 201);
    CHECK(t.result.epochs.back().train_loss < t.result.epochs.front().train_loss);
    CHECK(t.result.test.is_null());
    CHECK_THROWS_AS(evaluate(t.model, Split::Test), ContractViolation);
    CHECK_THROWS_AS(evaluate(t.model, Split::Val), ContractViolation);
    const auto metrics = evaluate(t.model, Split::Train);
    CHECK(metrics.at("auc").get<double>() >= 0.0);
    for (std::size_t i = 0; i < t.model.params.size(); ++i) {
        const auto& p = t.model.params[i];
        if (p.kind == ad::ParamKind::Stiefel) CHECK(opt::orthogonality_error(p.value) < 1e-8);
    }
}

TEST_CASE("frozen parameters give identical metrics every epoch") {
    TrainConfig c = tree_config(Task::LinkPrediction, 3, 3);
    c.eta_euclidean = 0.0;
    c.eta_riemannian = 0.0;
    c.epochs = 10;
    const auto t = train(c);
    REQUIRE(t.result.epochs.front().val_metric.has_value());
    for (const auto& e : t.result.epochs) CHECK(e.val_metric == t.result.epochs.front().val_metric);
    CHECK(t.result.best_epoch == 0);
}

TEST_CASE("test metrics come from the best validation snapshot") {
    TrainConfig c = tree_config(Task::LinkPrediction, 3, 3);
    c.epochs = 60;
    c.patience = 5;
    c.eta_euclidean = 0.05;
    const auto t = train(c);
    double best = -1.0;
    for (const auto& e : t.result.epochs) best = std::max(best, *e.val_metric);
    CHECK(t.result.best_score == best);
    CHECK(*t.result.epochs[t.result.best_epoch].val_metric == best);
    CHECK(evaluate(t.model, Split::Test) == t.result.test);
    CHECK(evaluate(t.model, Split::Val).at("auc").get<double>() == best);
    if (t.result.stopped_early) CHECK(t.result.epochs.size() == t.result.best_epoch + c.patience + 1);
}

TEST_CASE("lambda_lp = 0 leaves the pure classification loss") {
    TrainConfig c = tree_config(Task::NodeClassification, 3, 2);
    c.lambda_lp = 0.0;
    c.epochs = 0;
    c.dataset.seed = 17;
    c.dataset.split = data::SplitFractions{.train = 1.0, .val = 0.0, .test = 0.0};
    const auto t = train(c);

    data::TreeSpec spec = c.dataset.tree;
    spec.seed = 17;
    const data::Graph g = data::generate_tree(spec);
    std::vector<std::uint32_t> rows(g.num_nodes());
    std::iota(rows.begin(), rows.end(), 0u);
    ad::Tape tape;
    const auto b = tape.bind(t.model.params);
    const auto emb = model::build_embeddings(tape, b, g, g.features(), t.model.model);
    const double expected = ad::softmax_cross_entropy(model::node_logits(emb, b, t.model.model), g.node_labels(), rows).scalar();
    CHECK(t.result.epochs.front().train_loss == doctest::Approx(expected).epsilon(1e-14));

    c.lambda_lp = 1.0;
    CHECK(train(c).result.epochs.front().train_loss > t.result.epochs.front().train_loss);
}

TEST_CASE("node classification separates depth classes") {
    TrainConfig c = tree_config(Task::NodeClassification, 4, 2);
    c.epochs = 300;
    c.eta_euclidean = 0.02;
    c.dataset.split = data::SplitFractions{.train = 1.0, .val = 0.0, .test = 0.0};
    const auto t = train(c);
    const auto m = evaluate(t.model, Split::Train);
    CHECK(m.at("accuracy").get<double>() == 1.0);
    CHECK(m.contains("f1"));
}

TEST_CASE("graph classification fits 60 graphs") {
    TrainConfig c = gc_config(20);
    c.dataset.split = data::SplitFractions{.train = 1.0, .val = 0.0, .test = 0.0};
    const auto t = train(c);
    CHECK(evaluate(t.model, Split::Train).at("macro_f1").get<double>() >= 0.95);
}

TEST_CASE("shuffling the graph order does not change full-batch training") {
    TrainConfig c = gc_config(4);
    c.epochs = 15;
    c.shuffle = true;
    const auto a = train(c);
    c.shuffle = false;
    const auto b = train(c);
    REQUIRE(a.model.params.size() == b.model.params.size());
    for (std::size_t i = 0; i < a.model.params.size(); ++i) CHECK(a.model.params[i].value == b.model.params[i].value);
    for (std::size_t e = 0; e < a.result.epochs.size(); ++e) {
        CHECK(a.result.epochs[e].train_loss == b.result.epochs[e].train_loss);
    }
}

TEST_CASE("graph classification is independent of the thread count") {
    TrainConfig c = gc_config(4);
    c.epochs = 5;
    const auto one = train(c, {.threads = 1});
    const auto three = train(c, {.threads = 3});
    CHECK(one.result.to_json() == three.result.to_json());
}

TEST_CASE("runs are deterministic and checkpoints round trip") {
    TrainConfig c = tree_config(Task::LinkPrediction, 3, 3);
    c.epochs = 20;
    const auto a = train(c);
    const auto b = train(c);
    CHECK(a.result.to_json().dump() == b.result.to_json().dump());
    CHECK(a.result.to_json().at("stamp").at("config_hash") == config_hash(c));

    const fs::path dir = fs::temp_directory_path() / "h2h_unit_ckpt";
    fs::remove_all(dir);
    save_checkpoint(dir, a.model);
    const TrainedModel loaded = load_checkpoint(dir);
    for (std::size_t i = 0; i < a.model.params.size(); ++i) {
        CHECK(loaded.params[i].name == a.model.params[i].name);
        CHECK(loaded.params[i].value == a.model.params[i].value);
    }
    CHECK(evaluate(loaded, Split::Test) == a.result.test);
    CHECK(embeddings(loaded) == embeddings(a.model));

    const fs::path tsv = dir / "emb.tsv";
    write_embeddings_tsv(tsv, embeddings(loaded));
    std::ifstream in(tsv);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == data::tree_size(3, 3));
    fs::remove_all(dir);
    CHECK_THROWS(load_checkpoint(dir));
}

TEST_CASE("negative labels are rejected") {
    const std::vector<int> labels{0, 1, -1};
    CHECK_THROWS_AS(data::stratified_split(labels, {}, 1), DomainError);
}
