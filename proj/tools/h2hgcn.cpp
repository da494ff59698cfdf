// Command-line front end: generate, train, eval, export-embeddings, selftest.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "h2h/graphdata.hpp"
#include "h2h/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

struct GenerateArgs {
    std::string kind = "tree";
    std::size_t depth = 6;
    std::size_t branching = 3;
    double noise_frac = 0.05;
    double feature_noise = 0.5;
    double feature_decay = 0.5;
    std::size_t noise_dims = 16;
    std::size_t count = 200;
    std::size_t min_nodes = 30;
    std::size_t max_nodes = 60;
    std::uint64_t seed = 0;
    std::string out = "dataset";
};

int run_generate(const GenerateArgs& a) {
    const fs::path dir(a.out);
    if (a.kind == "tree") {
        const h2h::data::TreeSpec spec{a.depth, a.branching, a.noise_frac, a.feature_noise, a.feature_decay, a.noise_dims, a.seed};
        const auto g = h2h::data::generate_tree(spec);
        h2h::data::write_graph(dir, g);
        write_json(dir / "manifest.json", h2h::data::tree_manifest(spec, g));
        std::cerr << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to " << dir << '\n';
    } else if (a.kind == "gc") {
        h2h::data::ClassificationSpec spec;
        spec.count_per_class = a.count;
        spec.min_nodes = a.min_nodes;
        spec.max_nodes = a.max_nodes;
        spec.seed = a.seed;
        const auto graphs = h2h::data::generate_classification_set(spec);
        h2h::data::write_graph_set(dir, graphs);
        write_json(dir / "manifest.json", h2h::data::classification_manifest(spec, graphs));
        std::cerr << "wrote " << graphs.size() << " graphs to " << dir << '\n';
    } else {
        std::cerr << "unknown --kind '" << a.kind << "' (expected tree or gc)\n";
        return 2;
    }
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string out = "result.json";
    std::string checkpoint;
    bool verbose = false;
    std::optional<std::string> task, model, optimizer, activation, aggregation;
    std::optional<std::size_t> dim, layers, epochs, patience, num_centroids;
    std::optional<double> eta_riemannian, eta_euclidean, lambda_lp;
    std::optional<std::uint64_t> seed;
};

h2h::run::TrainConfig resolve_config(const TrainArgs& a) {
    json j = json::object();
    if (!a.config.empty()) {
        j = h2h::run::config_to_json(h2h::run::load_config(a.config));
    }
    auto set = [&](const char* key, const auto& opt) {
        if (opt) j[key] = *opt;
    };
    set("task", a.task);
    set("model", a.model);
    set("optimizer", a.optimizer);
    set("activation", a.activation);
    set("aggregation", a.aggregation);
    set("dim", a.dim);
    set("layers", a.layers);
    set("epochs", a.epochs);
    set("patience", a.patience);
    set("num_centroids", a.num_centroids);
    set("eta_riemannian", a.eta_riemannian);
    set("eta_euclidean", a.eta_euclidean);
    set("lambda_lp", a.lambda_lp);
    set("seed", a.seed);
    if (a.task && *a.task == "gc" && (!j.contains("dataset"))) j["dataset"] = {{"kind", "gc"}};
    return h2h::run::config_from_json(j);
}

int run_train(const TrainArgs& a) {
    const auto config = resolve_config(a);
    h2h::run::RunOptions options;
    if (a.verbose) options.epoch_log = &std::cout;
    const auto trained = h2h::run::train(config, options);
    write_json(a.out, trained.result.to_json());
    if (!a.checkpoint.empty()) h2h::run::save_checkpoint(a.checkpoint, trained.model);
    std::cerr << "test: " << trained.result.test.dump() << "  best epoch " << trained.result.best_epoch
              << "  wall " << trained.result.wall_seconds << " s\n";
    return 0;
}

h2h::run::Split parse_split(const std::string& s) {
    if (s == "train") return h2h::run::Split::Train;
    if (s == "val") return h2h::run::Split::Val;
    if (s == "test") return h2h::run::Split::Test;
    throw CLI::ValidationError("--split", "expected train, val or test");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lorentz-model graph convolutional network"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
    generate->add_option("--kind", gen.kind, "tree or gc")->capture_default_str();
    generate->add_option("--depth", gen.depth, "Tree depth")->capture_default_str();
    generate->add_option("--branching", gen.branching, "Tree branching factor")->capture_default_str();
    generate->add_option("--noise-frac", gen.noise_frac, "Extra edges as a fraction of tree edges")->capture_default_str();
    generate->add_option("--feature-noise", gen.feature_noise, "Feature noise std at the root")->capture_default_str();
    generate->add_option("--feature-decay", gen.feature_decay, "Per-level factor on the noise std")->capture_default_str();
    generate->add_option("--noise-dims", gen.noise_dims, "Noise feature columns")->capture_default_str();
    generate->add_option("--count", gen.count, "Graphs per class (gc)")->capture_default_str();
    generate->add_option("--min-nodes", gen.min_nodes, "Smallest graph (gc)")->capture_default_str();
    generate->add_option("--max-nodes", gen.max_nodes, "Largest graph (gc)")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    generate->add_option("--out", gen.out, "Output directory")->capture_default_str();

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train a model from a JSON config");
    train->add_option("--config", tr.config, "Config file");
    train->add_option("--out", tr.out, "RunResult JSON path")->capture_default_str();
    train->add_option("--checkpoint", tr.checkpoint, "Checkpoint directory");
    train->add_flag("--verbose", tr.verbose, "Per-epoch JSON lines on stdout");
    train->add_option("--task", tr.task, "lp, nc or gc");
    train->add_option("--model", tr.model, "h2h or gcn");
    train->add_option("--optimizer", tr.optimizer, "sgd or adam (unconstrained parameters)");
    train->add_option("--activation", tr.activation, "identity, relu or leaky_relu");
    train->add_option("--aggregation", tr.aggregation, "lorentz_sum or klein");
    train->add_option("--dim", tr.dim, "Embedding dimension");
    train->add_option("--layers", tr.layers, "Number of layers");
    train->add_option("--epochs", tr.epochs, "Maximum epochs");
    train->add_option("--patience", tr.patience, "Early-stopping patience");
    train->add_option("--num-centroids", tr.num_centroids, "Centroid count");
    train->add_option("--eta-riemannian", tr.eta_riemannian, "Stiefel learning rate");
    train->add_option("--eta-euclidean", tr.eta_euclidean, "Learning rate of unconstrained parameters");
    train->add_option("--lambda-lp", tr.lambda_lp, "Link-prediction regularizer weight (nc)");
    train->add_option("--seed", tr.seed, "Run seed");

    std::string eval_checkpoint;
    std::string eval_split = "test";
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint directory")->required();
    eval->add_option("--split", eval_split, "train, val or test")->capture_default_str();

    std::string export_checkpoint;
    std::string export_out = "embeddings.tsv";
    std::size_t export_graph = 0;
    auto* exporter = app.add_subcommand("export-embeddings", "Write final-layer embeddings as TSV");
    exporter->add_option("--checkpoint", export_checkpoint, "Checkpoint directory")->required();
    exporter->add_option("--out", export_out, "TSV path")->capture_default_str();
    exporter->add_option("--graph", export_graph, "Graph index (gc)")->capture_default_str();

    auto* selftest = app.add_subcommand("selftest", "Run the invariant suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return run_generate(gen);
        if (train->parsed()) return run_train(tr);
        if (eval->parsed()) {
            const auto m = h2h::run::load_checkpoint(eval_checkpoint);
            std::cout << h2h::run::evaluate(m, parse_split(eval_split)).dump() << '\n';
            return 0;
        }
        if (exporter->parsed()) {
            const auto m = h2h::run::load_checkpoint(export_checkpoint);
            h2h::run::write_embeddings_tsv(export_out, h2h::run::embeddings(m, export_graph));
            return 0;
        }
        if (selftest->parsed()) return h2h::run::selftest(std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
