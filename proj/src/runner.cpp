#include "h2h/runner.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "h2h/errors.hpp"
#include "h2h/metrics.hpp"
#include "h2h/optimizer.hpp"

namespace h2h::run {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config parsing helpers

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : j.items()) {
        if (allowed.count(key) == 0) {
            throw ConfigError("unknown " + where + " field '" + key + "'");
        }
    }
}

data::SplitFractions default_split(Task t) {
    switch (t) {
        case Task::LinkPrediction: return {0.85, 0.05, 0.10};
        case Task::NodeClassification: return {0.30, 0.20, 0.50};
        case Task::GraphClassification: return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Seeds and datasets

struct Seeds {
    std::uint64_t data;
    std::uint64_t split;
    std::uint64_t init;
    std::uint64_t loop;
};

Seeds derive_seeds(const TrainConfig& c) {
    std::mt19937_64 master(c.seed);
    Seeds s{master(), master(), master(), master()};
    if (c.dataset.seed) s.data = *c.dataset.seed;
    return s;
}

data::Graph build_node_graph(const TrainConfig& c, std::uint64_t data_seed) {
    const DatasetSpec& d = c.dataset;
    if (d.kind == "tree") {
        data::TreeSpec spec = d.tree;
        spec.seed = data_seed;
        return data::generate_tree(spec);
    }
    if (d.kind == "files") {
        data::Graph g = data::read_graph_dir(d.path);
        if (!g.has_features()) g.set_features(data::structural_features(g));
        return g;
    }
    throw ConfigError("dataset kind '" + d.kind + "' cannot be used for task " + std::string(to_string(c.task)));
}

std::vector<data::Graph> build_graph_set(const TrainConfig& c, std::uint64_t data_seed) {
    const DatasetSpec& d = c.dataset;
    if (d.kind == "gc") {
        data::ClassificationSpec spec = d.gc;
        spec.seed = data_seed;
        return data::generate_classification_set(spec);
    }
    if (d.kind == "files") {
        return data::read_graph_set(d.path);
    }
    throw ConfigError("dataset kind '" + d.kind + "' cannot be used for graph classification");
}

model::ModelConfig model_config(const TrainConfig& c, std::size_t feature_dim, std::size_t num_classes) {
    model::ModelConfig m;
    m.arch = model::parse_architecture(c.model);
    m.feature_dim = feature_dim;
    m.dim = c.dim;
    m.layers = c.layers;
    m.num_centroids = c.num_centroids;
    m.num_classes = num_classes;
    m.activation = model::parse_activation(c.activation);
    m.slope = c.slope;
    m.aggregation = model::parse_aggregation(c.aggregation);
    m.reproject = c.reproject;
    m.r = c.r;
    m.t = c.t;
    m.validate();
    return m;
}

opt::OptState make_opt_state(const TrainConfig& c) {
    opt::OptConfig oc;
    oc.eta_riemannian = c.eta_riemannian;
    oc.eta_euclidean = c.eta_euclidean;
    oc.rule = c.optimizer == "adam" ? opt::EuclideanRule::Adam : opt::EuclideanRule::Sgd;
    return opt::OptState(oc);
}

std::vector<int> argmax_rows(const ad::Matrix& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Task contexts

struct LpContext {
    data::Graph full;
    data::LpSplit split;
    data::Graph train_graph;
    model::ModelConfig mc;
};

LpContext make_lp_context(const TrainConfig& c, const Seeds& s) {
    LpContext ctx;
    ctx.full = build_node_graph(c, s.data);
    ctx.split = data::make_lp_split(ctx.full, c.split(), s.split);
    ctx.train_graph = ctx.full.with_edges(ctx.split.train);
    ctx.mc = model_config(c, static_cast<std::size_t>(ctx.full.features().cols()), 0);
    return ctx;
}

struct NcContext {
    data::Graph graph;
    data::NodeSplit split;
    int num_classes = 0;
    model::ModelConfig mc;
};

NcContext make_nc_context(const TrainConfig& c, const Seeds& s) {
    NcContext ctx;
    ctx.graph = build_node_graph(c, s.data);
    if (!ctx.graph.has_node_labels()) {
        throw ConfigError("node classification needs node labels");
    }
    const auto& labels = ctx.graph.node_labels();
    ctx.num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    ctx.split = data::stratified_split(labels, c.split(), s.split);
    ctx.mc = model_config(c, static_cast<std::size_t>(ctx.graph.features().cols()),
                          static_cast<std::size_t>(ctx.num_classes));
    return ctx;
}

struct GcContext {
    std::vector<data::Graph> graphs;
    std::vector<int> labels;
    data::NodeSplit split;
    int num_classes = 0;
    model::ModelConfig mc;
};

GcContext make_gc_context(const TrainConfig& c, const Seeds& s) {
    GcContext ctx;
    ctx.graphs = build_graph_set(c, s.data);
    if (ctx.graphs.empty()) {
        throw ConfigError("graph classification dataset is empty");
    }
    for (const data::Graph& g : ctx.graphs) {
        if (!g.graph_label()) throw ConfigError("graph classification needs a label on every graph");
        ctx.labels.push_back(*g.graph_label());
        ctx.num_classes = std::max(ctx.num_classes, *g.graph_label() + 1);
    }
    ctx.split = data::stratified_split(ctx.labels, c.split(), s.split);
    ctx.mc = model_config(c, static_cast<std::size_t>(ctx.graphs.front().features().cols()),
                          static_cast<std::size_t>(ctx.num_classes));
    return ctx;
}

const std::vector<std::uint32_t>& pick(const data::NodeSplit& s, Split which) {
    switch (which) {
        case Split::Train: return s.train;
        case Split::Val: return s.val;
        case Split::Test: return s.test;
    }
    return s.test;
}

// ---------------------------------------------------------------------------
// Metrics per task

double lp_auc(const LpContext& ctx, const ad::Matrix& emb, std::span<const data::Edge> pos,
              std::span<const data::Edge> neg) {
    const auto ps = model::score_pairs(emb, pos, ctx.mc);
    const auto ns = model::score_pairs(emb, neg, ctx.mc);
    return roc_auc(ps, ns);
}

json lp_metrics(const LpContext& ctx, const ad::ParamStore& params, Split which, std::uint64_t train_neg_seed) {
    const ad::Matrix emb = model::forward(ctx.train_graph, ctx.full.features(), params, ctx.mc).final();
    if (which == Split::Train) {
        const auto neg = data::sample_negatives(ctx.full, ctx.split.train.size(), train_neg_seed);
        return {{"auc", lp_auc(ctx, emb, ctx.split.train, neg)}};
    }
    const bool val = which == Split::Val;
    return {{"auc", lp_auc(ctx, emb, val ? ctx.split.val : ctx.split.test, val ? ctx.split.val_neg : ctx.split.test_neg)}};
}

json classification_metrics(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes) {
    json out = {{"accuracy", accuracy(predicted, truth)}, {"macro_f1", macro_f1(predicted, truth, num_classes)}};
    if (num_classes == 2) out["f1"] = f1_score(predicted, truth, 1);
    return out;
}

// Binary node classification selects on F1, everything else on accuracy.
double nc_selection_metric(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes) {
    return num_classes == 2 ? f1_score(predicted, truth, 1) : accuracy(predicted, truth);
}

std::pair<std::vector<int>, std::vector<int>> nc_rows(const ad::Matrix& logits, const std::vector<int>& labels,
                                                      std::span<const std::uint32_t> rows) {
    const std::vector<int> all = argmax_rows(logits);
    std::vector<int> predicted;
    std::vector<int> truth;
    for (std::uint32_t r : rows) {
        predicted.push_back(all[r]);
        truth.push_back(labels[r]);
    }
    return {predicted, truth};
}

ad::Matrix nc_forward_logits(const NcContext& ctx, const ad::ParamStore& params) {
    ad::Tape tape;
    const ad::Bindings b = tape.bind(params);
    const ad::Var emb = model::build_embeddings(tape, b, ctx.graph, ctx.graph.features(), ctx.mc);
    return model::node_logits(emb, b, ctx.mc).value();
}

json nc_metrics(const NcContext& ctx, const ad::ParamStore& params, Split which) {
    const auto& rows = pick(ctx.split, which);
    if (rows.empty()) throw ContractViolation("evaluate: empty split");
    const auto [predicted, truth] = nc_rows(nc_forward_logits(ctx, params), ctx.graph.node_labels(), rows);
    return classification_metrics(predicted, truth, ctx.num_classes);
}

int gc_predict(const GcContext& ctx, const ad::ParamStore& params, std::size_t g) {
    ad::Tape tape;
    const ad::Bindings b = tape.bind(params);
    const data::Graph& graph = ctx.graphs[g];
    const ad::Var emb = model::build_embeddings(tape, b, graph, graph.features(), ctx.mc);
    return argmax_rows(model::graph_logits(emb, b, ctx.mc).value()).front();
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is handled
// by exactly one worker; callers write results into per-index slots.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    for (unsigned w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

json gc_metrics(const GcContext& ctx, const ad::ParamStore& params, Split which, unsigned threads) {
    const auto& rows = pick(ctx.split, which);
    if (rows.empty()) throw ContractViolation("evaluate: empty split");
    std::vector<int> predicted(rows.size());
    std::vector<int> truth(rows.size());
    parallel_for(rows.size(), threads, [&](std::size_t k) { predicted[k] = gc_predict(ctx, params, rows[k]); });
    for (std::size_t k = 0; k < rows.size(); ++k) truth[k] = ctx.labels[rows[k]];
    return classification_metrics(predicted, truth, ctx.num_classes);
}

// ---------------------------------------------------------------------------
// Shared training loop

struct EpochOutcome {
    double loss = 0.0;
    std::optional<double> val;
    ad::Grad grad;
};

using EpochFn = std::function<EpochOutcome(const ad::ParamStore&, std::size_t epoch, bool need_grad)>;

void check_manifold(const ad::ParamStore& params, std::size_t epoch) {
    for (const ad::Param& p : params) {
        if (p.kind != ad::ParamKind::Stiefel) continue;
        const double err = opt::orthogonality_error(p.value);
        if (!(err < opt::kStiefelTol)) {
            throw NumericError("parameter '" + p.name + "' left the Stiefel manifold after epoch " +
                               std::to_string(epoch) + " (error " + std::to_string(err) + ")");
        }
    }
}

std::string numeric_diagnostic(const TrainConfig& c, std::size_t epoch, const char* what) {
    std::ostringstream os;
    os << what << " at epoch " << epoch << " (eta_riemannian=" << c.eta_riemannian
       << ", eta_euclidean=" << c.eta_euclidean << ")";
    return os.str();
}

RunResult run_loop(const TrainConfig& c, ad::ParamStore& params, ad::ParamStore& best, const EpochFn& epoch_fn,
                   const RunOptions& options) {
    RunResult result;
    result.config = c;
    opt::OptState state = make_opt_state(c);
    best = params;
    for (std::size_t epoch = 0; epoch <= c.epochs; ++epoch) {
        const bool last = epoch == c.epochs;
        EpochOutcome out = epoch_fn(params, epoch, !last);
        if (!std::isfinite(out.loss)) {
            throw NumericError(numeric_diagnostic(c, epoch, "non-finite training loss"));
        }
        result.epochs.push_back(EpochRecord{epoch, out.loss, out.val});
        if (options.epoch_log != nullptr) {
            *options.epoch_log << json{{"epoch", epoch}, {"train_loss", out.loss}, {"val", out.val ? json(*out.val) : json(nullptr)}}.dump()
                               << '\n';
        }
        const double score = out.val ? *out.val : -out.loss;
        if (epoch == 0 || score > result.best_score) {
            result.best_score = score;
            result.best_epoch = epoch;
            best = params;
        } else if (epoch - result.best_epoch >= c.patience) {
            result.stopped_early = true;
            break;
        }
        if (last) break;
        if (!out.grad.all_finite()) {
            throw NumericError(numeric_diagnostic(c, epoch, "non-finite gradient"));
        }
        opt::apply_step(params, out.grad, state);
        check_manifold(params, epoch);
    }
    return result;
}

template <class Fn>
Trained timed(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    Trained t = fn();
    t.result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
}

json optional_test(bool empty, const std::function<json()>& fn) { return empty ? json(nullptr) : fn(); }

// ---------------------------------------------------------------------------
// Binary helpers for checkpoints

void write_le_double(std::ostream& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int k = 0; k < 8; ++k) {
        bytes[k] = static_cast<char>(bits & 0xffu);
        bits >>= 8;
    }
    out.write(bytes, 8);
}

double read_le_double(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw ParseError("params.bin is truncated");
    std::uint64_t bits = 0;
    for (int k = 7; k >= 0; --k) bits = (bits << 8) | bytes[k];
    return std::bit_cast<double>(bits);
}

json model_to_json(const model::ModelConfig& m) {
    return {
        {"arch", model::to_string(m.arch)},
        {"feature_dim", m.feature_dim},
        {"dim", m.dim},
        {"layers", m.layers},
        {"num_centroids", m.num_centroids},
        {"num_classes", m.num_classes},
        {"activation", model::to_string(m.activation)},
        {"slope", m.slope},
        {"aggregation", model::to_string(m.aggregation)},
        {"reproject", m.reproject},
        {"r", m.r},
        {"t", m.t},
    };
}

model::ModelConfig model_from_json(const json& j) {
    model::ModelConfig m;
    m.arch = model::parse_architecture(j.at("arch").get<std::string>());
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.dim = j.at("dim").get<std::size_t>();
    m.layers = j.at("layers").get<std::size_t>();
    m.num_centroids = j.at("num_centroids").get<std::size_t>();
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.activation = model::parse_activation(j.at("activation").get<std::string>());
    m.slope = j.at("slope").get<double>();
    m.aggregation = model::parse_aggregation(j.at("aggregation").get<std::string>());
    m.reproject = j.at("reproject").get<bool>();
    m.r = j.at("r").get<double>();
    m.t = j.at("t").get<double>();
    m.validate();
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

Task parse_task(std::string_view s) {
    if (s == "lp") return Task::LinkPrediction;
    if (s == "nc") return Task::NodeClassification;
    if (s == "gc") return Task::GraphClassification;
    throw ConfigError("unknown task '" + std::string(s) + "' (expected lp, nc or gc)");
}

std::string_view to_string(Task t) {
    switch (t) {
        case Task::LinkPrediction: return "lp";
        case Task::NodeClassification: return "nc";
        case Task::GraphClassification: return "gc";
    }
    return "unknown";
}

data::SplitFractions TrainConfig::split() const { return dataset.split.value_or(default_split(task)); }

void TrainConfig::validate() const {
    if (dim == 0) throw ConfigError("dim must be >= 1");
    if (layers == 0) throw ConfigError("layers must be >= 1");
    if (!(eta_riemannian >= 0.0) || !(eta_euclidean >= 0.0)) throw ConfigError("learning rates must be >= 0");
    if (!(t > 0.0)) throw ConfigError("t must be > 0");
    if (!(lambda_lp >= 0.0)) throw ConfigError("lambda_lp must be >= 0");
    if (patience == 0) throw ConfigError("patience must be >= 1");
    if (num_centroids == 0) throw ConfigError("num_centroids must be >= 1");
    if (optimizer != "sgd" && optimizer != "adam") {
        throw ConfigError("optimizer must be sgd or adam, got '" + optimizer + "'");
    }
    model::parse_architecture(model);
    model::parse_activation(activation);
    model::parse_aggregation(aggregation);
    if (dataset.kind != "tree" && dataset.kind != "gc" && dataset.kind != "files") {
        throw ConfigError("dataset kind must be tree, gc or files, got '" + dataset.kind + "'");
    }
    if (dataset.kind == "files" && dataset.path.empty()) {
        throw ConfigError("dataset kind 'files' needs a path");
    }
    if ((task == Task::GraphClassification) != (dataset.kind == "gc") && dataset.kind != "files") {
        throw ConfigError("dataset kind '" + dataset.kind + "' cannot be used for task " + std::string(to_string(task)));
    }
    split().validate();
}

TrainConfig config_from_json(const json& j) {
    reject_unknown(j,
                   {"task", "model", "dim", "layers", "epochs", "eta_riemannian", "eta_euclidean", "optimizer", "seed",
                    "num_centroids", "r", "t", "activation", "slope", "aggregation", "reproject", "lambda_lp",
                    "patience", "shuffle", "dataset"},
                   "config");
    TrainConfig c;
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    read_field(j, "model", c.model);
    read_field(j, "dim", c.dim);
    read_field(j, "layers", c.layers);
    read_field(j, "epochs", c.epochs);
    read_field(j, "eta_riemannian", c.eta_riemannian);
    read_field(j, "eta_euclidean", c.eta_euclidean);
    read_field(j, "optimizer", c.optimizer);
    read_field(j, "seed", c.seed);
    read_field(j, "num_centroids", c.num_centroids);
    read_field(j, "r", c.r);
    read_field(j, "t", c.t);
    read_field(j, "activation", c.activation);
    read_field(j, "slope", c.slope);
    read_field(j, "aggregation", c.aggregation);
    read_field(j, "reproject", c.reproject);
    read_field(j, "lambda_lp", c.lambda_lp);
    read_field(j, "patience", c.patience);
    read_field(j, "shuffle", c.shuffle);
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        reject_unknown(d,
                       {"kind", "depth", "branching", "noise_frac", "feature_noise", "feature_decay", "noise_dims", "count_per_class", "min_nodes",
                        "max_nodes", "er_p", "ba_m", "ws_k", "ws_beta", "path", "seed", "split"},
                       "dataset");
        DatasetSpec& ds = c.dataset;
        read_field(d, "kind", ds.kind);
        read_field(d, "depth", ds.tree.depth);
        read_field(d, "branching", ds.tree.branching);
        read_field(d, "noise_frac", ds.tree.noise_frac);
        read_field(d, "feature_noise", ds.tree.feature_noise);
        read_field(d, "feature_decay", ds.tree.feature_decay);
        read_field(d, "noise_dims", ds.tree.noise_dims);
        read_field(d, "count_per_class", ds.gc.count_per_class);
        read_field(d, "min_nodes", ds.gc.min_nodes);
        read_field(d, "max_nodes", ds.gc.max_nodes);
        read_field(d, "er_p", ds.gc.er_p);
        read_field(d, "ba_m", ds.gc.ba_m);
        read_field(d, "ws_k", ds.gc.ws_k);
        read_field(d, "ws_beta", ds.gc.ws_beta);
        read_field(d, "path", ds.path);
        if (d.contains("seed")) ds.seed = d.at("seed").get<std::uint64_t>();
        if (d.contains("split")) {
            const auto f = d.at("split").get<std::vector<double>>();
            if (f.size() != 3) throw ConfigError("dataset split must be [train, val, test]");
            ds.split = data::SplitFractions{f[0], f[1], f[2]};
        }
    } else if (c.task == Task::GraphClassification) {
        c.dataset.kind = "gc";
    }
    c.validate();
    return c;
}

json config_to_json(const TrainConfig& c) {
    json d = {{"kind", c.dataset.kind}};
    if (c.dataset.kind == "tree") {
        d["depth"] = c.dataset.tree.depth;
        d["branching"] = c.dataset.tree.branching;
        d["noise_frac"] = c.dataset.tree.noise_frac;
        d["feature_noise"] = c.dataset.tree.feature_noise;
        d["feature_decay"] = c.dataset.tree.feature_decay;
        d["noise_dims"] = c.dataset.tree.noise_dims;
    } else if (c.dataset.kind == "gc") {
        d["count_per_class"] = c.dataset.gc.count_per_class;
        d["min_nodes"] = c.dataset.gc.min_nodes;
        d["max_nodes"] = c.dataset.gc.max_nodes;
        d["er_p"] = c.dataset.gc.er_p;
        d["ba_m"] = c.dataset.gc.ba_m;
        d["ws_k"] = c.dataset.gc.ws_k;
        d["ws_beta"] = c.dataset.gc.ws_beta;
    } else {
        d["path"] = c.dataset.path;
    }
    if (c.dataset.seed) d["seed"] = *c.dataset.seed;
    if (c.dataset.split) d["split"] = {c.dataset.split->train, c.dataset.split->val, c.dataset.split->test};
    return {
        {"task", to_string(c.task)},
        {"model", c.model},
        {"dim", c.dim},
        {"layers", c.layers},
        {"epochs", c.epochs},
        {"eta_riemannian", c.eta_riemannian},
        {"eta_euclidean", c.eta_euclidean},
        {"optimizer", c.optimizer},
        {"seed", c.seed},
        {"num_centroids", c.num_centroids},
        {"r", c.r},
        {"t", c.t},
        {"activation", c.activation},
        {"slope", c.slope},
        {"aggregation", c.aggregation},
        {"reproject", c.reproject},
        {"lambda_lp", c.lambda_lp},
        {"patience", c.patience},
        {"shuffle", c.shuffle},
        {"dataset", d},
    };
}

TrainConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const TrainConfig& c) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : config_to_json(c).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = digits[h & 0xfu];
        h >>= 4;
    }
    return out;
}

json RunResult::to_json() const {
    json epochs_json = json::array();
    for (const EpochRecord& e : epochs) {
        epochs_json.push_back(
            {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val", e.val_metric ? json(*e.val_metric) : json(nullptr)}});
    }
    return {
        {"task", to_string(config.task)},
        {"config", config_to_json(config)},
        {"stamp", {{"seed", config.seed}, {"config_hash", config_hash(config)}}},
        {"epochs", epochs_json},
        {"best_epoch", best_epoch},
        {"best_score", best_score},
        {"stopped_early", stopped_early},
        {"test", test},
    };
}

unsigned worker_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HHGCN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Training

Trained train_lp(const TrainConfig& c, const RunOptions& options) {
    c.validate();
    return timed([&] {
        const Seeds seeds = derive_seeds(c);
        const LpContext ctx = make_lp_context(c, seeds);
        ad::ParamStore params = model::init_params(ctx.mc, seeds.init);
        ad::ParamStore best;
        std::mt19937_64 rng(seeds.loop);
        const data::Matrix& features = ctx.full.features();

        const EpochFn epoch_fn = [&](const ad::ParamStore& p, std::size_t, bool need_grad) {
            ad::Tape tape;
            const ad::Bindings b = tape.bind(p);
            const ad::Var emb = model::build_embeddings(tape, b, ctx.train_graph, features, ctx.mc);
            const auto negatives = data::sample_negatives(ctx.full, ctx.split.train.size(), rng());
            const ad::Var loss = model::lp_loss(emb, ctx.split.train, negatives, ctx.mc);
            EpochOutcome out;
            out.loss = loss.scalar();
            if (!ctx.split.val.empty()) out.val = lp_auc(ctx, emb.value(), ctx.split.val, ctx.split.val_neg);
            if (need_grad) out.grad = tape.backward(loss);
            return out;
        };
        Trained t;
        t.result = run_loop(c, params, best, epoch_fn, options);
        t.result.test = optional_test(ctx.split.test.empty(), [&] { return lp_metrics(ctx, best, Split::Test, 0); });
        t.model = TrainedModel{c, ctx.mc, std::move(best)};
        return t;
    });
}

Trained train_nc(const TrainConfig& c, const RunOptions& options) {
    c.validate();
    return timed([&] {
        const Seeds seeds = derive_seeds(c);
        const NcContext ctx = make_nc_context(c, seeds);
        if (ctx.split.train.empty()) throw ConfigError("node classification needs training nodes");
        ad::ParamStore params = model::init_params(ctx.mc, seeds.init);
        ad::ParamStore best;
        std::mt19937_64 rng(seeds.loop);
        const auto& labels = ctx.graph.node_labels();
        const auto& edges = ctx.graph.edges();

        const EpochFn epoch_fn = [&](const ad::ParamStore& p, std::size_t, bool need_grad) {
            ad::Tape tape;
            const ad::Bindings b = tape.bind(p);
            const ad::Var emb = model::build_embeddings(tape, b, ctx.graph, ctx.graph.features(), ctx.mc);
            const ad::Var logits = model::node_logits(emb, b, ctx.mc);
            ad::Var loss = ad::softmax_cross_entropy(logits, labels, ctx.split.train);
            if (c.lambda_lp > 0.0 && !edges.empty()) {
                const auto negatives = data::sample_negatives(ctx.graph, edges.size(), rng());
                loss = ad::add(loss, ad::scale(model::lp_loss(emb, edges, negatives, ctx.mc), c.lambda_lp));
            }
            EpochOutcome out;
            out.loss = loss.scalar();
            if (!ctx.split.val.empty()) {
                const auto [predicted, truth] = nc_rows(logits.value(), labels, ctx.split.val);
                out.val = nc_selection_metric(predicted, truth, ctx.num_classes);
            }
            if (need_grad) out.grad = tape.backward(loss);
            return out;
        };
        Trained t;
        t.result = run_loop(c, params, best, epoch_fn, options);
        t.result.test = optional_test(ctx.split.test.empty(), [&] { return nc_metrics(ctx, best, Split::Test); });
        t.model = TrainedModel{c, ctx.mc, std::move(best)};
        return t;
    });
}

Trained train_gc(const TrainConfig& c, const RunOptions& options) {
    c.validate();
    return timed([&] {
        const Seeds seeds = derive_seeds(c);
        const GcContext ctx = make_gc_context(c, seeds);
        if (ctx.split.train.empty()) throw ConfigError("graph classification needs training graphs");
        ad::ParamStore params = model::init_params(ctx.mc, seeds.init);
        ad::ParamStore best;
        std::mt19937_64 rng(seeds.loop);
        const unsigned threads = worker_threads(options.threads);
        const std::size_t n_train = ctx.split.train.size();
        std::vector<std::uint32_t> order = ctx.split.train;

        const EpochFn epoch_fn = [&](const ad::ParamStore& p, std::size_t, bool need_grad) {
            if (c.shuffle) {
                for (std::size_t i = order.size(); i > 1; --i) {
                    std::uniform_int_distribution<std::size_t> pick_index(0, i - 1);
                    std::swap(order[i - 1], order[pick_index(rng)]);
                }
            }
            // Per-graph results land in slots keyed by graph id, so the
            // reduction below is independent of processing order and threads.
            std::vector<double> losses(ctx.graphs.size(), 0.0);
            std::vector<ad::Grad> grads(ctx.graphs.size());
            parallel_for(order.size(), threads, [&](std::size_t k) {
                const std::uint32_t g = order[k];
                const data::Graph& graph = ctx.graphs[g];
                ad::Tape tape;
                const ad::Bindings b = tape.bind(p);
                const ad::Var emb = model::build_embeddings(tape, b, graph, graph.features(), ctx.mc);
                const ad::Var logits = model::graph_logits(emb, b, ctx.mc);
                const int label = ctx.labels[g];
                const std::uint32_t row = 0;
                const ad::Var loss = ad::softmax_cross_entropy(logits, std::span<const int>(&label, 1),
                                                               std::span<const std::uint32_t>(&row, 1));
                losses[g] = loss.scalar();
                if (need_grad) grads[g] = tape.backward(loss);
            });
            EpochOutcome out;
            const double inv = 1.0 / static_cast<double>(n_train);
            if (need_grad) out.grad = ad::Grad::zeros_like(p);
            for (std::uint32_t g : ctx.split.train) {
                out.loss += inv * losses[g];
                if (need_grad) out.grad.accumulate(grads[g], inv);
            }
            if (!ctx.split.val.empty()) {
                out.val = gc_metrics(ctx, p, Split::Val, threads).at("macro_f1").get<double>();
            }
            return out;
        };
        Trained t;
        t.result = run_loop(c, params, best, epoch_fn, options);
        t.result.test =
            optional_test(ctx.split.test.empty(), [&] { return gc_metrics(ctx, best, Split::Test, threads); });
        t.model = TrainedModel{c, ctx.mc, std::move(best)};
        return t;
    });
}

Trained train(const TrainConfig& c, const RunOptions& options) {
    switch (c.task) {
        case Task::LinkPrediction: return train_lp(c, options);
        case Task::NodeClassification: return train_nc(c, options);
        case Task::GraphClassification: return train_gc(c, options);
    }
    throw ConfigError("unknown task");
}

// ---------------------------------------------------------------------------
// Evaluation and export

json evaluate(const TrainedModel& m, Split split) {
    const Seeds seeds = derive_seeds(m.config);
    switch (m.config.task) {
        case Task::LinkPrediction: {
            LpContext ctx = make_lp_context(m.config, seeds);
            ctx.mc = m.model;
            const bool empty = split == Split::Train ? ctx.split.train.empty()
                               : split == Split::Val ? ctx.split.val.empty()
                                                     : ctx.split.test.empty();
            if (empty) throw ContractViolation("evaluate: empty split");
            return lp_metrics(ctx, m.params, split, seeds.loop);
        }
        case Task::NodeClassification: {
            NcContext ctx = make_nc_context(m.config, seeds);
            ctx.mc = m.model;
            return nc_metrics(ctx, m.params, split);
        }
        case Task::GraphClassification: {
            GcContext ctx = make_gc_context(m.config, seeds);
            ctx.mc = m.model;
            return gc_metrics(ctx, m.params, split, worker_threads(0));
        }
    }
    throw ConfigError("unknown task");
}

ad::Matrix embeddings(const TrainedModel& m, std::size_t graph_index) {
    const Seeds seeds = derive_seeds(m.config);
    switch (m.config.task) {
        case Task::LinkPrediction: {
            const LpContext ctx = make_lp_context(m.config, seeds);
            return model::forward(ctx.train_graph, ctx.full.features(), m.params, m.model).final();
        }
        case Task::NodeClassification: {
            const NcContext ctx = make_nc_context(m.config, seeds);
            return model::forward(ctx.graph, ctx.graph.features(), m.params, m.model).final();
        }
        case Task::GraphClassification: {
            const GcContext ctx = make_gc_context(m.config, seeds);
            if (graph_index >= ctx.graphs.size()) {
                throw ConfigError("graph index " + std::to_string(graph_index) + " out of range (" +
                                  std::to_string(ctx.graphs.size()) + " graphs)");
            }
            const data::Graph& g = ctx.graphs[graph_index];
            return model::forward(g, g.features(), m.params, m.model).final();
        }
    }
    throw ConfigError("unknown task");
}

void write_embeddings_tsv(const fs::path& path, const ad::Matrix& emb) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out.precision(17);
    for (Eigen::Index i = 0; i < emb.rows(); ++i) {
        out << i;
        for (Eigen::Index k = 0; k < emb.cols(); ++k) out << '\t' << emb(i, k);
        out << '\n';
    }
}

void save_checkpoint(const fs::path& dir, const TrainedModel& m) {
    fs::create_directories(dir);
    json layout = json::array();
    std::size_t offset = 0;
    std::ofstream bin(dir / "params.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw ParseError("cannot write '" + (dir / "params.bin").string() + "'");
    for (const ad::Param& p : m.params) {
        layout.push_back({{"name", p.name},
                          {"kind", p.kind == ad::ParamKind::Stiefel ? "stiefel" : "euclidean"},
                          {"rows", p.value.rows()},
                          {"cols", p.value.cols()},
                          {"offset", offset}});
        for (Eigen::Index k = 0; k < p.value.size(); ++k) write_le_double(bin, p.value.data()[k]);
        offset += static_cast<std::size_t>(p.value.size());
    }
    const json manifest = {{"format", "float64-le row-major"},
                           {"config", config_to_json(m.config)},
                           {"model", model_to_json(m.model)},
                           {"params", layout}};
    std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + (dir / "checkpoint.json").string() + "'");
    out << manifest.dump(2) << '\n';
}

TrainedModel load_checkpoint(const fs::path& dir) {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) throw ParseError("no checkpoint.json in '" + dir.string() + "'");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::parse_error& e) {
        throw ParseError("checkpoint.json: " + std::string(e.what()));
    }
    TrainedModel m;
    try {
        m.config = config_from_json(manifest.at("config"));
        m.model = model_from_json(manifest.at("model"));
    } catch (const json::exception& e) {
        throw ParseError("checkpoint.json: " + std::string(e.what()));
    }
    std::ifstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw ParseError("no params.bin in '" + dir.string() + "'");
    for (const json& p : manifest.at("params")) {
        const auto rows = p.at("rows").get<Eigen::Index>();
        const auto cols = p.at("cols").get<Eigen::Index>();
        ad::Matrix value(rows, cols);
        bin.seekg(static_cast<std::streamoff>(p.at("offset").get<std::size_t>() * 8));
        for (Eigen::Index k = 0; k < value.size(); ++k) value.data()[k] = read_le_double(bin);
        const auto kind = p.at("kind").get<std::string>() == "stiefel" ? ad::ParamKind::Stiefel : ad::ParamKind::Euclidean;
        m.params.add(p.at("name").get<std::string>(), std::move(value), kind);
    }
    return m;
}

}  // namespace h2h::run
