#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2h/autodiff.hpp"
#include "h2h/graphdata.hpp"
#include "h2h/model.hpp"

namespace h2h::run {

using nlohmann::json;

enum class Task : std::uint8_t { LinkPrediction, NodeClassification, GraphClassification };

Task parse_task(std::string_view s);
std::string_view to_string(Task t);

struct DatasetSpec {
    /// "tree", "gc" (ER/BA/WS set) or "files" (read from path).
    std::string kind = "tree";
    data::TreeSpec tree;
    data::ClassificationSpec gc;
    std::string path;
    /// Generator seed; derived from the run seed when absent.
    std::optional<std::uint64_t> seed;
    /// Task default when absent: 85/5/10 (lp), 30/20/50 (nc), thirds (gc).
    std::optional<data::SplitFractions> split;
};

struct TrainConfig {
    Task task = Task::LinkPrediction;
    std::string model = "h2h";
    std::size_t dim = 16;
    std::size_t layers = 2;
    std::size_t epochs = 500;
    double eta_riemannian = 0.01;
    double eta_euclidean = 0.01;
    std::string optimizer = "sgd";
    std::uint64_t seed = 0;
    std::size_t num_centroids = 16;
    double r = 2.0;
    double t = 1.0;
    std::string activation = "leaky_relu";
    double slope = 0.01;
    std::string aggregation = "lorentz_sum";
    bool reproject = true;
    double lambda_lp = 1.0;
    std::size_t patience = 100;
    /// GC only: process training graphs in a fresh random order every epoch.
    bool shuffle = true;
    DatasetSpec dataset;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    data::SplitFractions split() const;
};

/// Unknown keys are rejected so typos do not silently fall back to defaults.
TrainConfig config_from_json(const json& j);
json config_to_json(const TrainConfig& c);
/// Reads and parses a config file; ConfigError names the path when it is missing.
TrainConfig load_config(const std::filesystem::path& path);
/// FNV-1a 64 of the canonical config dump, as 16 hex digits.
std::string config_hash(const TrainConfig& c);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    /// Selection metric on the validation split (absent when it is empty).
    std::optional<double> val_metric;
};

struct RunResult {
    TrainConfig config;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    /// Metric used for selection: validation metric, or -train_loss.
    double best_score = 0.0;
    bool stopped_early = false;
    /// Test metrics from the best snapshot; null when the test split is empty.
    json test = nullptr;
    /// Not serialized, so identical runs produce identical JSON.
    double wall_seconds = 0.0;

    json to_json() const;
};

struct RunOptions {
    /// Per-epoch JSON lines go here when set.
    std::ostream* epoch_log = nullptr;
    /// GC worker threads; 0 reads HHGCN_THREADS (default 1).
    unsigned threads = 0;
};

/// Everything a trained model needs to be evaluated again.
struct TrainedModel {
    TrainConfig config;
    model::ModelConfig model;
    ad::ParamStore params;
};

struct Trained {
    RunResult result;
    TrainedModel model;
};

Trained train(const TrainConfig& config, const RunOptions& options = {});
Trained train_lp(const TrainConfig& config, const RunOptions& options = {});
Trained train_nc(const TrainConfig& config, const RunOptions& options = {});
Trained train_gc(const TrainConfig& config, const RunOptions& options = {});

enum class Split : std::uint8_t { Train, Val, Test };

/// Rebuilds the dataset from the stored config and scores the given split.
/// ContractViolation when the split is empty.
json evaluate(const TrainedModel& m, Split split);

/// Final-layer embeddings for the dataset (graph index selects one graph in GC).
ad::Matrix embeddings(const TrainedModel& m, std::size_t graph_index = 0);
void write_embeddings_tsv(const std::filesystem::path& path, const ad::Matrix& emb);

/// Directory with checkpoint.json (config, model, parameter layout) and
/// params.bin (little-endian float64, parameters back to back).
void save_checkpoint(const std::filesystem::path& dir, const TrainedModel& m);
TrainedModel load_checkpoint(const std::filesystem::path& dir);

unsigned worker_threads(unsigned requested);

/// Quick invariant suites; prints one line per suite and returns true if all pass.
bool selftest(std::ostream& out);

}  // namespace h2h::run
