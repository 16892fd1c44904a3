#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydra/dataset.hpp"
#include "hydra/model.hpp"
#include "hydra/vocab.hpp"

namespace hydra {

enum class TaskKind { kClassification, kRegression };

struct TaskSpec {
    TaskKind kind = TaskKind::kClassification;
    int num_classes = 2;          // classification only
    double range_lo = 0.0;        // regression label range
    double range_hi = 1.0;

    std::string metric_name() const;
    int output_dim() const;
    void validate() const;
    void validate_labels(const LabeledData& data) const;  // throws ConfigError
};

struct FinetuneConfig {
    int epochs = 20;
    int batch_size = 8;
    double learning_rate = 3e-4;
    std::uint64_t seed = 42;
    int max_len = 64;

    void validate() const;
};

struct EpochMetric {
    int epoch = 0;
    double train_loss = 0.0;
    double train_metric = 0.0;
    double dev_metric = 0.0;
};

struct EvalReport {
    std::string metric_name;
    double dev_metric = 0.0;
    double train_metric = 0.0;
    int best_epoch = -1;
    std::vector<EpochMetric> history;
    std::vector<double> predictions;  // dev split, selected model
    std::string config_fingerprint;
};

double accuracy_of(const std::vector<double>& predictions, const LabeledData& data);
double pearson_of(const std::vector<double>& predictions, const LabeledData& data);

// Argmax class index (classification) or raw pooled output (regression),
// one entry per example.
std::vector<double> predict(Model& model, const Vocabulary& vocab, const LabeledData& data,
                            const TaskSpec& task, int max_len);

EvalReport evaluate(Model& model, const Vocabulary& vocab, const LabeledData& data,
                    const TaskSpec& task, int max_len = 64);

// Trains every parameter (body, appended layer, task head); keeps the weights
// of the best dev epoch, ties broken toward the earlier epoch. A missing task
// head is created from the run seed.
EvalReport finetune(Model& model, const Vocabulary& vocab, const LabeledData& train,
                    const LabeledData& dev, const TaskSpec& task, const FinetuneConfig& cfg);

struct ComparisonRow {
    std::string variant;
    std::uint64_t seed = 0;
    double dev_metric = 0.0;
    double train_metric = 0.0;
};

struct ComparisonTable {
    std::string metric_name;
    std::vector<ComparisonRow> rows;  // variant-major, seeds in given order
    std::vector<std::pair<std::string, double>> variant_means;
    std::string config_fingerprint;
};

// Fine-tunes three variants per seed: the body alone, the body with a freshly
// initialized appended layer, and the body with the pretrained heads. Under a
// shared seed the last two differ only in the appended W_q/W_k at init.
ComparisonTable compare_baseline(const TransformerBody& body, const HydraHeads& heads,
                                 const Vocabulary& vocab, const LabeledData& train,
                                 const LabeledData& dev, const TaskSpec& task,
                                 const std::vector<std::uint64_t>& seeds,
                                 const FinetuneConfig& cfg);

}  // namespace hydra
