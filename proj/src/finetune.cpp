#include "hydra/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hydra/adam.hpp"
#include "hydra/errors.hpp"
#include "hydra/util.hpp"

namespace hydra {

namespace {

struct PreparedExample {
    std::vector<int> ids;
    int class_id = -1;
    double value = 0.0;
};

std::vector<PreparedExample> prepare(const LabeledData& data, const Vocabulary& vocab,
                                     int max_len) {
    std::vector<PreparedExample> out;
    out.reserve(data.size());
    for (const LabeledExample& ex : data.examples) {
        PreparedExample p;
        p.ids = tokenize(ex.text, vocab, max_len, LengthPolicy::kTruncate);
        p.class_id = ex.class_id;
        p.value = ex.value;
        out.push_back(std::move(p));
    }
    return out;
}

Value example_loss(Tape& tape, Model& model, const PreparedExample& ex, const TaskSpec& task) {
    Value h = model_encode(tape, model, ex.ids, static_cast<int>(ex.ids.size()));
    Value logits = pool_and_project(tape, model, h);
    if (task.kind == TaskKind::kClassification) {
        return tape.cross_entropy(logits, {ex.class_id});
    }
    Tensor target({1, 1});
    target.data[0] = ex.value;
    return tape.mse_masked(logits, target, Tensor::full({1, 1}, 1.0));
}

double metric_of(const TaskSpec& task, const std::vector<double>& predictions,
                 const LabeledData& data) {
    return task.kind == TaskKind::kClassification ? accuracy_of(predictions, data)
                                                  : pearson_of(predictions, data);
}

std::vector<Tensor> snapshot_values(const std::vector<Parameter*>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Parameter* p : params) out.push_back(p->value);
    return out;
}

void restore_values(const std::vector<Parameter*>& params, const std::vector<Tensor>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

std::string TaskSpec::metric_name() const {
    return kind == TaskKind::kClassification ? "accuracy" : "pearson";
}

int TaskSpec::output_dim() const { return kind == TaskKind::kClassification ? num_classes : 1; }

void TaskSpec::validate() const {
    if (kind == TaskKind::kClassification && num_classes < 2) {
        throw ConfigError("task: classification needs >= 2 classes, got " +
                          std::to_string(num_classes));
    }
    if (kind == TaskKind::kRegression && !(range_lo < range_hi)) {
        throw ConfigError("task: regression range is empty");
    }
}

void TaskSpec::validate_labels(const LabeledData& data) const {
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        const LabeledExample& ex = data.examples[i];
        if (kind == TaskKind::kClassification) {
            if (ex.class_id < 0 || ex.class_id >= num_classes) {
                throw ConfigError("example " + std::to_string(i + 1) + ": label \"" +
                                  ex.raw_label + "\" maps to class " +
                                  std::to_string(ex.class_id) + ", outside [0, " +
                                  std::to_string(num_classes) + ")");
            }
        } else {
            if (!std::isfinite(ex.value) || ex.value < range_lo || ex.value > range_hi) {
                throw ConfigError("example " + std::to_string(i + 1) + ": label \"" +
                                  ex.raw_label + "\" is not a real in [" +
                                  std::to_string(range_lo) + ", " + std::to_string(range_hi) +
                                  "]");
            }
        }
    }
}

void FinetuneConfig::validate() const {
    if (epochs < 1) throw ConfigError("finetune config: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("finetune config: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("finetune config: learning rate must be > 0");
    if (max_len < 2) throw ConfigError("finetune config: max_len must be >= 2");
}

double accuracy_of(const std::vector<double>& predictions, const LabeledData& data) {
    if (data.empty()) throw DataError("accuracy: empty example list");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        if (static_cast<int>(predictions[i]) == data.examples[i].class_id) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

double pearson_of(const std::vector<double>& predictions, const LabeledData& data) {
    if (data.empty()) throw DataError("pearson: empty example list");
    const std::size_t n = data.size();
    double mean_p = 0.0, mean_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_p += predictions[i];
        mean_g += data.examples[i].value;
    }
    mean_p /= static_cast<double>(n);
    mean_g /= static_cast<double>(n);
    double cov = 0.0, var_p = 0.0, var_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dp = predictions[i] - mean_p;
        const double dg = data.examples[i].value - mean_g;
        cov += dp * dg;
        var_p += dp * dp;
        var_g += dg * dg;
    }
    // A constant series has no defined correlation; report 0 rather than NaN.
    if (var_p == 0.0 || var_g == 0.0) return 0.0;
    return cov / std::sqrt(var_p * var_g);
}

std::vector<double> predict(Model& model, const Vocabulary& vocab, const LabeledData& data,
                            const TaskSpec& task, int max_len) {
    std::vector<double> out;
    out.reserve(data.size());
    for (const LabeledExample& ex : data.examples) {
        const std::vector<int> ids = tokenize(ex.text, vocab, max_len, LengthPolicy::kTruncate);
        Tape tape(false);
        Value h = model_encode(tape, model, ids, static_cast<int>(ids.size()));
        const Tensor& logits = tape.tensor(pool_and_project(tape, model, h));
        if (task.kind == TaskKind::kClassification) {
            int best = 0;
            for (int c = 1; c < logits.dim(1); ++c) {
                if (logits.at(0, c) > logits.at(0, best)) best = c;
            }
            out.push_back(static_cast<double>(best));
        } else {
            out.push_back(logits.at(0, 0));
        }
    }
    return out;
}

EvalReport evaluate(Model& model, const Vocabulary& vocab, const LabeledData& data,
                    const TaskSpec& task, int max_len) {
    if (data.empty()) throw DataError("evaluate: empty example list");
    task.validate();
    EvalReport report;
    report.metric_name = task.metric_name();
    report.predictions = predict(model, vocab, data, task, max_len);
    report.dev_metric = metric_of(task, report.predictions, data);
    return report;
}

EvalReport finetune(Model& model, const Vocabulary& vocab, const LabeledData& train,
                    const LabeledData& dev, const TaskSpec& task, const FinetuneConfig& cfg) {
    cfg.validate();
    task.validate();
    if (train.empty()) throw ConfigError("finetune: empty training set");
    if (dev.empty()) throw ConfigError("finetune: empty dev set");
    task.validate_labels(train);
    task.validate_labels(dev);

    if (!model.task_head) add_task_head(model, task.output_dim(), cfg.seed);
    const std::vector<Parameter*> params = collect_parameters(model);
    set_trainable(params, true);
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    AdamState adam(params, adam_cfg);

    const std::vector<PreparedExample> prepared = prepare(train, vocab, cfg.max_len);
    std::vector<std::size_t> order(prepared.size());
    std::iota(order.begin(), order.end(), 0);

    EvalReport report;
    report.metric_name = task.metric_name();
    std::vector<Tensor> best_values = snapshot_values(params);
    double best_metric = -std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 rng = seeded_rng(cfg.seed, "finetune.shuffle." + std::to_string(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_acc = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Tape tape;
            std::vector<Value> losses;
            for (std::size_t i = start; i < end; ++i) {
                losses.push_back(example_loss(tape, model, prepared[order[i]], task));
            }
            Value loss = tape.mean(losses);
            tape.backward(loss);
            adam.step();
            loss_acc += tape.scalar(loss) * static_cast<double>(end - start);
            seen += end - start;
        }

        EpochMetric em;
        em.epoch = epoch;
        em.train_loss = loss_acc / static_cast<double>(seen);
        em.train_metric = metric_of(task, predict(model, vocab, train, task, cfg.max_len), train);
        em.dev_metric = metric_of(task, predict(model, vocab, dev, task, cfg.max_len), dev);
        report.history.push_back(em);

        if (em.dev_metric > best_metric) {
            best_metric = em.dev_metric;
            best_values = snapshot_values(params);
            report.best_epoch = epoch;
            report.train_metric = em.train_metric;
        }
    }

    restore_values(params, best_values);
    report.dev_metric = best_metric;
    report.predictions = predict(model, vocab, dev, task, cfg.max_len);
    return report;
}

ComparisonTable compare_baseline(const TransformerBody& body, const HydraHeads& heads,
                                 const Vocabulary& vocab, const LabeledData& train,
                                 const LabeledData& dev, const TaskSpec& task,
                                 const std::vector<std::uint64_t>& seeds,
                                 const FinetuneConfig& cfg) {
    if (seeds.size() < 3) {
        throw ConfigError("compare: need >= 3 seeds, got " + std::to_string(seeds.size()));
    }
    ComparisonTable table;
    table.metric_name = task.metric_name();

    const std::vector<std::string> variants = {"body_only", "fresh_layer", "hydra"};
    for (const std::string& variant : variants) {
        double mean = 0.0;
        for (std::uint64_t seed : seeds) {
            Model model;
            if (variant == "body_only") {
                model = body_only_model(body);
            } else if (variant == "fresh_layer") {
                model = attach_fresh_layer(body, seed);
            } else {
                model = attach_hydra(body, heads, seed);
            }
            FinetuneConfig run_cfg = cfg;
            run_cfg.seed = seed;
            const EvalReport r = finetune(model, vocab, train, dev, task, run_cfg);
            table.rows.push_back({variant, seed, r.dev_metric, r.train_metric});
            mean += r.dev_metric;
        }
        table.variant_means.emplace_back(variant, mean / static_cast<double>(seeds.size()));
    }
    return table;
}

}  // namespace hydra
