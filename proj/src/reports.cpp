#include "hydra/reports.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hydra/errors.hpp"

namespace hydra {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report: " + path);
    return out;
}

}  // namespace

void write_pretrain_log(const PretrainReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const PretrainEpoch& e : report.epochs) {
        out << json{{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss},
                    {"seconds", e.seconds}}
                   .dump()
            << '\n';
    }
}

std::string eval_report_json(const EvalReport& report, const std::string& task_name,
                             int layer_count) {
    json history = json::array();
    for (const EpochMetric& em : report.history) {
        history.push_back(json{{"epoch", em.epoch},
                               {"train_loss", em.train_loss},
                               {"train_metric", em.train_metric},
                               {"dev_metric", em.dev_metric}});
    }
    const json j{{"task", task_name},
                 {"metric", report.metric_name},
                 {"dev_metric", report.dev_metric},
                 {"train_metric", report.train_metric},
                 {"best_epoch", report.best_epoch},
                 {"layers", layer_count},
                 {"history", history},
                 {"predictions", report.predictions},
                 {"config_fingerprint", report.config_fingerprint}};
    return j.dump(2);
}

void write_eval_report(const EvalReport& report, const std::string& task_name, int layer_count,
                       const std::string& path) {
    open_out(path) << eval_report_json(report, task_name, layer_count) << '\n';
}

std::string comparison_table_json(const ComparisonTable& table) {
    json rows = json::array();
    for (const ComparisonRow& r : table.rows) {
        rows.push_back(json{{"variant", r.variant},
                            {"seed", r.seed},
                            {"dev_metric", r.dev_metric},
                            {"train_metric", r.train_metric}});
    }
    json means = json::object();
    for (const auto& [variant, mean] : table.variant_means) means[variant] = mean;
    const json j{{"metric", table.metric_name},
                 {"rows", rows},
                 {"means", means},
                 {"config_fingerprint", table.config_fingerprint}};
    return j.dump(2);
}

std::string comparison_table_text(const ComparisonTable& table) {
    std::ostringstream out;
    out << std::left << std::setw(14) << "variant" << std::setw(8) << "seed" << std::right
        << std::setw(14) << ("dev_" + table.metric_name) << std::setw(14) << "train" << '\n';
    out << std::string(50, '-') << '\n';
    for (const ComparisonRow& r : table.rows) {
        out << std::left << std::setw(14) << r.variant << std::setw(8) << r.seed << std::right
            << std::setw(14) << std::fixed << std::setprecision(4) << r.dev_metric
            << std::setw(14) << r.train_metric << '\n';
    }
    out << std::string(50, '-') << '\n';
    for (const auto& [variant, mean] : table.variant_means) {
        out << std::left << std::setw(14) << variant << std::setw(8) << "mean" << std::right
            << std::setw(14) << std::fixed << std::setprecision(4) << mean << '\n';
    }
    return out.str();
}

void write_comparison_table(const ComparisonTable& table, const std::string& json_path,
                            const std::string& text_path) {
    open_out(json_path) << comparison_table_json(table) << '\n';
    open_out(text_path) << comparison_table_text(table);
}

}  // namespace hydra
