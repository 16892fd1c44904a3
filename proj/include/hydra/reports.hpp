#pragma once

#include <string>

#include "hydra/finetune.hpp"
#include "hydra/pretrain.hpp"

namespace hydra {

// One JSON record per epoch: {"epoch", "train_loss", "val_loss", "seconds"}.
void write_pretrain_log(const PretrainReport& report, const std::string& path);

std::string eval_report_json(const EvalReport& report, const std::string& task_name,
                             int layer_count);
void write_eval_report(const EvalReport& report, const std::string& task_name, int layer_count,
                       const std::string& path);

std::string comparison_table_json(const ComparisonTable& table);
std::string comparison_table_text(const ComparisonTable& table);
void write_comparison_table(const ComparisonTable& table, const std::string& json_path,
                            const std::string& text_path);

}  // namespace hydra
