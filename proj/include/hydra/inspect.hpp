#pragma once

#include <string>
#include <vector>

#include "hydra/conllu.hpp"
#include "hydra/model.hpp"
#include "hydra/vocab.hpp"

namespace hydra {

// Sum of mask*(pred-target)^2 / sum(mask) over plain tensors.
double masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask);

struct InspectionResult {
    int n = 0;  // word count (CSV matrices are (n+1) x (n+1) including CLS)
    std::vector<std::string> files;
};

// Writes one CSV of raw attention logits per appended-layer head plus the
// gold relation matrix, all with identical CLS-prefixed row/column labels.
// The model must have the extra layer attached.
InspectionResult write_inspection_csvs(Model& model, const Vocabulary& vocab,
                                       const ParsedSentence& sentence,
                                       const std::string& out_dir);

}  // namespace hydra
