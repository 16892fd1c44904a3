#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hydra/conllu.hpp"
#include "hydra/model.hpp"
#include "hydra/sdoi.hpp"
#include "hydra/vocab.hpp"

namespace hydra {

struct PretrainConfig {
    int epochs = 2;
    int batch_size = 8;
    double learning_rate = 2e-3;
    std::uint64_t seed = 42;
    int max_len = 64;
    bool row_softmax = false;      // ablation: row-softmax on the logits before the loss
    bool closure_targets = false;  // ancestor-closure relation matrices instead of adjacency
    double clip_norm = 1.0;

    void validate() const;  // throws ConfigError
};

struct PretrainEpoch {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct PretrainReport {
    std::vector<PretrainEpoch> epochs;
    int sentences_used = 0;
    int sentences_dropped = 0;
    double initial_estimate = 0.0;  // density bound evaluated on the training sample
    double total_seconds = 0.0;
};

struct CorpusSplit {
    std::vector<ParsedSentence> train;
    std::vector<ParsedSentence> val;
};

// Deterministic split by hash of the token sequence; a sentence lands in the
// validation set independent of file order.
CorpusSplit split_corpus(const std::vector<ParsedSentence>& corpus, double val_fraction = 0.1);

// Per-sentence pretraining loss: q/k projections of every head, scaled
// attention logits, masked MSE against the relation matrix, mean over heads.
Value hydra_sdoi_loss(Tape& tape, HydraHeads& heads, Value hidden, const Tensor& target,
                      const Tensor& mask, int n_heads, bool row_softmax);

// With zero-ish initial logits the expected starting loss is the density of
// ones in the target matrices.
double initial_loss_estimate(const std::vector<ParsedSentence>& sample,
                             bool closure_targets = false);

// Trains the appended layer's W_q/W_k to regress the relation matrices while
// the body stays frozen (its parameters are bit-identical on exit).
std::pair<HydraHeads, PretrainReport> pretrain_heads(TransformerBody& body,
                                                     const Vocabulary& vocab,
                                                     const CorpusSplit& split,
                                                     const PretrainConfig& cfg);

void export_heads(HydraHeads& heads, const ModelConfig& config, const std::string& path);

}  // namespace hydra
