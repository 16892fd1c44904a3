#pragma once

#include <string>

#include "hydra/finetune.hpp"
#include "hydra/model.hpp"
#include "hydra/pretrain.hpp"

namespace hydra {

// Declarative run configuration: a flat "key = value" UTF-8 document plus
// command-line overrides. Unknown keys are rejected; every run writes its
// fully resolved document next to its outputs.
struct RunConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_body_layers = 2;
    int d_ff = 256;
    int max_len = 64;
    int vocab_cutoff = 2;
    std::uint64_t seed = 42;

    int pretrain_epochs = 2;
    int pretrain_batch_size = 8;
    double pretrain_lr = 2e-3;
    bool pretrain_row_softmax = false;
    bool pretrain_closure = false;
    double pretrain_clip_norm = 1.0;

    int finetune_epochs = 20;
    int finetune_batch_size = 8;
    double finetune_lr = 3e-4;

    static RunConfig from_file(const std::string& path);

    // key like "model.d_model"; throws ConfigError naming unknown keys.
    void set(const std::string& key, const std::string& value);

    ModelConfig model_config(int vocab_size) const;
    PretrainConfig pretrain_config() const;
    FinetuneConfig finetune_config() const;

    // Canonical form: every key in a fixed order. Fingerprints and the
    // resolved-config files both come from this text.
    std::string canonical_text() const;
    std::string fingerprint() const;
    void write_resolved(const std::string& path) const;
};

}  // namespace hydra
