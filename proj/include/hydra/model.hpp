#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hydra/autograd.hpp"
#include "hydra/tensor.hpp"

namespace hydra {

struct ModelConfig {
    int vocab_size = 0;
    int d_model = 64;
    int n_heads = 4;
    int n_body_layers = 2;
    int d_ff = 256;
    int max_len = 64;

    int d_k() const { return d_model / n_heads; }
    void validate() const;  // throws ConfigError
    bool operator==(const ModelConfig&) const = default;
};

// y = x * W^T + b with W stored [out x in].
struct Linear {
    Parameter weight;
    Parameter bias;
};

struct LayerNormParams {
    Parameter gain;
    Parameter bias;
};

struct AttentionParams {
    Linear wq, wk, wv, wo;
};

struct FeedForwardParams {
    Linear w1, w2;
};

struct EncoderLayer {
    AttentionParams attn;
    FeedForwardParams ffn;
    LayerNormParams ln1, ln2;
};

// Query/key projections of the appended layer, fused across heads:
// weight [d_model x d_model], head h owns output rows [h*d_k, (h+1)*d_k).
struct HydraHeads {
    Linear wq, wk;
};

struct TransformerBody {
    ModelConfig config;
    Parameter tok_emb;  // [vocab x d_model]
    Parameter pos_emb;  // [max_len x d_model]
    std::vector<EncoderLayer> layers;
};

// Body plus the optionally attached extra layer and task head.
struct Model {
    TransformerBody body;
    std::optional<EncoderLayer> hydra;
    std::optional<Linear> task_head;

    const ModelConfig& config() const { return body.config; }
    int layer_count() const {
        return body.config.n_body_layers + (hydra.has_value() ? 1 : 0);
    }
};

TransformerBody init_body(const ModelConfig& config, std::uint64_t seed);

// Small-scale init (bound 0.02) keeps initial attention logits near zero, so
// the density-based initial-loss estimate holds.
HydraHeads init_hydra_heads(const ModelConfig& config, std::uint64_t seed,
                            double init_bound = 0.02);

// Appends the extra layer. W_q/W_k come from `heads`; W_v, the output
// projection, the feed-forward and both layer norms are freshly initialized
// from a seed stream independent of the W_q/W_k stream, so models attached
// with different heads agree bitwise everywhere else.
Model attach_hydra(TransformerBody body, const HydraHeads& heads, std::uint64_t seed);
Model attach_fresh_layer(TransformerBody body, std::uint64_t seed);
Model body_only_model(TransformerBody body);

void add_task_head(Model& model, int num_classes, std::uint64_t seed);

std::vector<Parameter*> collect_parameters(TransformerBody& body);
std::vector<Parameter*> collect_parameters(Model& model);
std::vector<Parameter*> collect_parameters(HydraHeads& heads);

void set_trainable(const std::vector<Parameter*>& params, bool trainable);

// --- forward passes -------------------------------------------------------

// Encodes one sequence through the body layers. `real_len` positions are
// real; the rest are padding whose keys get -1e9 attention logits.
Value body_encode(Tape& tape, TransformerBody& body, const std::vector<int>& ids, int real_len);

Value encoder_layer_forward(Tape& tape, EncoderLayer& layer, Value x, int n_heads,
                            const Tensor& attn_bias);

// Body then (if attached) the extra layer.
Value model_encode(Tape& tape, Model& model, const std::vector<int>& ids, int real_len);

// CLS-position affine projection to task logits [1 x c].
Value pool_and_project(Tape& tape, Model& model, Value h_last);

// Additive attention-logit bias [s x s]: column j is -1e9 for j >= real_len.
Tensor padding_attention_bias(int s, int real_len);

// Batched inference encode: ids and pad_mask are [b x s] (ids stored as
// reals), output is [b x s x d_model].
Tensor body_forward(TransformerBody& body, const Tensor& ids, const Tensor& pad_mask);

// Raw scaled attention logits q k^T / sqrt(d_k) of one head; no softmax.
Tensor hydra_logits(const HydraHeads& heads, int n_heads, const Tensor& h, int head);
// Same, batched over [b x s x d] -> [b x s x s].
Tensor hydra_logits_batch(const HydraHeads& heads, int n_heads, const Tensor& h, int head);

}  // namespace hydra
