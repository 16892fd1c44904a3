#include "hydra/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hydra/errors.hpp"
#include "hydra/util.hpp"

namespace hydra {

namespace {

constexpr double kMaskedLogit = -1e9;

Tensor uniform_init(std::vector<int> shape, double bound, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
    return t;
}

Linear make_linear(const std::string& name, int out, int in, std::mt19937_64& rng) {
    Linear l;
    l.weight = Parameter(name + ".weight", uniform_init({out, in}, 1.0 / std::sqrt(in), rng));
    l.bias = Parameter(name + ".bias", Tensor::zeros({out}));
    return l;
}

LayerNormParams make_layer_norm(const std::string& name, int d) {
    LayerNormParams ln;
    ln.gain = Parameter(name + ".gain", Tensor::full({d}, 1.0));
    ln.bias = Parameter(name + ".bias", Tensor::zeros({d}));
    return ln;
}

EncoderLayer make_encoder_layer(const std::string& prefix, const ModelConfig& cfg,
                                std::mt19937_64& rng) {
    EncoderLayer layer;
    layer.attn.wq = make_linear(prefix + ".attn.wq", cfg.d_model, cfg.d_model, rng);
    layer.attn.wk = make_linear(prefix + ".attn.wk", cfg.d_model, cfg.d_model, rng);
    layer.attn.wv = make_linear(prefix + ".attn.wv", cfg.d_model, cfg.d_model, rng);
    layer.attn.wo = make_linear(prefix + ".attn.wo", cfg.d_model, cfg.d_model, rng);
    layer.ffn.w1 = make_linear(prefix + ".ffn.w1", cfg.d_ff, cfg.d_model, rng);
    layer.ffn.w2 = make_linear(prefix + ".ffn.w2", cfg.d_model, cfg.d_ff, rng);
    layer.ln1 = make_layer_norm(prefix + ".ln1", cfg.d_model);
    layer.ln2 = make_layer_norm(prefix + ".ln2", cfg.d_model);
    return layer;
}

void collect_linear(Linear& l, std::vector<Parameter*>& out) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
}

void collect_layer(EncoderLayer& layer, std::vector<Parameter*>& out) {
    collect_linear(layer.attn.wq, out);
    collect_linear(layer.attn.wk, out);
    collect_linear(layer.attn.wv, out);
    collect_linear(layer.attn.wo, out);
    collect_linear(layer.ffn.w1, out);
    collect_linear(layer.ffn.w2, out);
    out.push_back(&layer.ln1.gain);
    out.push_back(&layer.ln1.bias);
    out.push_back(&layer.ln2.gain);
    out.push_back(&layer.ln2.bias);
}

Value linear_forward(Tape& t, Linear& l, Value x) {
    return t.add_row_bias(t.matmul(x, t.transpose(t.param(l.weight))), t.param(l.bias));
}

Value body_encode_with_bias(Tape& tape, TransformerBody& body, const std::vector<int>& ids,
                            const Tensor& attn_bias) {
    const int s = static_cast<int>(ids.size());
    if (s == 0) throw std::invalid_argument("body_encode: empty id sequence");
    if (s > body.config.max_len) {
        throw DataError("sequence of length " + std::to_string(s) + " exceeds max_len " +
                        std::to_string(body.config.max_len));
    }
    Value tok = tape.embedding_rows(tape.param(body.tok_emb), ids);
    std::vector<int> positions(static_cast<std::size_t>(s));
    std::iota(positions.begin(), positions.end(), 0);
    Value pos = tape.embedding_rows(tape.param(body.pos_emb), positions);
    Value x = tape.add(tok, pos);
    for (EncoderLayer& layer : body.layers) {
        x = encoder_layer_forward(tape, layer, x, body.config.n_heads, attn_bias);
    }
    return x;
}

}  // namespace

void ModelConfig::validate() const {
    if (vocab_size <= 0 || d_model <= 0 || n_heads <= 0 || n_body_layers <= 0 || d_ff <= 0) {
        throw ConfigError("model config: all dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("model config: d_model " + std::to_string(d_model) +
                          " not divisible by n_heads " + std::to_string(n_heads));
    }
    if (max_len < 2) {
        throw ConfigError("model config: max_len must be >= 2, got " + std::to_string(max_len));
    }
}

TransformerBody init_body(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng = seeded_rng(seed, "body");
    TransformerBody body;
    body.config = config;
    body.tok_emb = Parameter(
        "embed.token",
        uniform_init({config.vocab_size, config.d_model}, 1.0 / std::sqrt(config.d_model), rng));
    body.pos_emb = Parameter(
        "embed.pos",
        uniform_init({config.max_len, config.d_model}, 1.0 / std::sqrt(config.d_model), rng));
    body.layers.reserve(static_cast<std::size_t>(config.n_body_layers));
    for (int i = 0; i < config.n_body_layers; ++i) {
        body.layers.push_back(make_encoder_layer("body." + std::to_string(i), config, rng));
    }
    return body;
}

HydraHeads init_hydra_heads(const ModelConfig& config, std::uint64_t seed, double init_bound) {
    config.validate();
    std::mt19937_64 rng = seeded_rng(seed, "hydra.qk");
    HydraHeads heads;
    heads.wq.weight = Parameter("hydra.attn.wq.weight",
                                uniform_init({config.d_model, config.d_model}, init_bound, rng));
    heads.wq.bias = Parameter("hydra.attn.wq.bias", Tensor::zeros({config.d_model}));
    heads.wk.weight = Parameter("hydra.attn.wk.weight",
                                uniform_init({config.d_model, config.d_model}, init_bound, rng));
    heads.wk.bias = Parameter("hydra.attn.wk.bias", Tensor::zeros({config.d_model}));
    return heads;
}

Model attach_hydra(TransformerBody body, const HydraHeads& heads, std::uint64_t seed) {
    const ModelConfig& cfg = body.config;
    const std::vector<int> expect_w = {cfg.d_model, cfg.d_model};
    const std::vector<int> expect_b = {cfg.d_model};
    if (heads.wq.weight.value.shape != expect_w || heads.wk.weight.value.shape != expect_w ||
        heads.wq.bias.value.shape != expect_b || heads.wk.bias.value.shape != expect_b) {
        throw ConfigError("attach_hydra: head shapes " + shape_str(heads.wq.weight.value.shape) +
                          " incompatible with d_model " + std::to_string(cfg.d_model));
    }
    Model model;
    model.body = std::move(body);

    std::mt19937_64 rng = seeded_rng(seed, "hydra.extras");
    EncoderLayer layer;
    layer.attn.wq.weight = Parameter("hydra.attn.wq.weight", heads.wq.weight.value);
    layer.attn.wq.bias = Parameter("hydra.attn.wq.bias", heads.wq.bias.value);
    layer.attn.wk.weight = Parameter("hydra.attn.wk.weight", heads.wk.weight.value);
    layer.attn.wk.bias = Parameter("hydra.attn.wk.bias", heads.wk.bias.value);
    layer.attn.wv = make_linear("hydra.attn.wv", cfg.d_model, cfg.d_model, rng);
    layer.attn.wo = make_linear("hydra.attn.wo", cfg.d_model, cfg.d_model, rng);
    layer.ffn.w1 = make_linear("hydra.ffn.w1", cfg.d_ff, cfg.d_model, rng);
    layer.ffn.w2 = make_linear("hydra.ffn.w2", cfg.d_model, cfg.d_ff, rng);
    layer.ln1 = make_layer_norm("hydra.ln1", cfg.d_model);
    layer.ln2 = make_layer_norm("hydra.ln2", cfg.d_model);
    model.hydra = std::move(layer);
    return model;
}

Model attach_fresh_layer(TransformerBody body, std::uint64_t seed) {
    const HydraHeads fresh = init_hydra_heads(body.config, seed);
    return attach_hydra(std::move(body), fresh, seed);
}

Model body_only_model(TransformerBody body) {
    Model model;
    model.body = std::move(body);
    return model;
}

void add_task_head(Model& model, int num_classes, std::uint64_t seed) {
    if (num_classes < 1) {
        throw ConfigError("task head: need at least one output, got " +
                          std::to_string(num_classes));
    }
    std::mt19937_64 rng = seeded_rng(seed, "task");
    model.task_head = make_linear("task", num_classes, model.config().d_model, rng);
}

std::vector<Parameter*> collect_parameters(TransformerBody& body) {
    std::vector<Parameter*> out;
    out.push_back(&body.tok_emb);
    out.push_back(&body.pos_emb);
    for (EncoderLayer& layer : body.layers) collect_layer(layer, out);
    return out;
}

std::vector<Parameter*> collect_parameters(Model& model) {
    std::vector<Parameter*> out = collect_parameters(model.body);
    if (model.hydra) collect_layer(*model.hydra, out);
    if (model.task_head) collect_linear(*model.task_head, out);
    return out;
}

std::vector<Parameter*> collect_parameters(HydraHeads& heads) {
    return {&heads.wq.weight, &heads.wq.bias, &heads.wk.weight, &heads.wk.bias};
}

void set_trainable(const std::vector<Parameter*>& params, bool trainable) {
    for (Parameter* p : params) p->trainable = trainable;
}

Tensor padding_attention_bias(int s, int real_len) {
    Tensor bias({s, s});
    for (int i = 0; i < s; ++i)
        for (int j = real_len; j < s; ++j) bias.at(i, j) = kMaskedLogit;
    return bias;
}

Value encoder_layer_forward(Tape& tape, EncoderLayer& layer, Value x, int n_heads,
                            const Tensor& attn_bias) {
    const int d = tape.tensor(x).dim(1);
    const int d_k = d / n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k));

    Value q = linear_forward(tape, layer.attn.wq, x);
    Value k = linear_forward(tape, layer.attn.wk, x);
    Value v = linear_forward(tape, layer.attn.wv, x);

    std::vector<Value> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        Value qh = tape.slice_cols(q, h * d_k, d_k);
        Value kh = tape.slice_cols(k, h * d_k, d_k);
        Value vh = tape.slice_cols(v, h * d_k, d_k);
        Value scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt_dk);
        scores = tape.add_const(scores, attn_bias);
        Value attn = tape.softmax_rows(scores);
        head_outputs.push_back(tape.matmul(attn, vh));
    }
    Value ctx = tape.concat_cols(head_outputs);
    Value attn_out = linear_forward(tape, layer.attn.wo, ctx);
    Value h1 = tape.layer_norm(tape.add(x, attn_out), tape.param(layer.ln1.gain),
                               tape.param(layer.ln1.bias));
    Value ff = linear_forward(tape, layer.ffn.w2,
                              tape.gelu(linear_forward(tape, layer.ffn.w1, h1)));
    return tape.layer_norm(tape.add(h1, ff), tape.param(layer.ln2.gain),
                           tape.param(layer.ln2.bias));
}

Value body_encode(Tape& tape, TransformerBody& body, const std::vector<int>& ids, int real_len) {
    return body_encode_with_bias(tape, body, ids,
                                 padding_attention_bias(static_cast<int>(ids.size()), real_len));
}

Value model_encode(Tape& tape, Model& model, const std::vector<int>& ids, int real_len) {
    Value h = body_encode(tape, model.body, ids, real_len);
    if (model.hydra) {
        const Tensor bias = padding_attention_bias(static_cast<int>(ids.size()), real_len);
        h = encoder_layer_forward(tape, *model.hydra, h, model.config().n_heads, bias);
    }
    return h;
}

Value pool_and_project(Tape& tape, Model& model, Value h_last) {
    if (!model.task_head) throw ConfigError("pool_and_project: model has no task head");
    Value cls = tape.slice_rows(h_last, 0, 1);
    return linear_forward(tape, *model.task_head, cls);
}

Tensor body_forward(TransformerBody& body, const Tensor& ids, const Tensor& pad_mask) {
    if (ids.rank() != 2 || !ids.same_shape(pad_mask)) {
        throw std::invalid_argument("body_forward: ids " + shape_str(ids.shape) +
                                    " and pad_mask " + shape_str(pad_mask.shape) +
                                    " must be equal rank-2 shapes");
    }
    const int b = ids.dim(0), s = ids.dim(1);
    if (s > body.config.max_len) {
        throw DataError("sequence of length " + std::to_string(s) + " exceeds max_len " +
                        std::to_string(body.config.max_len));
    }
    Tensor out({b, s, body.config.d_model});
    for (int item = 0; item < b; ++item) {
        std::vector<int> id_row(static_cast<std::size_t>(s));
        Tensor bias({s, s});
        for (int j = 0; j < s; ++j) {
            id_row[static_cast<std::size_t>(j)] = static_cast<int>(ids.at(item, j));
            const double mv = pad_mask.at(item, j);
            if (mv != 0.0 && mv != 1.0) {
                throw std::invalid_argument("body_forward: pad_mask entries must be 0 or 1");
            }
            if (mv == 0.0) {
                for (int i = 0; i < s; ++i) bias.at(i, j) = kMaskedLogit;
            }
        }
        Tape tape(false);
        const Tensor& h = tape.tensor(body_encode_with_bias(tape, body, id_row, bias));
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < body.config.d_model; ++j) out.at(item, i, j) = h.at(i, j);
    }
    return out;
}

Tensor hydra_logits(const HydraHeads& heads, int n_heads, const Tensor& h, int head) {
    if (h.rank() != 2) {
        throw std::invalid_argument("hydra_logits: expected [s x d] hidden state, got " +
                                    shape_str(h.shape));
    }
    const int d = h.dim(1);
    if (heads.wq.weight.value.dim(1) != d) {
        throw std::invalid_argument("hydra_logits: hidden width " + std::to_string(d) +
                                    " does not match heads " +
                                    shape_str(heads.wq.weight.value.shape));
    }
    if (head < 0 || head >= n_heads) {
        throw std::out_of_range("hydra_logits: head " + std::to_string(head) + " outside [0, " +
                                std::to_string(n_heads) + ")");
    }
    const int d_k = d / n_heads;
    Tape tape(false);
    Value hx = tape.leaf(h);
    Value q = tape.add_row_bias(tape.matmul(hx, tape.transpose(tape.leaf(heads.wq.weight.value))),
                                tape.leaf(heads.wq.bias.value));
    Value k = tape.add_row_bias(tape.matmul(hx, tape.transpose(tape.leaf(heads.wk.weight.value))),
                                tape.leaf(heads.wk.bias.value));
    Value qh = tape.slice_cols(q, head * d_k, d_k);
    Value kh = tape.slice_cols(k, head * d_k, d_k);
    Value m = tape.scale(tape.matmul(qh, tape.transpose(kh)),
                         1.0 / std::sqrt(static_cast<double>(d_k)));
    return tape.tensor(m);
}

Tensor hydra_logits_batch(const HydraHeads& heads, int n_heads, const Tensor& h, int head) {
    if (h.rank() != 3) {
        throw std::invalid_argument("hydra_logits_batch: expected [b x s x d], got " +
                                    shape_str(h.shape));
    }
    const int b = h.dim(0), s = h.dim(1), d = h.dim(2);
    Tensor out({b, s, s});
    for (int item = 0; item < b; ++item) {
        Tensor hi({s, d});
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < d; ++j) hi.at(i, j) = h.at(item, i, j);
        const Tensor m = hydra_logits(heads, n_heads, hi, head);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) out.at(item, i, j) = m.at(i, j);
    }
    return out;
}

}  // namespace hydra
