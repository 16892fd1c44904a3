#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hydra/errors.hpp"
#include "hydra/model.hpp"
#include "test_support.hpp"

using namespace hydra;
using hydra::testing::max_abs_diff;
using hydra::testing::random_tensor;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.vocab_size = 50;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_body_layers = 2;
    c.d_ff = 16;
    c.max_len = 16;
    return c;
}

// Independent count: sum of shape products per module, written from the
// layer composition rather than from collect_parameters.
long long expected_param_count(const ModelConfig& c) {
    const long long d = c.d_model;
    const long long attn = 4 * (d * d + d);
    const long long ffn = (static_cast<long long>(c.d_ff) * d + c.d_ff) + (d * c.d_ff + d);
    const long long norms = 2 * (d + d);
    const long long per_layer = attn + ffn + norms;
    return static_cast<long long>(c.vocab_size) * d + static_cast<long long>(c.max_len) * d +
           c.n_body_layers * per_layer;
}

long long total_elements(const std::vector<Parameter*>& params) {
    long long total = 0;
    for (const Parameter* p : params) total += static_cast<long long>(p->value.numel());
    return total;
}

bool params_equal(const std::vector<Parameter*>& a, const std::vector<Parameter*>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]->name != b[i]->name || !(a[i]->value == b[i]->value)) return false;
    }
    return true;
}

// Explicit loops over tokens and d_k, no tensor ops.
Tensor logits_oracle(const HydraHeads& heads, int n_heads, const Tensor& h, int head) {
    const int s = h.dim(0), d = h.dim(1);
    const int d_k = d / n_heads;
    const int off = head * d_k;
    // q_i = W_q h_i + b_q restricted to this head's rows.
    auto proj = [&](const Linear& lin, int row, int out_idx) {
        double acc = lin.bias.value.at(off + out_idx);
        for (int c = 0; c < d; ++c) acc += lin.weight.value.at(off + out_idx, c) * h.at(row, c);
        return acc;
    };
    Tensor m({s, s});
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            double dot = 0.0;
            for (int x = 0; x < d_k; ++x) dot += proj(heads.wq, i, x) * proj(heads.wk, j, x);
            m.at(i, j) = dot / std::sqrt(static_cast<double>(d_k));
        }
    return m;
}

}  // namespace

TEST_CASE("model config validation") {
    ModelConfig c = small_config();
    c.validate();
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.max_len = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init_body determinism and parameter count") {
    const ModelConfig cfg = small_config();
    TransformerBody a = init_body(cfg, 123);
    TransformerBody b = init_body(cfg, 123);
    CHECK(params_equal(collect_parameters(a), collect_parameters(b)));

    TransformerBody c = init_body(cfg, 124);
    CHECK_FALSE(params_equal(collect_parameters(a), collect_parameters(c)));

    CHECK(total_elements(collect_parameters(a)) == expected_param_count(cfg));

    // Biases zero, weights inside the fan-in bound.
    for (const Parameter* p : collect_parameters(a)) {
        if (p->name.ends_with(".bias") && p->name.find("ln") == std::string::npos) {
            for (double v : p->value.data) CHECK(v == 0.0);
        }
    }
    for (double v : a.layers[0].attn.wq.weight.value.data) {
        CHECK(std::fabs(v) <= 1.0 / std::sqrt(8.0));
    }
}

TEST_CASE("body_forward shape and padding invariance") {
    const ModelConfig cfg = small_config();
    TransformerBody body = init_body(cfg, 7);

    Tensor ids({2, 8});
    Tensor mask({2, 8});
    std::mt19937_64 rng(0);
    std::uniform_int_distribution<int> tok(3, cfg.vocab_size - 1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 8; ++j) {
            ids.at(i, j) = (j < 5) ? tok(rng) : 0.0;
            mask.at(i, j) = (j < 5) ? 1.0 : 0.0;
        }
    const Tensor out = body_forward(body, ids, mask);
    CHECK(out.shape == std::vector<int>{2, 8, cfg.d_model});

    // Change the pad-position token ids; real positions must not move.
    Tensor ids2 = ids;
    for (int i = 0; i < 2; ++i)
        for (int j = 5; j < 8; ++j) ids2.at(i, j) = tok(rng);
    const Tensor out2 = body_forward(body, ids2, mask);
    double diff = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 5; ++j)
            for (int f = 0; f < cfg.d_model; ++f)
                diff = std::max(diff, std::fabs(out.at(i, j, f) - out2.at(i, j, f)));
    CHECK(diff <= 1e-9);
}

TEST_CASE("body_forward batch independence") {
    const ModelConfig cfg = small_config();
    TransformerBody body = init_body(cfg, 8);
    Tensor ids({2, 6});
    Tensor mask = Tensor::full({2, 6}, 1.0);
    for (int j = 0; j < 6; ++j) {
        ids.at(0, j) = 3 + j;
        ids.at(1, j) = 10 + j;
    }
    const Tensor both = body_forward(body, ids, mask);

    Tensor first({1, 6});
    for (int j = 0; j < 6; ++j) first.at(0, j) = ids.at(0, j);
    const Tensor single = body_forward(body, first, Tensor::full({1, 6}, 1.0));
    double diff = 0.0;
    for (int j = 0; j < 6; ++j)
        for (int f = 0; f < cfg.d_model; ++f)
            diff = std::max(diff, std::fabs(both.at(0, j, f) - single.at(0, j, f)));
    CHECK(diff <= 1e-9);
}

TEST_CASE("body_forward rejects over-length sequences and bad ids") {
    const ModelConfig cfg = small_config();
    TransformerBody body = init_body(cfg, 9);
    Tensor ids = Tensor::zeros({1, cfg.max_len + 1});
    Tensor mask = Tensor::full({1, cfg.max_len + 1}, 1.0);
    CHECK_THROWS_AS(body_forward(body, ids, mask), DataError);

    Tensor ids2 = Tensor::full({1, 4}, static_cast<double>(cfg.vocab_size));
    CHECK_THROWS_AS(body_forward(body, ids2, Tensor::full({1, 4}, 1.0)), std::out_of_range);
}

TEST_CASE("forward pass is deterministic") {
    const ModelConfig cfg = small_config();
    TransformerBody body = init_body(cfg, 21);
    Tensor ids = Tensor::from_rows({{2, 5, 9, 13}});
    const Tensor mask = Tensor::full({1, 4}, 1.0);
    CHECK(body_forward(body, ids, mask) == body_forward(body, ids, mask));
}

TEST_CASE("hydra_logits: zero weights give zero logits") {
    const ModelConfig cfg = small_config();
    HydraHeads heads = init_hydra_heads(cfg, 3, 0.0);
    std::mt19937_64 rng(1);
    const Tensor h = random_tensor({5, cfg.d_model}, rng);
    const Tensor m = hydra_logits(heads, cfg.n_heads, h, 0);
    CHECK(m == Tensor::zeros({5, 5}));
}

TEST_CASE("hydra_logits: identity projections give I / sqrt(d_k)") {
    ModelConfig cfg;
    cfg.vocab_size = 10;
    cfg.d_model = 2;
    cfg.n_heads = 1;
    cfg.n_body_layers = 1;
    cfg.d_ff = 4;
    cfg.max_len = 4;
    HydraHeads heads = init_hydra_heads(cfg, 0, 0.0);
    heads.wq.weight.value.at(0, 0) = 1.0;
    heads.wq.weight.value.at(1, 1) = 1.0;
    heads.wk.weight.value = heads.wq.weight.value;

    const Tensor h = Tensor::from_rows({{1, 0}, {0, 1}});
    const Tensor m = hydra_logits(heads, 1, h, 0);
    const double expected = 1.0 / std::sqrt(2.0);
    CHECK(m.at(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(m.at(1, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(m.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(m.at(0, 0) - 0.7071) < 1e-4);
}

TEST_CASE("hydra_logits: head isolation and bounds") {
    const ModelConfig cfg = small_config();
    std::mt19937_64 rng(4);
    HydraHeads heads = init_hydra_heads(cfg, 5, 0.5);
    const Tensor h = random_tensor({4, cfg.d_model}, rng);
    const Tensor m0 = hydra_logits(heads, cfg.n_heads, h, 0);

    // Scribble on the other head's rows; head 0 must not move.
    const int d_k = cfg.d_k();
    for (int r = d_k; r < 2 * d_k; ++r)
        for (int c = 0; c < cfg.d_model; ++c) {
            heads.wq.weight.value.at(r, c) = 99.0;
            heads.wk.weight.value.at(r, c) = -99.0;
        }
    CHECK(hydra_logits(heads, cfg.n_heads, h, 0) == m0);

    CHECK_THROWS_AS(hydra_logits(heads, cfg.n_heads, h, cfg.n_heads), std::out_of_range);
}

TEST_CASE("hydra_logits matches the loop oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed + 40);
        ModelConfig cfg;
        cfg.vocab_size = 10;
        cfg.n_heads = 2;
        cfg.d_model = 2 * (1 + static_cast<int>(seed % 4));  // d_k in 1..4
        cfg.n_body_layers = 1;
        cfg.d_ff = 8;
        cfg.max_len = 8;
        HydraHeads heads = init_hydra_heads(cfg, seed, 0.7);
        for (double& v : heads.wq.bias.value.data) v = 0.1;
        const int s = 2 + static_cast<int>(seed % 4);  // s in 2..5
        const Tensor h = random_tensor({s, cfg.d_model}, rng);
        for (int head = 0; head < cfg.n_heads; ++head) {
            CHECK(max_abs_diff(hydra_logits(heads, cfg.n_heads, h, head),
                               logits_oracle(heads, cfg.n_heads, h, head)) <= 1e-12);
        }
    }
}

TEST_CASE("attach_hydra: layer count, body untouched, shape compatibility") {
    const ModelConfig cfg = small_config();
    TransformerBody body = init_body(cfg, 11);
    std::vector<Tensor> before;
    for (const Parameter* p : collect_parameters(body)) before.push_back(p->value);

    const HydraHeads heads = init_hydra_heads(cfg, 12);
    Model model = attach_hydra(std::move(body), heads, 13);
    CHECK(model.layer_count() == cfg.n_body_layers + 1);

    const std::vector<Parameter*> body_params = collect_parameters(model.body);
    for (std::size_t i = 0; i < body_params.size(); ++i) {
        CHECK(body_params[i]->value == before[i]);
    }

    Model plain = body_only_model(init_body(cfg, 11));
    CHECK(plain.layer_count() == cfg.n_body_layers);

    // Wrong d_model must be refused.
    ModelConfig other = cfg;
    other.d_model = 16;
    other.d_ff = 32;
    const HydraHeads wrong = init_hydra_heads(other, 1);
    CHECK_THROWS_AS(attach_hydra(init_body(cfg, 11), wrong, 2), ConfigError);
}

TEST_CASE("attach variants differ only in appended W_q/W_k") {
    const ModelConfig cfg = small_config();
    const HydraHeads trained = init_hydra_heads(cfg, 99);  // stands in for pretrained values
    Model fresh = attach_fresh_layer(init_body(cfg, 11), 5);
    Model loaded = attach_hydra(init_body(cfg, 11), trained, 5);

    const std::vector<Parameter*> pa = collect_parameters(fresh);
    const std::vector<Parameter*> pb = collect_parameters(loaded);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const bool is_qk = pa[i]->name == "hydra.attn.wq.weight" ||
                           pa[i]->name == "hydra.attn.wq.bias" ||
                           pa[i]->name == "hydra.attn.wk.weight" ||
                           pa[i]->name == "hydra.attn.wk.bias";
        if (is_qk && pa[i]->name.ends_with("weight")) {
            CHECK(pa[i]->value != pb[i]->value);
        } else if (!is_qk) {
            CHECK(pa[i]->value == pb[i]->value);
        }
    }
}

TEST_CASE("attached model with zeroed sublayers reduces to layer norms of H_l") {
    const ModelConfig cfg = small_config();
    Model model = attach_fresh_layer(init_body(cfg, 31), 32);
    // Zero the attention output projection and the feed-forward output.
    model.hydra->attn.wo.weight.value.fill(0.0);
    model.hydra->attn.wo.bias.value.fill(0.0);
    model.hydra->ffn.w2.weight.value.fill(0.0);
    model.hydra->ffn.w2.bias.value.fill(0.0);

    const std::vector<int> ids = {2, 4, 6, 8};
    Tape t1(false);
    const Tensor h_l = t1.tensor(body_encode(t1, model.body, ids, 4));
    Tape t2(false);
    const Tensor h_full = t2.tensor(model_encode(t2, model, ids, 4));

    // Exact route: LN2(LN1(H_l)) with unit gain and zero bias.
    Tape t3(false);
    Value gain = t3.leaf(Tensor::full({cfg.d_model}, 1.0));
    Value bias = t3.leaf(Tensor::zeros({cfg.d_model}));
    const Tensor twice =
        t3.tensor(t3.layer_norm(t3.layer_norm(t3.leaf(h_l), gain, bias), gain, bias));
    CHECK(max_abs_diff(h_full, twice) <= 1e-12);

    // And the double norm is the single norm up to the epsilon correction.
    Tape t4(false);
    Value gain4 = t4.leaf(Tensor::full({cfg.d_model}, 1.0));
    Value bias4 = t4.leaf(Tensor::zeros({cfg.d_model}));
    const Tensor once = t4.tensor(t4.layer_norm(t4.leaf(h_l), gain4, bias4));
    CHECK(max_abs_diff(h_full, once) <= 1e-4);
}

TEST_CASE("pool_and_project") {
    const ModelConfig cfg = small_config();
    Model model = body_only_model(init_body(cfg, 41));
    add_task_head(model, 3, 42);

    const std::vector<int> ids = {2, 7, 9};
    Tape t(false);
    Value h = model_encode(t, model, ids, 3);
    const Tensor logits = t.tensor(pool_and_project(t, model, h));
    CHECK(logits.shape == std::vector<int>{1, 3});

    // Zero task head gives zero logits.
    model.task_head->weight.value.fill(0.0);
    model.task_head->bias.value.fill(0.0);
    Tape t2(false);
    const Tensor zeros = t2.tensor(pool_and_project(t2, model, model_encode(t2, model, ids, 3)));
    CHECK(zeros == Tensor::zeros({1, 3}));

    // Logits read only position 0: project a hidden state, perturb the rest.
    add_task_head(model, 3, 43);
    std::mt19937_64 rng(5);
    Tensor hidden = random_tensor({4, cfg.d_model}, rng);
    Tape t3(false);
    const Tensor a = t3.tensor(pool_and_project(t3, model, t3.leaf(hidden)));
    for (int i = 1; i < 4; ++i)
        for (int j = 0; j < cfg.d_model; ++j) hidden.at(i, j) += 5.0;
    Tape t4(false);
    const Tensor b = t4.tensor(pool_and_project(t4, model, t4.leaf(hidden)));
    CHECK(a == b);

    // Regression heads have a single output.
    add_task_head(model, 1, 44);
    Tape t5(false);
    CHECK(t5.tensor(pool_and_project(t5, model, t5.leaf(hidden))).shape ==
          std::vector<int>{1, 1});
}
