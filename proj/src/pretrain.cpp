#include "hydra/pretrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hydra/adam.hpp"
#include "hydra/checkpoint.hpp"
#include "hydra/errors.hpp"
#include "hydra/util.hpp"

namespace hydra {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct PreparedSentence {
    std::vector<int> ids;  // [CLS] + word ids, unpadded
    SdoiMatrix relation;
};

std::vector<PreparedSentence> prepare(const std::vector<ParsedSentence>& sentences,
                                      const Vocabulary& vocab, const PretrainConfig& cfg,
                                      int& dropped) {
    std::vector<PreparedSentence> out;
    for (const ParsedSentence& s : sentences) {
        if (s.size() == 0 || s.size() > cfg.max_len - 1) {
            ++dropped;
            continue;
        }
        PreparedSentence p;
        p.ids = ids_for_words(s.tokens, vocab);
        p.relation = cfg.closure_targets ? build_sdoi_closure(s) : build_sdoi(s);
        out.push_back(std::move(p));
    }
    return out;
}

// Frozen-body hidden states are computed outside the training tape and enter
// it as constants, so no gradient can reach the body.
Tensor frozen_hidden(TransformerBody& body, const std::vector<int>& padded, int real_len) {
    Tape tape(false);
    return tape.tensor(body_encode(tape, body, padded, real_len));
}

Value batch_loss(Tape& tape, TransformerBody& body, HydraHeads& heads,
                 const std::vector<const PreparedSentence*>& batch, const PretrainConfig& cfg) {
    int s_max = 0;
    for (const PreparedSentence* p : batch) {
        s_max = std::max(s_max, static_cast<int>(p->ids.size()));
    }
    std::vector<Value> item_losses;
    item_losses.reserve(batch.size());
    for (const PreparedSentence* p : batch) {
        std::vector<int> padded = p->ids;
        padded.resize(static_cast<std::size_t>(s_max), Vocabulary::kPad);
        const int real_len = static_cast<int>(p->ids.size());
        Value hidden = tape.leaf(frozen_hidden(body, padded, real_len));
        const AlignedTarget aligned = align_sdoi_to_tokens(p->relation, s_max);
        item_losses.push_back(hydra_sdoi_loss(tape, heads, hidden, aligned.target, aligned.mask,
                                              body.config.n_heads, cfg.row_softmax));
    }
    return tape.mean(item_losses);
}

double dataset_loss(TransformerBody& body, HydraHeads& heads,
                    const std::vector<PreparedSentence>& data, const PretrainConfig& cfg) {
    if (data.empty()) return 0.0;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
        std::vector<const PreparedSentence*> batch;
        for (std::size_t i = start; i < std::min(data.size(), start + cfg.batch_size); ++i) {
            batch.push_back(&data[i]);
        }
        Tape tape(false);
        acc += tape.scalar(batch_loss(tape, body, heads, batch, cfg)) * batch.size();
        count += batch.size();
    }
    return acc / static_cast<double>(count);
}

}  // namespace

void PretrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("pretrain config: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("pretrain config: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("pretrain config: learning rate must be > 0");
    if (max_len < 2) throw ConfigError("pretrain config: max_len must be >= 2");
}

CorpusSplit split_corpus(const std::vector<ParsedSentence>& corpus, double val_fraction) {
    CorpusSplit split;
    const auto threshold = static_cast<std::uint64_t>(val_fraction * 1000.0);
    for (const ParsedSentence& s : corpus) {
        std::string key;
        for (const std::string& t : s.tokens) {
            key += t;
            key += '\x1f';
        }
        if (fnv1a64(key) % 1000 < threshold) {
            split.val.push_back(s);
        } else {
            split.train.push_back(s);
        }
    }
    return split;
}

Value hydra_sdoi_loss(Tape& tape, HydraHeads& heads, Value hidden, const Tensor& target,
                      const Tensor& mask, int n_heads, bool row_softmax) {
    const int d = tape.tensor(hidden).dim(1);
    const int d_k = d / n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k));

    Value q = tape.add_row_bias(tape.matmul(hidden, tape.transpose(tape.param(heads.wq.weight))),
                                tape.param(heads.wq.bias));
    Value k = tape.add_row_bias(tape.matmul(hidden, tape.transpose(tape.param(heads.wk.weight))),
                                tape.param(heads.wk.bias));
    std::vector<Value> head_losses;
    head_losses.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        Value qh = tape.slice_cols(q, h * d_k, d_k);
        Value kh = tape.slice_cols(k, h * d_k, d_k);
        Value logits = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt_dk);
        if (row_softmax) logits = tape.softmax_rows(logits);
        head_losses.push_back(tape.mse_masked(logits, target, mask));
    }
    return tape.mean(head_losses);
}

double initial_loss_estimate(const std::vector<ParsedSentence>& sample, bool closure_targets) {
    if (sample.empty()) {
        throw ConfigError("initial_loss_estimate: need at least one sentence");
    }
    double acc = 0.0;
    for (const ParsedSentence& s : sample) {
        const SdoiMatrix m = closure_targets ? build_sdoi_closure(s) : build_sdoi(s);
        acc += static_cast<double>(m.ones_count()) / (static_cast<double>(m.n) * m.n);
    }
    return acc / static_cast<double>(sample.size());
}

std::pair<HydraHeads, PretrainReport> pretrain_heads(TransformerBody& body,
                                                     const Vocabulary& vocab,
                                                     const CorpusSplit& split,
                                                     const PretrainConfig& cfg) {
    cfg.validate();
    const auto t_start = Clock::now();

    PretrainReport report;
    std::vector<PreparedSentence> train =
        prepare(split.train, vocab, cfg, report.sentences_dropped);
    std::vector<PreparedSentence> val = prepare(split.val, vocab, cfg, report.sentences_dropped);
    report.sentences_used = static_cast<int>(train.size() + val.size());
    if (train.empty()) {
        throw ConfigError("pretrain: no training sentence fits max_len " +
                          std::to_string(cfg.max_len) + " after filtering");
    }
    for (const PreparedSentence& p : train) {
        report.initial_estimate += static_cast<double>(p.relation.ones_count()) /
                                   (static_cast<double>(p.relation.n) * p.relation.n);
    }
    report.initial_estimate /= static_cast<double>(train.size());

    set_trainable(collect_parameters(body), false);
    HydraHeads heads = init_hydra_heads(body.config, cfg.seed);
    const std::vector<Parameter*> qk = collect_parameters(heads);
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    AdamState adam(qk, adam_cfg);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t_epoch = Clock::now();
        std::mt19937_64 rng = seeded_rng(cfg.seed, "pretrain.shuffle." + std::to_string(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_acc = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<const PreparedSentence*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
                batch.push_back(&train[order[i]]);
            }
            Tape tape;
            Value loss = batch_loss(tape, body, heads, batch, cfg);
            tape.backward(loss);
            clip_global_grad_norm(qk, cfg.clip_norm);
            adam.step();
            loss_acc += tape.scalar(loss) * batch.size();
            seen += batch.size();
        }

        PretrainEpoch e;
        e.epoch = epoch;
        e.train_loss = loss_acc / static_cast<double>(seen);
        e.val_loss = val.empty() ? e.train_loss : dataset_loss(body, heads, val, cfg);
        e.seconds = seconds_since(t_epoch);
        report.epochs.push_back(e);
    }

    report.total_seconds = seconds_since(t_start);
    return {std::move(heads), std::move(report)};
}

void export_heads(HydraHeads& heads, const ModelConfig& config, const std::string& path) {
    save_checkpoint(checkpoint_from_params("heads", config, collect_parameters(heads)), path);
}

}  // namespace hydra
