#include "hydra/runconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hydra/errors.hpp"
#include "hydra/util.hpp"

namespace hydra {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

int parse_int_value(const std::string& key, const std::string& value) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key \"" + key + "\": expected integer, got \"" + value + "\"");
    }
    return out;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key \"" + key + "\": expected unsigned integer, got \"" +
                          value + "\"");
    }
    return out;
}

double parse_double_value(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key \"" + key + "\": expected real, got \"" + value + "\"");
    }
}

bool parse_bool_value(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config key \"" + key + "\": expected true or false, got \"" + value +
                      "\"");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string double_text(double d) {
    std::ostringstream out;
    out << d;
    return out.str();
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + " line " + std::to_string(line_no) +
                              ": expected \"key = value\"");
        }
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "model.d_model") {
        d_model = parse_int_value(key, value);
    } else if (key == "model.n_heads") {
        n_heads = parse_int_value(key, value);
    } else if (key == "model.n_body_layers") {
        n_body_layers = parse_int_value(key, value);
    } else if (key == "model.d_ff") {
        d_ff = parse_int_value(key, value);
    } else if (key == "model.max_len") {
        max_len = parse_int_value(key, value);
    } else if (key == "vocab.cutoff") {
        vocab_cutoff = parse_int_value(key, value);
    } else if (key == "seed") {
        seed = parse_u64_value(key, value);
    } else if (key == "pretrain.epochs") {
        pretrain_epochs = parse_int_value(key, value);
    } else if (key == "pretrain.batch_size") {
        pretrain_batch_size = parse_int_value(key, value);
    } else if (key == "pretrain.lr") {
        pretrain_lr = parse_double_value(key, value);
    } else if (key == "pretrain.row_softmax") {
        pretrain_row_softmax = parse_bool_value(key, value);
    } else if (key == "pretrain.closure") {
        pretrain_closure = parse_bool_value(key, value);
    } else if (key == "pretrain.clip_norm") {
        pretrain_clip_norm = parse_double_value(key, value);
    } else if (key == "finetune.epochs") {
        finetune_epochs = parse_int_value(key, value);
    } else if (key == "finetune.batch_size") {
        finetune_batch_size = parse_int_value(key, value);
    } else if (key == "finetune.lr") {
        finetune_lr = parse_double_value(key, value);
    } else {
        throw ConfigError("unknown config key \"" + key + "\"");
    }
}

ModelConfig RunConfig::model_config(int vocab_size) const {
    ModelConfig mc;
    mc.vocab_size = vocab_size;
    mc.d_model = d_model;
    mc.n_heads = n_heads;
    mc.n_body_layers = n_body_layers;
    mc.d_ff = d_ff;
    mc.max_len = max_len;
    return mc;
}

PretrainConfig RunConfig::pretrain_config() const {
    PretrainConfig pc;
    pc.epochs = pretrain_epochs;
    pc.batch_size = pretrain_batch_size;
    pc.learning_rate = pretrain_lr;
    pc.seed = seed;
    pc.max_len = max_len;
    pc.row_softmax = pretrain_row_softmax;
    pc.closure_targets = pretrain_closure;
    pc.clip_norm = pretrain_clip_norm;
    return pc;
}

FinetuneConfig RunConfig::finetune_config() const {
    FinetuneConfig fc;
    fc.epochs = finetune_epochs;
    fc.batch_size = finetune_batch_size;
    fc.learning_rate = finetune_lr;
    fc.seed = seed;
    fc.max_len = max_len;
    return fc;
}

std::string RunConfig::canonical_text() const {
    std::ostringstream out;
    out << "model.d_model = " << d_model << '\n'
        << "model.n_heads = " << n_heads << '\n'
        << "model.n_body_layers = " << n_body_layers << '\n'
        << "model.d_ff = " << d_ff << '\n'
        << "model.max_len = " << max_len << '\n'
        << "vocab.cutoff = " << vocab_cutoff << '\n'
        << "seed = " << seed << '\n'
        << "pretrain.epochs = " << pretrain_epochs << '\n'
        << "pretrain.batch_size = " << pretrain_batch_size << '\n'
        << "pretrain.lr = " << double_text(pretrain_lr) << '\n'
        << "pretrain.row_softmax = " << bool_text(pretrain_row_softmax) << '\n'
        << "pretrain.closure = " << bool_text(pretrain_closure) << '\n'
        << "pretrain.clip_norm = " << double_text(pretrain_clip_norm) << '\n'
        << "finetune.epochs = " << finetune_epochs << '\n'
        << "finetune.batch_size = " << finetune_batch_size << '\n'
        << "finetune.lr = " << double_text(finetune_lr) << '\n';
    return out.str();
}

std::string RunConfig::fingerprint() const { return to_hex(fnv1a64(canonical_text())); }

void RunConfig::write_resolved(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write resolved config: " + path);
    out << canonical_text();
}

}  // namespace hydra
