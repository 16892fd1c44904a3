#include "hydra/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "hydra/errors.hpp"

namespace hydra {

namespace {

using nlohmann::json;

static_assert(sizeof(float) == 4, "checkpoint payload assumes 4-byte floats");

void append_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

json config_to_json(const ModelConfig& c) {
    return json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
                {"n_heads", c.n_heads},       {"n_body_layers", c.n_body_layers},
                {"d_ff", c.d_ff},             {"max_len", c.max_len}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_body_layers = j.at("n_body_layers").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.max_len = j.at("max_len").get<int>();
    return c;
}

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
    for (const CheckpointEntry& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::size_t Checkpoint::payload_floats() const {
    std::size_t n = 0;
    for (const CheckpointEntry& e : entries) n += e.data.size();
    return n;
}

Checkpoint checkpoint_from_params(std::string kind, const ModelConfig& config,
                                  const std::vector<Parameter*>& params) {
    Checkpoint ckpt;
    ckpt.kind = std::move(kind);
    ckpt.config = config;
    ckpt.entries.reserve(params.size());
    for (const Parameter* p : params) {
        CheckpointEntry e;
        e.name = p->name;
        e.shape = p->value.shape;
        e.data.reserve(p->value.data.size());
        for (double v : p->value.data) e.data.push_back(static_cast<float>(v));
        ckpt.entries.push_back(std::move(e));
    }
    return ckpt;
}

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ckpt) {
    json manifest = json::array();
    for (const CheckpointEntry& e : ckpt.entries) {
        if (e.data.size() != shape_numel(e.shape)) {
            throw CheckpointError("entry \"" + e.name + "\": data length " +
                                  std::to_string(e.data.size()) + " does not match shape " +
                                  shape_str(e.shape));
        }
        manifest.push_back(json{{"name", e.name}, {"shape", e.shape}});
    }
    const json header =
        json{{"config", config_to_json(ckpt.config)}, {"entries", manifest}, {"kind", ckpt.kind}};
    const std::string header_text = header.dump();

    std::vector<unsigned char> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
    out.push_back(kCheckpointVersion);
    append_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());
    for (const CheckpointEntry& e : ckpt.entries) {
        const std::size_t at = out.size();
        out.resize(at + e.data.size() * 4);
        std::memcpy(out.data() + at, e.data.data(), e.data.size() * 4);
    }
    return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const std::vector<unsigned char> bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 9) throw CheckpointError(path + ": truncated file (no header)");
    if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
        throw CheckpointError(path + ": bad magic, not a checkpoint file");
    }
    if (bytes[4] != kCheckpointVersion) {
        throw CheckpointError(path + ": unsupported checkpoint version " +
                              std::to_string(static_cast<int>(bytes[4])) + ", expected " +
                              std::to_string(static_cast<int>(kCheckpointVersion)));
    }
    const std::uint32_t header_len = read_u32_le(bytes.data() + 5);
    if (bytes.size() < 9 + static_cast<std::size_t>(header_len)) {
        throw CheckpointError(path + ": truncated file (header cut short)");
    }
    json header;
    try {
        header = json::parse(bytes.begin() + 9, bytes.begin() + 9 + header_len);
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": malformed header: " + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.kind = header.at("kind").get<std::string>();
        ckpt.config = config_from_json(header.at("config"));
        for (const json& je : header.at("entries")) {
            CheckpointEntry e;
            e.name = je.at("name").get<std::string>();
            e.shape = je.at("shape").get<std::vector<int>>();
            ckpt.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": malformed header: " + e.what());
    }

    std::size_t offset = 9 + header_len;
    for (CheckpointEntry& e : ckpt.entries) {
        const std::size_t count = shape_numel(e.shape);
        if (bytes.size() < offset + count * 4) {
            throw CheckpointError(path + ": truncated file (payload for \"" + e.name +
                                  "\" cut short)");
        }
        e.data.resize(count);
        std::memcpy(e.data.data(), bytes.data() + offset, count * 4);
        offset += count * 4;
    }
    if (offset != bytes.size()) {
        throw CheckpointError(path + ": header disagrees with payload size (" +
                              std::to_string(bytes.size() - offset) + " trailing bytes)");
    }
    return ckpt;
}

void load_params(const Checkpoint& ckpt, const std::vector<Parameter*>& params) {
    std::size_t consumed = 0;
    for (Parameter* p : params) {
        const CheckpointEntry* e = ckpt.find(p->name);
        if (e == nullptr) {
            throw CheckpointError("checkpoint has no entry \"" + p->name + "\"");
        }
        if (e->shape != p->value.shape) {
            throw CheckpointError("entry \"" + p->name + "\" has shape " + shape_str(e->shape) +
                                  ", model expects " + shape_str(p->value.shape));
        }
        for (std::size_t i = 0; i < e->data.size(); ++i) {
            p->value.data[i] = static_cast<double>(e->data[i]);
        }
        p->zero_grad();
        ++consumed;
    }
    if (consumed != ckpt.entries.size()) {
        throw CheckpointError("checkpoint has " + std::to_string(ckpt.entries.size()) +
                              " entries but the model consumes only " + std::to_string(consumed));
    }
}

TransformerBody body_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "body") {
        throw CheckpointError("expected a body checkpoint, got kind \"" + ckpt.kind + "\"");
    }
    TransformerBody body = init_body(ckpt.config, 0);
    load_params(ckpt, collect_parameters(body));
    return body;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "model" && ckpt.kind != "body") {
        throw CheckpointError("expected a model checkpoint, got kind \"" + ckpt.kind + "\"");
    }
    bool has_hydra = false;
    const CheckpointEntry* task = nullptr;
    for (const CheckpointEntry& e : ckpt.entries) {
        if (e.name.starts_with("hydra.")) has_hydra = true;
        if (e.name == "task.weight") task = &e;
    }
    TransformerBody body = init_body(ckpt.config, 0);
    Model model =
        has_hydra ? attach_fresh_layer(std::move(body), 0) : body_only_model(std::move(body));
    if (task != nullptr) add_task_head(model, task->shape.at(0), 0);
    load_params(ckpt, collect_parameters(model));
    return model;
}

HydraHeads heads_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "heads") {
        throw CheckpointError("expected a heads-only checkpoint, got kind \"" + ckpt.kind +
                              "\"");
    }
    HydraHeads heads = init_hydra_heads(ckpt.config, 0);
    load_params(ckpt, collect_parameters(heads));
    return heads;
}

}  // namespace hydra
