#pragma once

#include <string>
#include <vector>

#include "hydra/model.hpp"

namespace hydra {

// On-disk layout: magic "HYDR", one version byte, a little-endian uint32
// header length, a UTF-8 JSON header {config, entries manifest, kind}, then
// raw little-endian float32 payload in manifest order. Values are stored in
// 32 bits; in-memory math stays 64-bit.
constexpr char kCheckpointMagic[4] = {'H', 'Y', 'D', 'R'};
constexpr unsigned char kCheckpointVersion = 1;

struct CheckpointEntry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::string kind;  // "body", "heads" or "model"
    ModelConfig config;
    std::vector<CheckpointEntry> entries;

    const CheckpointEntry* find(const std::string& name) const;
    std::size_t payload_floats() const;
};

Checkpoint checkpoint_from_params(std::string kind, const ModelConfig& config,
                                  const std::vector<Parameter*>& params);

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ckpt);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Copies entry data into the parameters, matched by name. Every parameter
// must have exactly one entry of the right shape, and no entry may be left
// over; anything else is a CheckpointError.
void load_params(const Checkpoint& ckpt, const std::vector<Parameter*>& params);

TransformerBody body_from_checkpoint(const Checkpoint& ckpt);
Model model_from_checkpoint(const Checkpoint& ckpt);
HydraHeads heads_from_checkpoint(const Checkpoint& ckpt);

}  // namespace hydra
