#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "pixtok/config_json.hpp"
#include "pixtok/nn.hpp"

namespace pixtok {

// Container layout, all integers little-endian:
//   "PITCKPT1"
//   u64 header length, UTF-8 JSON header (model config + training metadata)
//   repeated until EOF: u32 name length, name, u8 rank, u64 dims[rank],
//                       f32 payload[prod(dims)]
// Optimizer moments and EMA shadows are ordinary tensors named "opt.m.*",
// "opt.v.*" and "ema.*".
inline constexpr char kCheckpointMagic[] = "PITCKPT1";

struct Checkpoint {
  Json header = Json::object();
  ParamList tensors;

  const Tensor* find(const std::string& name) const;
  // Tensors whose names start with `prefix`, prefix stripped.
  ParamList with_prefix(const std::string& prefix) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
// Writes to a temporary sibling and renames, so readers never see a torn file.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// FormatError (with byte offset) on bad magic, truncation or malformed JSON.
Checkpoint read_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint tensors into `params` by name. Every parameter must be
// present with the same shape, otherwise CheckpointMismatch naming it.
void load_parameters(const Checkpoint& ckpt, const ParamList& params);

ModelConfig checkpoint_model_config(const Checkpoint& ckpt);
// Compares architecture fields; `encoder_only` ignores the classifier head
// (num_classes, head mode) and drop path. Throws CheckpointMismatch naming the
// first differing field.
void check_model_compatible(const ModelConfig& expected, const ModelConfig& found,
                            bool encoder_only);

}  // namespace pixtok
