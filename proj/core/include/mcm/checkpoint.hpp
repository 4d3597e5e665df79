// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "mcm/data.hpp"
#include "mcm/model.hpp"

namespace mcm {

// Layout, all integers u64 little-endian:
//   "MCM1" u32 version
//   config   : length-prefixed "key=value\n" text
//   vocab    : count, then length-prefixed tokens in id order
//   labels   : count, then length-prefixed names
//   tensors  : count, then per tensor: name, rank, dims, f64 payload
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<Classifier> model;
  Vocabulary vocab;
  LabelSet labels;
};

std::string config_to_text(const ModelConfig& cfg);
/// Throws ConfigError naming the bad key.
ModelConfig config_from_text(const std::string& text);

void write_checkpoint(std::ostream& out, Classifier& model, const Vocabulary& vocab, const LabelSet& labels);
/// Throws LoadError naming the offending field. Nothing is returned unless
/// every field parsed and every tensor matched the rebuilt architecture.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, Classifier& model, const Vocabulary& vocab,
                     const LabelSet& labels);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mcm
