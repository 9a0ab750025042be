#pragma once

// Versioned plain-text artifact formats. Every serializer emits doubles via
// %.17g so identical inputs produce byte-identical files; every parser
// checks the magic/version line first and throws std::runtime_error with
// the offending detail on any mismatch or malformed content.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajpred/anchors.hpp"
#include "trajpred/metrics.hpp"
#include "trajpred/mixture.hpp"
#include "trajpred/model.hpp"
#include "trajpred/synthgen.hpp"

namespace trajpred {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// --- dataset ---------------------------------------------------------------
std::string serialize_dataset(std::span<const ToyScene> scenes);
std::vector<ToyScene> parse_dataset(const std::string& text);

// --- anchors ---------------------------------------------------------------
std::string serialize_anchors(const AnchorSet& set);
AnchorSet parse_anchors(const std::string& text);

// FNV-1a over the serialized form; pairs checkpoints with anchor files.
std::uint64_t anchors_hash(const AnchorSet& set);
std::string hash_hex(std::uint64_t h);

// --- checkpoint --------------------------------------------------------------
struct Checkpoint {
  MlpParams params;
  LossKind loss{LossKind::MultipathHard};
  std::uint64_t anchors_hash{0};
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

// --- training log ------------------------------------------------------------
std::string serialize_train_log(std::span<const TrainLogEntry> log);

// --- evaluation report -------------------------------------------------------
// CSV with three '#'-marked sections (overall, categories, per_step); min
// metrics computed over fewer trajectories than requested are wrapped in
// parentheses.
std::string serialize_report(const Report& report);

// --- occupancy grids ----------------------------------------------------------
std::string serialize_grid(const OccupancyGrid& grid);

}  // namespace trajpred
