#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esnmt/model.hpp"
#include "esnmt/optimizer.hpp"

namespace esnmt {

// File layout (all integers and floats little-endian):
//   "ESNMTCKP" | u32 version | u8 mode | reservoir spec | architecture |
//   model options | u8 mask bits | u64 optimizer step | u8 has optimizer state |
//   u32 tensor count | records | [optimizer records] | u32 CRC-32 of all prior bytes
// A record is u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64.
inline constexpr char kCheckpointMagic[8] = {'E', 'S', 'N', 'M', 'T', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr const char* kCheckpointExtension = ".esnckpt";

enum class CheckpointMode : std::uint8_t { full = 0, compressed = 1 };

std::string_view to_string(CheckpointMode mode);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  CheckpointMode mode = CheckpointMode::full;
  ModelConfig config;
  std::uint64_t optimizer_step = 0;
  bool has_optimizer_state = false;
  std::uint32_t tensor_count = 0;
};

// Compressed mode stores only trainable tensors and never optimizer state.
std::vector<std::uint8_t> save_checkpoint(const EsnmtModel& model, CheckpointMode mode,
                                          std::uint64_t optimizer_step = 0,
                                          const AdamState* optimizer = nullptr);

struct LoadedCheckpoint {
  CheckpointHeader header;
  EsnmtModel model;
  std::optional<AdamState> optimizer;
};

LoadedCheckpoint load_checkpoint(std::span<const std::uint8_t> bytes);
// Parses and validates only the header fields; no checksum check.
CheckpointHeader read_checkpoint_header(std::span<const std::uint8_t> bytes);

// Exact byte size save_checkpoint would produce (without optimizer state).
std::uint64_t checkpoint_size(const ModelConfig& config, CheckpointMode mode);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

struct TensorDiff {
  std::string name;
  double max_abs_diff = 0.0;
  bool bit_equal = true;
};

struct VerifyReport {
  std::vector<TensorDiff> tensors;

  bool identical() const;
  std::size_t differing() const;
};

// Per-tensor max-abs difference; identical() iff every tensor is bitwise equal.
VerifyReport verify_models(const EsnmtModel& a, const EsnmtModel& b);

}  // namespace esnmt
