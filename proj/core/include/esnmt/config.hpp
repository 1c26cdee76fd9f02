#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "esnmt/corpus.hpp"
#include "esnmt/model.hpp"
#include "esnmt/params.hpp"
#include "esnmt/train.hpp"

namespace esnmt {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Where the parallel data comes from: a generated toy task, or aligned
// whitespace-tokenized text files.
struct DataConfig {
  bool from_files = false;
  ToyTaskSpec toy;
  std::filesystem::path train_source, train_target;
  std::filesystem::path test_source, test_target;
  std::filesystem::path dev_source, dev_target;
};

struct ExperimentConfig {
  std::vector<MaskPreset> presets{kAllPresets.begin(), kAllPresets.end()};
  std::vector<double> radii{0.1, 0.9, 2.0};
  // Empty: derived from the data's maximum length.
  std::vector<std::size_t> bucket_edges;
  // Test sentences scored; 0 means all.
  std::size_t eval_sentences = 0;
};

// Every key maps onto a field of a struct below; vocab_size is derived from
// the loaded corpus and only checked if given.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  ExperimentConfig experiment;
  std::optional<std::uint32_t> vocab_size;
};

// "key = value" per line; '#' starts a comment. Unknown keys, duplicate keys
// and malformed values raise ConfigError naming the key.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Applies one assignment on top of an existing config (used for overrides).
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// "key = value" for every key, in canonical order; parse_config reads it back.
void write_config(std::ostream& out, const RunConfig& config);
std::string config_to_string(const RunConfig& config);

std::vector<std::string> config_keys();

// Preset name when the mask matches one, else components joined by '+'.
std::string mask_to_text(const TrainabilityMask& mask);
TrainabilityMask parse_mask(const std::string& text);

// Corpus described by the data section.
ParallelCorpus load_corpus(const DataConfig& data);

}  // namespace esnmt
