#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "esnmt/bleu.hpp"
#include "esnmt/model.hpp"
#include "esnmt/train.hpp"

namespace esnmt {

// Decode length cap used when max_len is 0: longest reference plus 5.
std::size_t default_decode_len(std::span<const SentencePair> pairs);

double evaluate_bleu(const EsnmtModel& model, std::span<const SentencePair> pairs,
                     std::size_t max_len = 0);
std::vector<BleuBucket> evaluate_by_length(const EsnmtModel& model,
                                           std::span<const SentencePair> pairs,
                                           std::span<const std::size_t> edges,
                                           std::size_t max_len = 0);

// {10, 20, 30, 40} rescaled from a maximum length of 50 to `max_len`.
std::vector<std::size_t> default_bucket_edges(std::size_t max_len);

using ProgressFn = std::function<void(const std::string& message)>;

struct AblationRow {
  MaskPreset preset = MaskPreset::softmax_only;
  double bleu = 0.0;
  double final_loss = 0.0;
  std::uint64_t trainable = 0;
  std::uint64_t frozen = 0;
};

// Trains one model per preset from the same base config and scores the test split.
std::vector<AblationRow> run_ablation(const ModelConfig& base, const TrainConfig& train_cfg,
                                      std::span<const SentencePair> train_data,
                                      std::span<const SentencePair> test_data,
                                      std::span<const MaskPreset> presets = kAllPresets,
                                      const ProgressFn& progress = {},
                                      std::vector<EsnmtModel>* models = nullptr);

// preset,bleu,final_loss,trainable_params,frozen_params
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

struct SweepRow {
  double radius = 0.0;
  BleuBucket bucket;
};

// One model per radius with every rho pinned to it.
std::vector<SweepRow> fixed_radius_sweep(const ModelConfig& base, std::span<const double> radii,
                                         const TrainConfig& train_cfg,
                                         std::span<const SentencePair> train_data,
                                         std::span<const SentencePair> test_data,
                                         std::span<const std::size_t> edges,
                                         const ProgressFn& progress = {});

// radius,bucket_lo,bucket_hi,count,bleu
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace esnmt
