#include "esnmt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "esnmt/corpus.hpp"

namespace esnmt {

std::size_t default_decode_len(std::span<const SentencePair> pairs) {
  std::size_t longest = 0;
  for (const auto& p : pairs) longest = std::max(longest, p.target.size());
  return longest + 5;
}

double evaluate_bleu(const EsnmtModel& model, std::span<const SentencePair> pairs,
                     std::size_t max_len) {
  const auto src = sources_of(pairs);
  const auto hyp = greedy_decode(model, src, max_len ? max_len : default_decode_len(pairs));
  return corpus_bleu(hyp, targets_of(pairs));
}

std::vector<BleuBucket> evaluate_by_length(const EsnmtModel& model,
                                           std::span<const SentencePair> pairs,
                                           std::span<const std::size_t> edges,
                                           std::size_t max_len) {
  const auto src = sources_of(pairs);
  const auto hyp = greedy_decode(model, src, max_len ? max_len : default_decode_len(pairs));
  std::vector<std::size_t> lengths;
  for (const auto& p : pairs) lengths.push_back(p.source.size());
  return bleu_by_length(hyp, targets_of(pairs), lengths, edges);
}

std::vector<std::size_t> default_bucket_edges(std::size_t max_len) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto e = static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(max_len) / 5.0));
    if (e > 0 && (out.empty() || e > out.back())) out.push_back(e);
  }
  return out;
}

std::vector<AblationRow> run_ablation(const ModelConfig& base, const TrainConfig& train_cfg,
                                      std::span<const SentencePair> train_data,
                                      std::span<const SentencePair> test_data,
                                      std::span<const MaskPreset> presets,
                                      const ProgressFn& progress,
                                      std::vector<EsnmtModel>* models) {
  std::vector<AblationRow> rows;
  for (MaskPreset p : presets) {
    ModelConfig cfg = base;
    cfg.mask = TrainabilityMask::preset(p);
    EsnmtModel model = build_model(cfg);
    if (progress) progress("training " + std::string(to_string(p)));
    TrainResult tr = train(model, train_data, train_cfg);
    AblationRow row;
    row.preset = p;
    row.final_loss = tr.final_loss;
    row.bleu = evaluate_bleu(model, test_data);
    row.trainable = model.params().trainable_count();
    row.frozen = model.params().frozen_count();
    if (progress) {
      std::ostringstream msg;
      msg << to_string(p) << ": bleu " << row.bleu << ", final loss " << row.final_loss;
      progress(msg.str());
    }
    rows.push_back(row);
    if (models) models->push_back(std::move(model));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "preset,bleu,final_loss,trainable_params,frozen_params\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) {
    out << to_string(r.preset) << ',' << r.bleu << ',' << r.final_loss << ',' << r.trainable
        << ',' << r.frozen << '\n';
  }
  out.precision(old);
}

std::vector<SweepRow> fixed_radius_sweep(const ModelConfig& base, std::span<const double> radii,
                                         const TrainConfig& train_cfg,
                                         std::span<const SentencePair> train_data,
                                         std::span<const SentencePair> test_data,
                                         std::span<const std::size_t> edges,
                                         const ProgressFn& progress) {
  std::vector<SweepRow> rows;
  for (double r : radii) {
    ModelConfig cfg = base;
    cfg.fixed_rho = r;
    EsnmtModel model = build_model(cfg);
    if (progress) progress("training with rho fixed at " + std::to_string(r));
    train(model, train_data, train_cfg);
    for (const auto& b : evaluate_by_length(model, test_data, edges)) rows.push_back({r, b});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "radius,bucket_lo,bucket_hi,count,bleu\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) {
    out << r.radius << ',' << r.bucket.lo << ',';
    if (r.bucket.hi == kOpenBucket) {
      out << "inf";
    } else {
      out << r.bucket.hi;
    }
    out << ',' << r.bucket.count << ',' << r.bucket.bleu << '\n';
  }
  out.precision(old);
}

}  // namespace esnmt
